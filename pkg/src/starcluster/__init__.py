"""One-way quantum computing on a four-photon star cluster.

Resource generation by simulated fusion, H/T/CNOT measurement patterns with
byproduct tracking, state and process tomography from Poissonian counts, and
channel composition.
"""

__version__ = "0.1.0"

from .channels import (
    ChiMatrix, SuperOperator, apply_chi, channel_fidelity, chi_of_unitary, chi_to_superop,
    compose, depolarizing_chi, error_bound, identity_chi, permute_channel_qubits,
    process_fidelity, superop_to_chi, swap_simulation,
)
from .cluster import (
    GraphSpec, NoiseModel, PostselectedState, PostselectionError, fuse, generate_star,
    get_preset, ghz_state, graph_state, star_graph, star_state,
)
from .mbqc import (
    Basis, MeasurementPattern, ZeroProbabilityError, circuit_oracle, encode_probe,
    enumerate_branches, measure, pattern_for, run_pattern,
)
from .qstate import (
    DensityMatrix, PureState, apply_gate, partial_trace, permute_qubits, state_fidelity, tensor,
)
from .tomography import (
    MeasurementRecord, ProcessTomography, StateTomography, fit_chi, mle_state,
    monte_carlo_errors, process_tomography, simulate_counts,
)

__all__ = [
    "Basis", "ChiMatrix", "DensityMatrix", "GraphSpec", "MeasurementPattern",
    "MeasurementRecord", "NoiseModel", "PostselectedState", "PostselectionError",
    "ProcessTomography", "PureState", "StateTomography", "SuperOperator",
    "ZeroProbabilityError", "apply_chi", "apply_gate", "channel_fidelity", "chi_of_unitary",
    "chi_to_superop", "circuit_oracle", "compose", "depolarizing_chi", "encode_probe",
    "enumerate_branches", "error_bound", "fit_chi", "fuse", "generate_star", "get_preset",
    "ghz_state", "graph_state", "identity_chi", "measure", "mle_state", "monte_carlo_errors",
    "partial_trace", "pattern_for", "permute_channel_qubits", "permute_qubits",
    "process_fidelity", "process_tomography", "run_pattern", "simulate_counts", "star_graph",
    "star_state", "state_fidelity", "superop_to_chi", "swap_simulation", "tensor",
]
