"""Count simulation, state and process reconstruction, Monte Carlo error bars."""

from .errors import monte_carlo_errors, monte_carlo_samples
from .estimators import ProcessTomography, StateTomography
from .process import fit_chi, probe_combinations, process_tomography
from .records import (
    MeasurementRecord, born_probabilities, exact_record, outcome_labels, pauli_settings,
    simulate_counts,
)
from .state import DensityEstimate, linear_reconstruct, mle_state, pauli_estimates, project_psd

__all__ = [
    "DensityEstimate", "MeasurementRecord", "ProcessTomography", "StateTomography",
    "born_probabilities", "exact_record", "fit_chi", "linear_reconstruct", "mle_state",
    "monte_carlo_errors", "monte_carlo_samples", "outcome_labels", "pauli_estimates",
    "pauli_settings", "probe_combinations", "process_tomography", "project_psd",
    "simulate_counts",
]
