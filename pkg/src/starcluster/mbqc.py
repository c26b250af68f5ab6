"""One-way computation on the star cluster: measurements, probes, gate patterns.

Qubits are addressed by their resource label (0-based vertex index, so the
star centre is label 2). Measured qubits leave the register; the executor
keeps track of which labels are still alive.
"""

from __future__ import annotations

import itertools
import json
from functools import reduce
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .cluster import (
    GraphSpec, PostselectedState, PostselectionError, graph_state, project, star_graph,
)
from .qstate import (
    CNOT, H, KET, QWP_H, T, X, Z, DensityMatrix, PureState, State, apply_gate,
    as_density, partial_trace, permute_qubits,
)

ZERO_PROBABILITY = 1e-12


class ZeroProbabilityError(ValueError):
    """Raised when an outcome with vanishing probability is forced."""


@dataclass(frozen=True)
class Basis:
    """Single-qubit measurement basis.

    ``kind="B"`` is the equatorial basis ``(|H> +- e^{i angle}|V>)/sqrt(2)``;
    ``kind="Z"`` is ``{|H>, |V>}``. Outcome 0 is the first vector.
    """

    kind: str = "B"
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("B", "Z"):
            raise ValueError(f"unknown basis kind {self.kind!r}")

    def vectors(self, flip: bool = False) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "Z":
            return KET["H"], KET["V"]
        alpha = self.angle + (np.pi if flip else 0.0)
        ph = np.exp(1j * alpha)
        s = 1 / np.sqrt(2)
        return np.array([s, s * ph]), np.array([s, -s * ph])

    def to_json_obj(self):
        return "Z" if self.kind == "Z" else {"B": self.angle}

    @classmethod
    def from_json_obj(cls, obj) -> "Basis":
        if obj == "Z":
            return cls("Z")
        if isinstance(obj, str) and obj in ("X", "Y"):
            return cls("B", 0.0 if obj == "X" else np.pi / 2)
        return cls("B", float(obj["B"]))


Z_BASIS = Basis("Z")


def B(alpha: float) -> Basis:
    return Basis("B", alpha)


@dataclass(frozen=True)
class MeasurementInstruction:
    """Measure ``qubit``; the angle gains ``pi`` when the XOR of ``adapt_on`` outcomes is 1."""

    qubit: int
    basis: Basis
    adapt_on: tuple[int, ...] = ()


@dataclass(frozen=True)
class Byproduct:
    """Pauli byproduct ``X^{xor x_on} Z^{xor z_on}`` left on an output qubit."""

    qubit: int
    x_on: tuple[int, ...] = ()
    z_on: tuple[int, ...] = ()

    def exponents(self, outcomes: Mapping[int, int]) -> tuple[int, int]:
        x = sum(outcomes[q] for q in self.x_on) % 2
        z = sum(outcomes[q] for q in self.z_on) % 2
        return x, z


@dataclass(frozen=True)
class MeasurementPattern:
    gate: str
    resource: GraphSpec
    input_qubits: tuple[int, ...]
    output_qubits: tuple[int, ...]
    instructions: tuple[MeasurementInstruction, ...]
    byproducts: tuple[Byproduct, ...] = ()

    def __post_init__(self):
        seen = set()
        for ins in self.instructions:
            if not 0 <= ins.qubit < self.resource.n_vertices:
                raise ValueError(f"qubit {ins.qubit} not in resource")
            if ins.qubit in seen:
                raise ValueError(f"qubit {ins.qubit} measured twice")
            for dep in ins.adapt_on:
                if dep not in seen:
                    raise ValueError(
                        f"qubit {ins.qubit} adapts on {dep}, which is not measured earlier"
                    )
            seen.add(ins.qubit)
        if seen & set(self.output_qubits):
            raise ValueError("output qubits cannot be measured")
        for bp in self.byproducts:
            if bp.qubit not in self.output_qubits:
                raise ValueError(f"byproduct on non-output qubit {bp.qubit}")
            if not set(bp.x_on + bp.z_on) <= seen:
                raise ValueError("byproduct depends on an unmeasured qubit")

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return tuple(ins.qubit for ins in self.instructions)

    def to_dict(self) -> dict:
        return {
            "gate": self.gate,
            "resource": self.resource.to_dict(),
            "inputs": list(self.input_qubits),
            "outputs": list(self.output_qubits),
            "instructions": [
                {"qubit": i.qubit, "basis": i.basis.to_json_obj(), "adapt_on": list(i.adapt_on)}
                for i in self.instructions
            ],
            "byproducts": [
                {"qubit": b.qubit, "x": list(b.x_on), "z": list(b.z_on)} for b in self.byproducts
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MeasurementPattern":
        return cls(
            gate=obj["gate"],
            resource=GraphSpec.from_dict(obj["resource"]),
            input_qubits=tuple(obj["inputs"]),
            output_qubits=tuple(obj["outputs"]),
            instructions=tuple(
                MeasurementInstruction(int(i["qubit"]), Basis.from_json_obj(i["basis"]),
                                       tuple(i.get("adapt_on", ())))
                for i in obj["instructions"]
            ),
            byproducts=tuple(
                Byproduct(int(b["qubit"]), tuple(b.get("x", ())), tuple(b.get("z", ())))
                for b in obj.get("byproducts", ())
            ),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MeasurementPattern":
        return cls.from_dict(json.loads(text))


def pattern_for(gate: str) -> MeasurementPattern:
    """The H, T and CNOT patterns on the four-qubit star (centre = qubit 2).

    Z-basis removals of neighbours of the centre leave a ``Z`` on the centre,
    which is folded into the listed byproducts.
    """
    star = star_graph()
    gate = gate.upper()
    if gate == "H":
        return MeasurementPattern(
            "H", star, input_qubits=(1,), output_qubits=(2,),
            instructions=(
                MeasurementInstruction(0, Z_BASIS),
                MeasurementInstruction(3, Z_BASIS),
                MeasurementInstruction(1, B(0.0)),
            ),
            byproducts=(Byproduct(2, x_on=(1,), z_on=(0, 3)),),
        )
    if gate == "T":
        return MeasurementPattern(
            "T", star, input_qubits=(1,), output_qubits=(3,),
            instructions=(
                MeasurementInstruction(0, Z_BASIS),
                MeasurementInstruction(1, B(-np.pi / 4)),
                MeasurementInstruction(2, B(0.0), adapt_on=(1,)),
            ),
            # B(pi) relabels B(0) outcomes, hence s1 in the X exponent.
            byproducts=(Byproduct(3, x_on=(0, 1, 2), z_on=(1,)),),
        )
    if gate == "CNOT":
        return MeasurementPattern(
            "CNOT", star, input_qubits=(0, 1), output_qubits=(0, 3),
            instructions=(
                MeasurementInstruction(1, B(0.0)),
                MeasurementInstruction(2, B(0.0)),
            ),
            byproducts=(Byproduct(0, z_on=(1,)), Byproduct(3, x_on=(2,), z_on=(1,))),
        )
    raise ValueError(f"no pattern for gate {gate!r}; choose H, T or CNOT")


@dataclass(frozen=True)
class ProbeState:
    """Input probe and the optics that encode it on a resource qubit."""

    label: str

    RECIPES = {"+": "none", "L": "QWP", "H": "polarizer-H", "V": "polarizer-V"}

    def __post_init__(self):
        if self.label not in self.RECIPES:
            raise ValueError(f"probe must be one of {sorted(self.RECIPES)}")

    @property
    def recipe(self) -> str:
        return self.RECIPES[self.label]

    @property
    def ket(self) -> np.ndarray:
        return KET[self.label]


PROBE_LABELS = ("H", "V", "+", "L")


def encode_probe(state: State, qubit: int, probe: ProbeState | str) -> PostselectedState:
    """Encode a probe on ``qubit`` of an already entangled resource."""
    probe = ProbeState(probe) if isinstance(probe, str) else probe
    if probe.recipe == "none":
        return PostselectedState(state, 1.0)
    if probe.recipe == "QWP":
        return PostselectedState(apply_gate(state, QWP_H, [qubit]), 1.0)
    ket = KET[probe.label]
    return project(state, np.outer(ket, ket.conj()), [qubit])


def _contract_bra(state: State, bra: np.ndarray, pos: int) -> State:
    # <bra| on qubit `pos`, removing it from the register
    n = state.n_qubits
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape((2,) * n)
        out = np.tensordot(bra.conj(), psi, axes=([0], [pos]))
        return PureState(out.reshape(-1))
    rho = state.data.reshape((2,) * (2 * n))
    rho = np.tensordot(bra.conj(), rho, axes=([0], [pos]))
    rho = np.tensordot(bra, rho, axes=([0], [n - 1 + pos]))
    d = 2 ** (n - 1)
    out = rho.reshape(d, d)
    return DensityMatrix((out + out.conj().T) / 2)


def _weight(state: State) -> float:
    if isinstance(state, PureState):
        return float(np.vdot(state.amplitudes, state.amplitudes).real)
    return state.trace()


def measure(state: State, qubit: int, basis: Basis, forced_outcome: Optional[int] = None,
            rng: Optional[np.random.Generator] = None, flip: bool = False):
    """Measure register position ``qubit`` and remove it.

    Returns ``(outcome, collapsed_state, probability)``. With ``forced_outcome``
    the branch is selected (and must have probability above 1e-12); otherwise
    the outcome is drawn from the Born rule with ``rng``.
    """
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range")
    if state.n_qubits < 2:
        raise ValueError("cannot remove the last qubit of a register")
    total = _weight(state)
    branches = [_contract_bra(state, v, qubit) for v in basis.vectors(flip)]
    probs = [_weight(b) / total for b in branches]
    if forced_outcome is None:
        rng = np.random.default_rng() if rng is None else rng
        outcome = int(rng.random() >= probs[0])
    else:
        outcome = int(forced_outcome)
        if outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")
    p = probs[outcome]
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"outcome {outcome} has probability {p:.2e}")
    collapsed = branches[outcome]
    collapsed = (PureState(collapsed.amplitudes / np.sqrt(_weight(collapsed)))
                 if isinstance(collapsed, PureState) else collapsed.normalized())
    return outcome, collapsed, float(p)


@dataclass(frozen=True)
class OutcomeRecord:
    outcomes: dict = field(default_factory=dict)
    probabilities: dict = field(default_factory=dict)

    @property
    def branch_probability(self) -> float:
        return float(np.prod(list(self.probabilities.values()))) if self.probabilities else 1.0

    def to_dict(self) -> dict:
        return {
            "outcomes": {str(k): v for k, v in self.outcomes.items()},
            "probabilities": {str(k): v for k, v in self.probabilities.items()},
            "branch_probability": self.branch_probability,
        }


@dataclass(frozen=True, eq=False)
class PatternResult:
    output: DensityMatrix
    record: OutcomeRecord
    acceptance_probability: float

    def to_dict(self) -> dict:
        return {"record": self.record.to_dict(),
                "acceptance_probability": self.acceptance_probability}


def _resolve_probes(pattern: MeasurementPattern, probes) -> dict:
    if probes is None:
        probes = ["+"] * len(pattern.input_qubits)
    if isinstance(probes, (str, ProbeState)):
        probes = [probes]
    if isinstance(probes, Mapping):
        mapping = dict(probes)
    else:
        probes = list(probes)
        if len(probes) != len(pattern.input_qubits):
            raise ValueError(
                f"{pattern.gate} pattern takes {len(pattern.input_qubits)} probes, got {len(probes)}"
            )
        mapping = dict(zip(pattern.input_qubits, probes))
    if set(mapping) != set(pattern.input_qubits):
        raise ValueError("probes do not match the pattern inputs")
    return {q: ProbeState(p) if isinstance(p, str) else p for q, p in mapping.items()}


def run_pattern(resource: State | None, pattern: MeasurementPattern, probes=None,
                forced_outcomes: Optional[Mapping[int, int]] = None,
                rng: Optional[np.random.Generator] = None,
                correct: bool = True, adaptive: bool = True) -> PatternResult:
    """Encode probes, run the measurements in order and undo byproducts.

    ``resource`` defaults to the ideal graph state of ``pattern.resource``.
    Measurements not listed in ``forced_outcomes`` are sampled with ``rng``.
    ``adaptive=False`` ignores the adaptive angle flips (for diagnostics).
    """
    state = graph_state(pattern.resource) if resource is None else resource
    if state.n_qubits != pattern.resource.n_vertices:
        raise ValueError("resource size does not match the pattern")
    forced = dict(forced_outcomes or {})
    if rng is None and not set(pattern.measured_qubits) <= set(forced):
        raise ValueError("give an rng or force every outcome")

    acceptance = 1.0
    for q, probe in _resolve_probes(pattern, probes).items():
        encoded = encode_probe(state, q, probe)
        state, acceptance = encoded.state, acceptance * encoded.acceptance_probability

    alive = list(range(state.n_qubits))
    outcomes, probs = {}, {}
    for ins in pattern.instructions:
        flip = adaptive and sum(outcomes[d] for d in ins.adapt_on) % 2 == 1
        s, state, p = measure(state, alive.index(ins.qubit), ins.basis,
                              forced.get(ins.qubit), rng, flip=flip)
        alive.remove(ins.qubit)
        outcomes[ins.qubit], probs[ins.qubit] = s, p

    if correct:
        for bp in pattern.byproducts:
            x, z = bp.exponents(outcomes)
            pos = alive.index(bp.qubit)
            # byproduct is X^x Z^z, so undo X first
            if x:
                state = apply_gate(state, X, [pos])
            if z:
                state = apply_gate(state, Z, [pos])

    rho = partial_trace(as_density(state), [alive.index(q) for q in pattern.output_qubits])
    kept = sorted(pattern.output_qubits, key=alive.index)
    rho = permute_qubits(rho, [kept.index(q) for q in pattern.output_qubits])
    return PatternResult(rho, OutcomeRecord(outcomes, probs), acceptance)


def enumerate_branches(resource: State | None, pattern: MeasurementPattern, probes=None,
                       **kwargs) -> list[PatternResult]:
    """Run every outcome assignment with nonzero probability."""
    results = []
    for bits in itertools.product((0, 1), repeat=len(pattern.instructions)):
        forced = dict(zip(pattern.measured_qubits, bits))
        try:
            results.append(run_pattern(resource, pattern, probes, forced_outcomes=forced, **kwargs))
        except ZeroProbabilityError:
            continue
    return results


def branch_average(resource: State | None, pattern: MeasurementPattern, probes=None,
                   **kwargs) -> DensityMatrix:
    """Probability-weighted mixture of the corrected outputs over all branches."""
    branches = enumerate_branches(resource, pattern, probes, **kwargs)
    total = sum(b.record.branch_probability for b in branches)
    mix = sum(b.record.branch_probability * b.output.data for b in branches) / total
    return DensityMatrix(mix)


ORACLE_GATES = {"H": H, "T": T, "CNOT": CNOT}


def circuit_oracle(gate: str, state: State) -> State:
    """Apply the gate as a plain matrix; the reference for pattern checks."""
    try:
        u = ORACLE_GATES[gate.upper()]
    except KeyError:
        raise ValueError(f"unknown gate {gate!r}") from None
    k = int(np.log2(u.shape[0]))
    if state.n_qubits != k:
        raise ValueError(f"{gate} acts on {k} qubit(s), state has {state.n_qubits}")
    return apply_gate(state, u, list(range(k)))


def probe_input_state(labels: Sequence[str]) -> PureState:
    """Ideal logical input for a probe combination, e.g. ``("+", "H")``."""
    return PureState(reduce(np.kron, [ProbeState(lab).ket for lab in labels]))


__all__ = [
    "B", "Basis", "Byproduct", "MeasurementInstruction", "MeasurementPattern", "OutcomeRecord",
    "PatternResult", "PostselectionError", "ProbeState", "PROBE_LABELS", "Z_BASIS",
    "ZeroProbabilityError", "branch_average", "circuit_oracle", "encode_probe",
    "enumerate_branches", "measure", "pattern_for", "probe_input_state", "run_pattern",
]
