"""Entangled resources: Bell pairs, fusion, the four-photon star cluster, graph states, noise."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qstate import (
    DensityMatrix, PureState, State, Z, apply_operator, as_density, hwp,
    maximally_mixed, permute_qubits, product_state, tensor,
)

# Photon modes of the fused GHZ state, in register order.
GHZ_MODES = ("s1", "i1", "s2", "i2")
# Which mode carries logical star qubit 1, 2, 3, 4.
DEFAULT_MODE_ORDER = ("i1", "s1", "s2", "i2")
ROTATED_MODES = ("i1", "i2", "s1")
# 0-based index of the star centre (the unrotated signal photon s2).
STAR_CENTER = 2
# Polarization rotation by 45 degrees: H -> +, V -> -.
STAR_ROTATION = hwp(np.pi / 8)

POSTSELECTION_ATOL = 1e-12


class PostselectionError(ValueError):
    """Raised when a projector annihilates the state."""


@dataclass(frozen=True)
class GraphSpec:
    """Undirected simple graph on vertices ``0 .. n_vertices-1``."""

    n_vertices: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        clean = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            for v in (a, b):
                if not 0 <= v < self.n_vertices:
                    raise ValueError(f"vertex {v} out of range")
            clean.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(clean))

    def neighbours(self, v: int) -> list[int]:
        return sorted({b if a == v else a for a, b in self.edges if v in (a, b)})

    def to_dict(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_dict(cls, obj: dict) -> "GraphSpec":
        return cls(int(obj["n"]), frozenset(tuple(e) for e in obj["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GraphSpec":
        return cls.from_dict(json.loads(text))


def star_graph(n_leaves: int = 3, center: int = STAR_CENTER) -> GraphSpec:
    """Star graph; the default is the 4-vertex star with centre at index 2."""
    n = n_leaves + 1
    return GraphSpec(n, frozenset((min(center, v), max(center, v))
                                  for v in range(n) if v != center))


@dataclass(frozen=True)
class NoiseModel:
    """Fusion dephasing, white background, and source phases.

    ``visibility`` scales the coherence between the two branches of the
    resource; ``white_noise`` is the weight of the admixed maximally mixed
    state; ``theta1``/``theta2`` are the Bell-pair phases of the two sources.
    """

    visibility: float = 1.0
    white_noise: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility {self.visibility} outside [0, 1]")
        if not 0.0 <= self.white_noise <= 1.0:
            raise ValueError(f"white_noise {self.white_noise} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"visibility": self.visibility, "white_noise": self.white_noise,
                "theta1": self.theta1, "theta2": self.theta2}

    @classmethod
    def from_dict(cls, obj: dict) -> "NoiseModel":
        return cls(float(obj.get("visibility", 1.0)), float(obj.get("white_noise", 0.0)),
                   float(obj.get("theta1", 0.0)), float(obj.get("theta2", 0.0)))


def star_fidelity_model(visibility: float, white_noise: float) -> float:
    """Analytic star-state fidelity of an ideal resource after :func:`apply_noise`."""
    return (1 - white_noise) * (1 + visibility) / 2 + white_noise / 16


def calibrate_white_noise(target_fidelity: float, visibility: float) -> float:
    """White-noise weight giving ``target_fidelity`` at the given visibility."""
    top = (1 + visibility) / 2
    p = (top - target_fidelity) / (top - 1 / 16)
    if not 0.0 <= p <= 1.0:
        raise ValueError(
            f"fidelity {target_fidelity} unreachable with visibility {visibility}"
        )
    return p


PAPER_VISIBILITY = 0.9
PAPER_STATE_FIDELITY = 0.66

PRESETS = {
    "ideal": NoiseModel(),
    "paper-2013": NoiseModel(
        visibility=PAPER_VISIBILITY,
        white_noise=calibrate_white_noise(PAPER_STATE_FIDELITY, PAPER_VISIBILITY),
    ),
}


def get_preset(name: str) -> NoiseModel:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True, eq=False)
class PostselectedState:
    """A heralded state together with its heralding probability.

    ``state`` keeps the kind of the input (pure in, pure out).
    """

    state: State
    acceptance_probability: float

    def __post_init__(self):
        if not -1e-12 <= self.acceptance_probability <= 1 + 1e-9:
            raise ValueError("acceptance probability outside [0, 1]")

    @property
    def density(self) -> DensityMatrix:
        return as_density(self.state)


def bell_pair(theta: float = 0.0) -> PureState:
    """``(|HH> + e^{i theta}|VV>)/sqrt(2)`` on modes (signal, idler)."""
    amps = np.zeros(4, dtype=complex)
    amps[0] = 1 / np.sqrt(2)
    amps[3] = np.exp(1j * theta) / np.sqrt(2)
    return PureState(amps)


def project(state: State, projector: np.ndarray, targets: Sequence[int]) -> PostselectedState:
    """Apply a projector, renormalize and report the success probability."""
    out = apply_operator(state, projector, targets)
    if isinstance(out, PureState):
        p = out.norm() ** 2
    else:
        p = out.trace()
    if p < POSTSELECTION_ATOL:
        raise PostselectionError(f"projector annihilates the state (p={p:.2e})")
    out = out.normalized()
    return PostselectedState(out, float(min(p, 1.0)))


PARITY_EVEN = np.diag([1, 0, 0, 1]).astype(complex)


def fuse(four_photon: State, modes: tuple[int, int] = (0, 2)) -> PostselectedState:
    """Polarizing-beamsplitter fusion: keep equal polarization on ``modes``."""
    if four_photon.n_qubits < 2:
        raise ValueError("fusion needs at least two qubits")
    return project(four_photon, PARITY_EVEN, modes)


def crossed_bell_pairs(theta1: float = 0.0, theta2: float = 0.0) -> PureState:
    """Two Bell pairs in mode order (s1, i1, s2, i2)."""
    return tensor(bell_pair(theta1), bell_pair(theta2))


def ghz_state(n_qubits: int = 4, phase: float = 0.0) -> PureState:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1 / np.sqrt(2)
    amps[-1] = np.exp(1j * phase) / np.sqrt(2)
    return PureState(amps)


def to_star(ghz: State, mode_order: Sequence[str] = DEFAULT_MODE_ORDER) -> State:
    """Rotate modes i1, i2, s1 of a GHZ-form state and reorder to star qubits 1-4."""
    if ghz.n_qubits != 4:
        raise ValueError(f"expected a 4-qubit register, got {ghz.n_qubits}")
    state = ghz
    for mode in ROTATED_MODES:
        state = apply_operator(state, STAR_ROTATION, [GHZ_MODES.index(mode)])
    return permute_qubits(state, [GHZ_MODES.index(m) for m in mode_order])


def star_state() -> PureState:
    """``(|++H+> + |--V->)/sqrt(2)``."""
    amps = (product_state("++H+").amplitudes + product_state("--V-").amplitudes) / np.sqrt(2)
    return PureState(amps)


def graph_state(spec: GraphSpec) -> PureState:
    """Product of CZ over the edges applied to ``|+>^n``."""
    n = spec.n_vertices
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    parity = np.zeros(2**n, dtype=int)
    for a, b in spec.edges:
        parity ^= bits[:, a] & bits[:, b]
    return PureState((1 - 2 * parity) / np.sqrt(2**n))


def graph_stabilizers(spec: GraphSpec) -> list[str]:
    """Generators ``X_v prod_{u ~ v} Z_u``, one per vertex."""
    gens = []
    for v in range(spec.n_vertices):
        label = ["I"] * spec.n_vertices
        label[v] = "X"
        for u in spec.neighbours(v):
            label[u] = "Z"
        gens.append("".join(label))
    return gens


_PAULI_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def pauli_product(a: tuple[complex, str], b: tuple[complex, str]) -> tuple[complex, str]:
    phase, out = a[0] * b[0], []
    for p, q in zip(a[1], b[1]):
        ph, r = _PAULI_MUL[(p, q)]
        phase *= ph
        out.append(r)
    return phase, "".join(out)


def stabilizer_group(spec: GraphSpec) -> list[tuple[complex, str]]:
    """All ``2**n`` products of the generators as ``(phase, pauli_string)``."""
    gens = graph_stabilizers(spec)
    group = []
    for mask in itertools.product((0, 1), repeat=len(gens)):
        elem = (1, "I" * spec.n_vertices)
        for use, g in zip(mask, gens):
            if use:
                elem = pauli_product(elem, (1, g))
        group.append(elem)
    return group


def dephase(state: State, visibility: float, qubit: int = STAR_CENTER) -> DensityMatrix:
    """``rho -> (1+V)/2 rho + (1-V)/2 Z rho Z`` on ``qubit``."""
    rho = as_density(state)
    flipped = apply_operator(rho, Z, [qubit])
    return DensityMatrix((1 + visibility) / 2 * rho.data + (1 - visibility) / 2 * flipped.data)


def whiten(state: State, white_noise: float) -> DensityMatrix:
    rho = as_density(state)
    mixed = maximally_mixed(rho.n_qubits)
    return DensityMatrix((1 - white_noise) * rho.data + white_noise * mixed.data)


def apply_noise(state: State, model: NoiseModel, dephase_qubit: int = STAR_CENTER) -> DensityMatrix:
    """Scale branch coherences by the visibility, then admix white noise.

    The two branches of both the GHZ and the star state are labelled by the
    Z value of the centre photon, so dephasing acts there by default.
    """
    return whiten(dephase(state, model.visibility, dephase_qubit), model.white_noise)


def generate_star(model: NoiseModel = PRESETS["ideal"],
                  mode_order: Sequence[str] = DEFAULT_MODE_ORDER) -> PostselectedState:
    """Full generation chain: two sources, fusion, rotations, noise."""
    fused = fuse(crossed_bell_pairs(model.theta1, model.theta2))
    star = to_star(fused.state, mode_order)
    return PostselectedState(apply_noise(star, model), fused.acceptance_probability)


def noisy_star(model: NoiseModel = PRESETS["ideal"]) -> DensityMatrix:
    return generate_star(model).density
