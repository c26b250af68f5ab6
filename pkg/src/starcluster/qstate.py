"""Dense multi-qubit states and the single-qubit polarization conventions.

Basis index convention: qubit 0 is the most significant bit of a basis index,
so ``|q0 q1 ... q_{n-1}>`` maps to ``int("q0q1...", 2)``. Polarization is
encoded as ``|H> = |0>`` and ``|V> = |1>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

ATOL = 1e-9


def _n_qubits_for(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector of ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        _n_qubits_for(amps.size)
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.amplitudes.size)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        nrm = self.norm()
        if nrm < 1e-15:
            raise ValueError("cannot normalize a zero vector")
        return PureState(self.amplitudes / nrm)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"PureState(n_qubits={self.n_qubits})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian ``2**n x 2**n`` matrix.

    Unit trace and positivity are not enforced at construction because linear
    inversion can produce slightly unphysical matrices; see
    :meth:`check_physical`.
    """

    data: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.data, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        _n_qubits_for(rho.shape[0])
        if not np.allclose(rho, rho.conj().T, atol=ATOL, rtol=0):
            raise ValueError("density matrix must be Hermitian")
        object.__setattr__(self, "data", _readonly(rho))

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.data.shape[0])

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data).min())

    def is_physical(self, atol: float = ATOL) -> bool:
        return abs(self.trace() - 1.0) < atol and self.min_eigenvalue() >= -atol

    def check_physical(self, atol: float = ATOL) -> "DensityMatrix":
        if abs(self.trace() - 1.0) >= atol:
            raise ValueError(f"trace {self.trace():.3e} differs from 1")
        if self.min_eigenvalue() < -atol:
            raise ValueError(f"negative eigenvalue {self.min_eigenvalue():.3e}")
        return self

    def normalized(self) -> "DensityMatrix":
        tr = self.trace()
        if tr < 1e-15:
            raise ValueError("cannot normalize a zero-trace matrix")
        return DensityMatrix(self.data / tr)

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


State = Union[PureState, DensityMatrix]


def as_density(state) -> DensityMatrix:
    """Coerce a PureState, DensityMatrix or raw array to a DensityMatrix."""
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.to_density()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return PureState(arr).to_density()
    return DensityMatrix(arr)


def maximally_mixed(n_qubits: int) -> DensityMatrix:
    d = 2**n_qubits
    return DensityMatrix(np.eye(d) / d)


# --- single-qubit states -----------------------------------------------------

_S2 = np.sqrt(2.0)
KET = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / _S2,
    "-": np.array([1, -1], dtype=complex) / _S2,
    "R": np.array([1, -1j], dtype=complex) / _S2,
    "L": np.array([1, 1j], dtype=complex) / _S2,
}
KET["0"] = KET["H"]
KET["1"] = KET["V"]


def product_state(labels: str) -> PureState:
    """Product state from single-qubit labels, e.g. ``product_state("++H+")``."""
    return PureState(reduce(np.kron, [KET[c] for c in labels]))


# --- gates -------------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / _S2
T = np.diag([1, np.exp(1j * np.pi / 4)])
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
# quarter-wave plate, fast axis horizontal
QWP_H = np.diag([1, 1j])

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def hwp(axis_angle: float) -> np.ndarray:
    """Half-wave plate with its fast axis at ``axis_angle`` radians from H.

    Global phase is dropped. The plate rotates linear polarization by twice
    the axis angle: ``hwp(pi/4)`` exchanges H and V (a Pauli X), while
    ``hwp(pi/8)`` rotates H onto + and V onto - (a Hadamard).
    """
    c, s = np.cos(2 * axis_angle), np.sin(2 * axis_angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


HWP_45 = hwp(np.pi / 4)

GATES = {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "T": T, "CNOT": CNOT,
         "CZ": CZ, "SWAP": SWAP, "QWP": QWP_H, "HWP45": HWP_45}


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0
    )


# --- core operations ---------------------------------------------------------

def tensor(a: State, b: State) -> State:
    """Kronecker product with ``a``'s qubits more significant."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.data, b.data))
    raise TypeError(
        f"cannot tensor {type(a).__name__} with {type(b).__name__}"
    )


def _check_targets(targets: Sequence[int], n: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"qubit {t} out of range for {n}-qubit register")
    return targets


def _apply_to_axes(tensor_: np.ndarray, op: np.ndarray, axes: Sequence[int]):
    # op acts on the listed axes of a (2,)*m tensor
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor_, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_operator(state: State, op: np.ndarray, targets: Sequence[int]) -> State:
    """Apply an arbitrary (not necessarily unitary) operator to ``targets``.

    For a density matrix this returns ``op rho op^dagger``. No renormalization.
    """
    op = np.asarray(op, dtype=complex)
    n = state.n_qubits
    targets = _check_targets(targets, n)
    if op.shape != (2 ** len(targets),) * 2:
        raise ValueError(
            f"operator of shape {op.shape} does not act on {len(targets)} qubits"
        )
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape((2,) * n)
        return PureState(_apply_to_axes(psi, op, targets).reshape(-1))
    rho = state.data.reshape((2,) * (2 * n))
    rho = _apply_to_axes(rho, op, targets)
    rho = _apply_to_axes(rho, op.conj(), [t + n for t in targets])
    out = rho.reshape(2**n, 2**n)
    return DensityMatrix((out + out.conj().T) / 2)


def apply_gate(state: State, gate: np.ndarray, targets: Sequence[int]) -> State:
    """Apply a unitary ``gate`` to the ``targets`` qubits (in gate order)."""
    if not is_unitary(gate):
        raise ValueError("gate is not unitary")
    return apply_operator(state, gate, targets)


def partial_trace(rho: State, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on ``keep``; kept qubits come out in ascending order."""
    rho = as_density(rho)
    n = rho.n_qubits
    keep = sorted(set(_check_targets(sorted(set(keep)), n)))
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if len(keep) == n:
        return rho
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for q in range(n):
        if q not in keep:
            cols[q] = rows[q]
    out_spec = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    spec = "".join(rows) + "".join(cols) + "->" + out_spec
    red = np.einsum(spec, rho.data.reshape((2,) * (2 * n)))
    d = 2 ** len(keep)
    return DensityMatrix(red.reshape(d, d))


def permute_qubits(state: State, order: Sequence[int]) -> State:
    """Reorder qubits so that new qubit ``k`` is old qubit ``order[k]``."""
    n = state.n_qubits
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of range({n})")
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape((2,) * n).transpose(order)
        return PureState(psi.reshape(-1))
    rho = state.data.reshape((2,) * (2 * n))
    rho = rho.transpose(order + [q + n for q in order])
    return DensityMatrix(rho.reshape(2**n, 2**n))


def state_fidelity(psi: PureState, rho: State) -> float:
    """Overlap ``<psi|rho|psi>`` with a pure target."""
    if isinstance(psi, DensityMatrix):
        raise TypeError("state_fidelity needs a pure target state")
    psi = psi if isinstance(psi, PureState) else PureState(psi)
    if isinstance(rho, PureState):
        if rho.dim != psi.dim:
            raise ValueError("dimension mismatch")
        return float(abs(np.vdot(psi.amplitudes, rho.amplitudes)) ** 2)
    rho = as_density(rho)
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {psi.dim} vs {rho.dim}")
    val = np.vdot(psi.amplitudes, rho.data @ psi.amplitudes)
    if abs(val.imag) > 1e-9:
        raise ValueError(f"fidelity has imaginary part {val.imag:.2e}")
    return float(val.real)


def pauli_operator(pauli_string: str) -> np.ndarray:
    try:
        return reduce(np.kron, [PAULI[c] for c in pauli_string.upper()])
    except KeyError as exc:
        raise ValueError(f"invalid Pauli label {exc.args[0]!r}") from None


def pauli_expectation(rho: State, pauli_string: str) -> float:
    """``Tr(rho P)`` for a Pauli string such as ``"ZZXZ"``."""
    rho = as_density(rho)
    if len(pauli_string) != rho.n_qubits:
        raise ValueError(
            f"Pauli string of length {len(pauli_string)} for {rho.n_qubits} qubits"
        )
    val = np.trace(rho.data @ pauli_operator(pauli_string))
    return float(val.real)


# --- JSON --------------------------------------------------------------------

def matrix_to_list(arr: np.ndarray) -> list:
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in arr]
    return [matrix_to_list(row) for row in arr]


def list_to_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_dict(state: State) -> dict:
    payload = state.amplitudes if isinstance(state, PureState) else state.data
    return {"n_qubits": state.n_qubits, "data": matrix_to_list(payload)}


def state_from_dict(obj: dict) -> State:
    arr = list_to_matrix(obj["data"])
    state = PureState(arr) if arr.ndim == 1 else DensityMatrix(arr)
    if state.n_qubits != int(obj["n_qubits"]):
        raise ValueError("n_qubits does not match data shape")
    return state


def dumps_state(state: State) -> str:
    return json.dumps(state_to_dict(state))


def loads_state(text: str) -> State:
    return state_from_dict(json.loads(text))
