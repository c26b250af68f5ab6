"""Process (chi) matrices over the Pauli operator basis and their algebra.

A channel acts as ``rho -> sum_mn chi[m, n] E_m rho E_n^dagger`` with
``E`` running over ``{I, X, Y, Z}^{(x) k}`` (unnormalized Paulis, first qubit
most significant). With this convention a trace-preserving chi has unit
trace, and the chi of a unitary ``U = sum_m c_m E_m`` is ``c c^dagger``.

Superoperators use row-major vectorization: ``vec(A rho B) = (A (x) B^T) vec(rho)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from .qstate import (
    ATOL, CNOT, PAULI, SWAP, DensityMatrix, as_density, is_unitary, list_to_matrix,
    matrix_to_list,
)

# Fault-tolerance error thresholds quoted for comparison only.
FAULT_TOLERANCE_THRESHOLDS = (1e-2, 1e-5)


@lru_cache(maxsize=None)
def pauli_labels(n_qubits: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n_qubits))


@lru_cache(maxsize=None)
def _pauli_basis(n_qubits: int) -> np.ndarray:
    mats = [reduce(np.kron, [PAULI[c] for c in lab]) for lab in pauli_labels(n_qubits)]
    arr = np.array(mats)
    arr.flags.writeable = False
    return arr


def pauli_basis(n_qubits: int) -> np.ndarray:
    """Stack of the ``4**n`` Pauli operators, shape ``(4**n, 2**n, 2**n)``."""
    return _pauli_basis(n_qubits)


@lru_cache(maxsize=None)
def _tp_tensor(n_qubits: int) -> np.ndarray:
    # Q[m, n] = E_n^dagger E_m
    E = _pauli_basis(n_qubits)
    return np.einsum("nca,mcb->mnab", E.conj(), E)


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    data: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        chi = np.array(self.data, dtype=complex)
        if chi.ndim != 2 or chi.shape[0] != chi.shape[1]:
            raise ValueError("chi must be square")
        n = int(round(np.log(chi.shape[0]) / np.log(4)))
        if n < 1 or 4**n != chi.shape[0]:
            raise ValueError(f"chi dimension {chi.shape[0]} is not a power of four")
        if not np.allclose(chi, chi.conj().T, atol=1e-8, rtol=0):
            raise ValueError("chi must be Hermitian")
        chi = (chi + chi.conj().T) / 2
        chi.flags.writeable = False
        object.__setattr__(self, "data", chi)

    @property
    def n_qubits(self) -> int:
        return int(round(np.log(self.data.shape[0]) / np.log(4)))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data).min())

    def tp_matrix(self) -> np.ndarray:
        """``sum_mn chi_mn E_n^dagger E_m``; the identity for a TP channel."""
        return np.einsum("mn,mnab->ab", self.data, _tp_tensor(self.n_qubits))

    def tp_residual(self) -> float:
        return float(np.abs(self.tp_matrix() - np.eye(self.dim)).max())

    def is_physical(self, tp_tol: float = 1e-6, psd_tol: float = 1e-7) -> bool:
        return self.tp_residual() < tp_tol and self.min_eigenvalue() >= -psd_tol

    def to_dict(self) -> dict:
        out = {
            "n_qubits": self.n_qubits,
            "data": matrix_to_list(self.data),
            "basis": "pauli",
            "labels": list(pauli_labels(self.n_qubits)),
            "tp_residual": self.tp_residual(),
            "psd_min_eig": self.min_eigenvalue(),
        }
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ChiMatrix":
        if obj.get("basis", "pauli") != "pauli":
            raise ValueError(f"unsupported operator basis {obj['basis']!r}")
        chi = cls(list_to_matrix(obj["data"]), dict(obj.get("metadata", {})))
        if chi.n_qubits != int(obj["n_qubits"]):
            raise ValueError("n_qubits does not match data shape")
        return chi

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ChiMatrix":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"ChiMatrix(n_qubits={self.n_qubits}, trace={self.trace():.4f})"


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """``d^2 x d^2`` matrix acting on row-major vectorized density matrices."""

    data: np.ndarray
    n_qubits: int

    def apply(self, rho) -> DensityMatrix:
        rho = as_density(rho)
        d = rho.dim
        out = (self.data @ rho.data.reshape(-1)).reshape(d, d)
        return DensityMatrix((out + out.conj().T) / 2)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        return SuperOperator(self.data @ other.data, self.n_qubits)


def chi_to_superop(chi: ChiMatrix) -> SuperOperator:
    E = pauli_basis(chi.n_qubits)
    d = chi.dim
    S = np.einsum("mn,mab,nce->acbe", chi.data, E, E.conj(), optimize=True)
    return SuperOperator(S.reshape(d * d, d * d), chi.n_qubits)


def superop_to_chi(sop: SuperOperator, metadata: dict | None = None) -> ChiMatrix:
    # the E_m (x) conj(E_n) are orthogonal with norm^2 = d^2
    E = pauli_basis(sop.n_qubits)
    d = 2**sop.n_qubits
    S4 = sop.data.reshape(d, d, d, d)
    chi = np.einsum("mab,nce,acbe->mn", E.conj(), E, S4, optimize=True) / d**2
    return ChiMatrix(chi, metadata or {})


def _check_same_dim(a: ChiMatrix, b: ChiMatrix):
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def apply_chi(chi: ChiMatrix, rho) -> DensityMatrix:
    rho = as_density(rho)
    if rho.n_qubits != chi.n_qubits:
        raise ValueError(
            f"{chi.n_qubits}-qubit channel applied to {rho.n_qubits}-qubit state"
        )
    E = pauli_basis(chi.n_qubits)
    out = np.einsum("mn,mab,bc,ndc->ad", chi.data, E, rho.data, E.conj(), optimize=True)
    return DensityMatrix((out + out.conj().T) / 2)


def pauli_coefficients(op: np.ndarray) -> np.ndarray:
    """``c`` with ``op = sum_m c_m E_m``."""
    op = np.asarray(op, dtype=complex)
    n = int(round(np.log2(op.shape[0])))
    E = pauli_basis(n)
    return np.einsum("mba,ba->m", E.conj(), op) / op.shape[0]


def chi_of_unitary(u: np.ndarray) -> ChiMatrix:
    """Rank-one chi ``c c^dagger`` of a unitary (unit trace)."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError("input is not unitary")
    c = pauli_coefficients(u)
    return ChiMatrix(np.outer(c, c.conj()), {"normalization": "unit-trace"})


def identity_chi(n_qubits: int = 1) -> ChiMatrix:
    return chi_of_unitary(np.eye(2**n_qubits))


def depolarizing_chi(q: float, u: np.ndarray | None = None, n_qubits: int = 1) -> ChiMatrix:
    """``rho -> q U rho U^dagger + (1-q) I/d``."""
    if u is None:
        u = np.eye(2**n_qubits)
    ideal = chi_of_unitary(u)
    d2 = ideal.data.shape[0]
    return ChiMatrix(q * ideal.data + (1 - q) * np.eye(d2) / d2)


def compose(first: ChiMatrix, second: ChiMatrix) -> ChiMatrix:
    """Chi of ``second`` after ``first``."""
    _check_same_dim(first, second)
    return superop_to_chi(chi_to_superop(second) @ chi_to_superop(first))


def permutation_unitary(permutation: Sequence[int]) -> np.ndarray:
    """Unitary sending qubit ``k`` to position ``permutation[k]``."""
    n = len(permutation)
    if sorted(permutation) != list(range(n)):
        raise ValueError(f"{list(permutation)} is not a permutation of range({n})")
    d = 2**n
    P = np.zeros((d, d))
    for idx in range(d):
        bits = [(idx >> (n - 1 - k)) & 1 for k in range(n)]
        new = [0] * n
        for k, b in enumerate(bits):
            new[permutation[k]] = b
        P[int("".join(map(str, new)), 2), idx] = 1
    return P


def permute_channel_qubits(chi: ChiMatrix, permutation: Sequence[int]) -> ChiMatrix:
    """Conjugate the channel by a qubit permutation: ``P o chan o P^dagger``."""
    if len(permutation) != chi.n_qubits:
        raise ValueError("permutation length does not match the channel")
    P = permutation_unitary(permutation)
    left = np.kron(P, P.conj())
    right = np.kron(P.conj().T, P.T)
    sop = chi_to_superop(chi)
    return superop_to_chi(SuperOperator(left @ sop.data @ right, chi.n_qubits))


def process_fidelity(a: ChiMatrix, b: ChiMatrix) -> float:
    """``Tr(chi_a chi_b) / (Tr chi_a Tr chi_b)``."""
    _check_same_dim(a, b)
    ta, tb = np.trace(a.data).real, np.trace(b.data).real
    if abs(ta) < 1e-15 or abs(tb) < 1e-15:
        raise ValueError("zero-trace chi matrix")
    return float(np.trace(a.data @ b.data).real / (ta * tb))


def channel_fidelity(a: ChiMatrix, b: ChiMatrix) -> float:
    """Uhlmann fidelity of the trace-normalized chi matrices.

    Equals :func:`process_fidelity` when either channel is unitary and is 1
    for identical channels, which the normalized overlap is not for mixed chi.
    """
    _check_same_dim(a, b)
    ra = a.data / np.trace(a.data).real
    rb = b.data / np.trace(b.data).real
    # ||sqrt(a) sqrt(b)||_1^2 avoids square roots of round-off eigenvalues
    return float(np.linalg.svd(_psd_sqrt(ra) @ _psd_sqrt(rb), compute_uv=False).sum() ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.where(w > 1e-13 * w.max(), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def error_bound(fidelity: float) -> float:
    """Lower bound ``1 - F`` on the per-gate error probability."""
    if not -ATOL <= fidelity <= 1 + ATOL:
        raise ValueError(f"fidelity {fidelity} outside [0, 1]")
    return 1.0 - fidelity


@dataclass(frozen=True, eq=False)
class SwapResult:
    chi: ChiMatrix
    fidelity: float
    epsilon: float
    stage_tp_residuals: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"fidelity": self.fidelity, "epsilon": self.epsilon,
                "stage_tp_residuals": list(self.stage_tp_residuals)}


def swap_simulation(chi_cnot: ChiMatrix) -> SwapResult:
    """Three CNOTs with the middle one reversed, compared against SWAP."""
    if chi_cnot.n_qubits != 2:
        raise ValueError("SWAP composition needs a two-qubit channel")
    reversed_cnot = permute_channel_qubits(chi_cnot, [1, 0])
    stage1 = compose(chi_cnot, reversed_cnot)
    swap = compose(stage1, chi_cnot)
    fid = process_fidelity(chi_of_unitary(SWAP), swap)
    residuals = (chi_cnot.tp_residual(), stage1.tp_residual(), swap.tp_residual())
    return SwapResult(swap, fid, error_bound(min(max(fid, 0.0), 1.0)), residuals)


def chi_bar_rows(chi: ChiMatrix) -> list[dict]:
    """Bar heights of Re/Im chi for plotting, one row per matrix element."""
    labels = pauli_labels(chi.n_qubits)
    return [
        {"row": i, "col": j, "row_label": labels[i], "col_label": labels[j],
         "real": float(chi.data[i, j].real), "imag": float(chi.data[i, j].imag)}
        for i in range(len(labels)) for j in range(len(labels))
    ]


IDEAL_CNOT = chi_of_unitary(CNOT)
