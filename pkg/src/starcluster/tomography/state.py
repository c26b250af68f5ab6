"""Density-matrix reconstruction: linear inversion and constrained maximum likelihood."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from sklearn.exceptions import ConvergenceWarning

from ..channels import pauli_basis, pauli_labels
from ..qstate import DensityMatrix, PureState, state_fidelity
from .records import MeasurementRecord, projector_stack

MLE_METADATA = {
    "parameterization": "rho = L L^dagger / Tr(L L^dagger), L lower triangular",
    "optimizer": "L-BFGS-B warm-started from PSD-projected linear inversion",
}


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    rho: DensityMatrix
    method: str
    cost: float = 0.0
    converged: bool = True
    n_iter: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def min_eigenvalue(self) -> float:
        return self.rho.min_eigenvalue()

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -1e-9

    def fidelity(self, target: PureState) -> float:
        return state_fidelity(target, self.rho)


def _pauli_table(n_qubits: int):
    return pauli_labels(n_qubits), pauli_basis(n_qubits)


def _inversion_weights(settings: tuple[str, ...], labels: tuple[str, ...], n: int) -> np.ndarray:
    # W[P, s, k]: contribution of frequency f[s, k] to the estimate of <P>
    K = 2**n
    bits = (np.arange(K)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    W = np.zeros((len(labels), len(settings), K))
    for i, lab in enumerate(labels):
        support = [j for j, c in enumerate(lab) if c != "I"]
        compatible = [s for s, setting in enumerate(settings)
                      if all(setting[j] == lab[j] for j in support)]
        if not compatible:
            raise ValueError(f"no setting measures Pauli {lab}; record is incomplete")
        sign = (-1.0) ** bits[:, support].sum(axis=1)
        for s in compatible:
            W[i, s] = sign / len(compatible)
    return W


def pauli_estimates(record: MeasurementRecord) -> tuple[tuple[str, ...], np.ndarray]:
    """Empirical ``<P>`` for every Pauli string, averaged over compatible settings."""
    n = record.n_qubits
    labels, _ = _pauli_table(n)
    used = record.totals() > 0
    settings = tuple(s for s, u in zip(record.settings, used) if u)
    W = _inversion_weights(settings, labels, n)
    freqs = record.frequencies()[used]
    return labels, np.einsum("psk,sk->p", W, freqs)


def linear_reconstruct(record: MeasurementRecord) -> DensityEstimate:
    """``rho = 2^-n sum_P <P> P``; may have small negative eigenvalues."""
    n = record.n_qubits
    _, mats = _pauli_table(n)
    _, expect = pauli_estimates(record)
    rho = np.tensordot(expect, mats, axes=1) / 2**n
    rho = DensityMatrix((rho + rho.conj().T) / 2)
    min_eig = rho.min_eigenvalue()
    return DensityEstimate(rho, "linear", metadata={"psd": min_eig >= -1e-9,
                                                    "min_eigenvalue": min_eig})


def project_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize to unit trace."""
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(rho.shape[0]) / rho.shape[0]
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


class _TriangularParam:
    """Real coordinates of a lower-triangular complex matrix."""

    def __init__(self, d: int):
        self.d = d
        self.rows, self.cols = np.tril_indices(d)

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        m = len(self.rows)
        L = np.zeros((self.d, self.d), dtype=complex)
        L[self.rows, self.cols] = x[:m] + 1j * x[m:]
        return L

    def from_matrix(self, L: np.ndarray) -> np.ndarray:
        vals = L[self.rows, self.cols]
        return np.concatenate([vals.real, vals.imag])

    def gradient(self, G: np.ndarray, L: np.ndarray) -> np.ndarray:
        # df = Re Tr(G dX) with X = L L^dagger and G Hermitian
        M = G @ L
        vals = M[self.rows, self.cols]
        return 2 * np.concatenate([vals.real, vals.imag])

    @staticmethod
    def initial(X: np.ndarray, floor: float = 1e-3) -> np.ndarray:
        d = X.shape[0]
        tr = np.trace(X).real
        Xs = (1 - floor) * X + floor * tr * np.eye(d) / d
        return np.linalg.cholesky((Xs + Xs.conj().T) / 2)


def _state_objective(record: MeasurementRecord, cost: str):
    n = record.n_qubits
    d = 2**n
    P = projector_stack(record.settings).reshape(-1, d * d)
    c = record.counts.ravel()
    N = np.repeat(record.totals(), 2**n)
    if cost == "lsq":
        w = 1.0 / np.maximum(c, 1.0)

        def value_and_dp(p):
            r = N * p - c
            return float(np.sum(w * r * r)), 2 * w * r * N
    elif cost == "poisson":
        pos = c > 0
        sat = np.sum(c[pos] * np.log(c[pos]) - c[pos])

        def value_and_dp(p):
            p = np.maximum(p, 1e-12)
            mu = N * p
            val = np.sum(mu) - np.sum(c[pos] * np.log(mu[pos])) + sat
            return float(val), N - c / p
    else:
        raise ValueError(f"unknown cost {cost!r}; use 'lsq' or 'poisson'")
    return P, value_and_dp


def mle_state(record: MeasurementRecord, cost: str = "lsq", max_iter: int = 5000,
              tol: float = 1e-10, init: Optional[np.ndarray] = None) -> DensityEstimate:
    """Physical density matrix closest to the counts.

    ``cost="lsq"`` weights squared count residuals by ``1/max(c, 1)``;
    ``cost="poisson"`` minimizes the Poisson negative log-likelihood. Each
    setting's expected counts are scaled by that setting's observed total.
    """
    d = 2**record.n_qubits
    P, value_and_dp = _state_objective(record, cost)
    if init is None:
        try:
            init = project_psd(linear_reconstruct(record).rho.data)
        except ValueError:
            # some Pauli is unmeasured; start from the maximally mixed state
            init = np.eye(d) / d
    param = _TriangularParam(d)
    x0 = param.from_matrix(_TriangularParam.initial(np.asarray(init)))

    def fun(x):
        L = param.to_matrix(x)
        A = L @ L.conj().T
        t = np.trace(A).real
        rho = A / t
        p = (P @ rho.T.ravel()).real
        val, dp = value_and_dp(p)
        G = (dp @ P).reshape(d, d)
        G = (G + G.conj().T) / 2
        Gp = (G - np.trace(G @ rho).real * np.eye(d)) / t
        return val, param.gradient(Gp, L)

    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-12,
                            "maxcor": 30})
    L = param.to_matrix(res.x)
    A = L @ L.conj().T
    rho = A / np.trace(A).real
    converged = bool(res.success) or res.nit < max_iter
    if not converged:
        warnings.warn(f"state MLE stopped after {res.nit} iterations: {res.message}",
                      ConvergenceWarning, stacklevel=2)
    meta = dict(MLE_METADATA, cost=cost, max_iter=max_iter, ftol=tol)
    return DensityEstimate(DensityMatrix((rho + rho.conj().T) / 2), "mle", float(res.fun),
                           converged, int(res.nit), meta)
