"""Process tomography: fit a physical, trace-preserving chi to probe input/output pairs."""

from __future__ import annotations

import itertools
import warnings
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize
from sklearn.exceptions import ConvergenceWarning

from ..channels import ChiMatrix, _tp_tensor, pauli_basis
from ..mbqc import PROBE_LABELS, probe_input_state
from ..qstate import DensityMatrix, as_density
from .state import DensityEstimate, _TriangularParam, project_psd


def probe_combinations(arity: int, labels: Sequence[str] = PROBE_LABELS) -> list[tuple[str, ...]]:
    return list(itertools.product(labels, repeat=arity))


def _normalize_key(key) -> tuple[str, ...]:
    return (key,) if isinstance(key, str) and len(key) == 1 else tuple(key)


def _as_output(value) -> DensityMatrix:
    return value.rho if isinstance(value, DensityEstimate) else as_density(value)


def _linear_maps(inputs: Sequence[np.ndarray], n_qubits: int):
    E = pauli_basis(n_qubits)
    d = 2**n_qubits
    # B[k, a, e, m, n] = (E_m rho_k E_n^dagger)[a, e]
    B = np.einsum("mab,kbc,nec->kaemn", E, np.array(inputs), E.conj(), optimize=True)
    Bmat = B.reshape(len(inputs) * d * d, d**4)
    Q = _tp_tensor(n_qubits)  # [m, n, a, b]
    Qmat = Q.transpose(2, 3, 0, 1).reshape(d * d, d**4)
    return Bmat, Qmat


def fit_chi(inputs: Sequence, outputs: Sequence, tp_tol: float = 1e-7, max_iter: int = 5000,
            max_outer: int = 40) -> ChiMatrix:
    """Least-squares chi with ``chi = L L^dagger`` and a trace-preservation constraint.

    Minimizes ``sum_k ||chan(rho_k) - sigma_k||_F^2``. The constraint is
    enforced with an augmented-Lagrangian penalty whose weight escalates
    by 10x whenever the residual stalls, until ``max|TP - I| < tp_tol``.
    """
    rhos = [as_density(r).data for r in inputs]
    sigmas = [as_density(s).data for s in outputs]
    if len(rhos) != len(sigmas) or not rhos:
        raise ValueError("need matching, nonempty input and output lists")
    d = rhos[0].shape[0]
    n = int(round(np.log2(d)))
    D = d * d
    Bmat, Qmat = _linear_maps(rhos, n)
    y = np.concatenate([s.ravel() for s in sigmas])
    eye = np.eye(d).ravel()

    rank = np.linalg.matrix_rank(np.vstack([Bmat, Qmat]), tol=1e-9)
    degenerate = bool(rank < D * D)

    chi0 = np.linalg.lstsq(Bmat, y, rcond=None)[0].reshape(D, D)
    chi0 = project_psd(chi0)
    param = _TriangularParam(D)
    x = param.from_matrix(_TriangularParam.initial(chi0, floor=1e-7))
    BhB = Bmat.conj().T @ Bmat
    Bhy = Bmat.conj().T @ y
    QhQ = Qmat.conj().T @ Qmat
    Qh = Qmat.conj().T

    lam = np.zeros(d * d, dtype=complex)
    mu = 10.0
    prev = np.inf
    total_iter = 0
    for outer in range(max_outer):
        def fun(x, lam=lam, mu=mu):
            L = param.to_matrix(x)
            chi = L @ L.conj().T
            v = chi.ravel()
            resid = Bmat @ v - y
            R = Qmat @ v - eye
            val = (np.vdot(resid, resid).real + np.vdot(lam, R).real
                   + 0.5 * mu * np.vdot(R, R).real)
            h = 2 * (BhB @ v - Bhy) + Qh @ lam + mu * (QhQ @ v - Qh @ eye)
            G = h.reshape(D, D).conj().T
            G = (G + G.conj().T) / 2
            return val, param.gradient(G, L)

        res = minimize(fun, x, jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-9, "maxcor": 30})
        x = res.x
        total_iter += res.nit
        L = param.to_matrix(x)
        v = (L @ L.conj().T).ravel()
        R = Qmat @ v - eye
        residual = float(np.abs(R).max())
        if residual < tp_tol:
            break
        lam = lam + mu * R
        if residual > 0.25 * prev:
            mu *= 10.0
        prev = residual

    L = param.to_matrix(x)
    chi = L @ L.conj().T
    resid = Bmat @ chi.ravel() - y
    converged = residual < tp_tol
    if not converged:
        warnings.warn(f"chi fit TP residual {residual:.2e} after {outer + 1} rounds",
                      ConvergenceWarning, stacklevel=2)
    meta = {
        "cost": float(np.vdot(resid, resid).real),
        "tp_constraint": "augmented Lagrangian",
        "tp_tol": tp_tol,
        "outer_iterations": outer + 1,
        "inner_iterations": int(total_iter),
        "final_penalty": mu,
        "converged": bool(converged),
        "degenerate": degenerate,
    }
    return ChiMatrix((chi + chi.conj().T) / 2, meta)


def process_tomography(arity: int, probe_outputs: Mapping, labels: Sequence[str] = PROBE_LABELS,
                       **kwargs) -> ChiMatrix:
    """Reconstruct chi from the outputs for every probe combination.

    ``probe_outputs`` maps a label tuple such as ``("+", "H")`` (or a single
    label for one qubit) to a DensityEstimate or density matrix.
    """
    outputs = {_normalize_key(k): v for k, v in probe_outputs.items()}
    combos = probe_combinations(arity, labels)
    missing = [c for c in combos if c not in outputs]
    if missing:
        raise ValueError(f"missing probe combinations: {missing}")
    inputs = [probe_input_state(c) for c in combos]
    return fit_chi(inputs, [_as_output(outputs[c]) for c in combos], **kwargs)
