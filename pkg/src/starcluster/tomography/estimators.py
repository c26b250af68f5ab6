"""Estimator-style wrappers so reconstructions plug into scikit-learn tooling."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_consistent_length, check_is_fitted

from .._validation import check_record, check_states
from ..channels import apply_chi
from .process import fit_chi, process_tomography
from .records import born_probabilities
from .state import linear_reconstruct, mle_state


class StateTomography(BaseEstimator):
    """Reconstruct a density matrix from a :class:`MeasurementRecord`.

    Parameters
    ----------
    method : {"mle", "linear"}
    cost : {"lsq", "poisson"}
        MLE objective; ignored for linear inversion.
    max_iter, tol : optimizer limits.
    """

    def __init__(self, method="mle", cost="lsq", max_iter=5000, tol=1e-10):
        self.method = method
        self.cost = cost
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        record = check_record(X)
        if self.method == "mle":
            est = mle_state(record, cost=self.cost, max_iter=self.max_iter, tol=self.tol)
        elif self.method == "linear":
            est = linear_reconstruct(record)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.estimate_ = est
        self.rho_ = est.rho
        self.n_qubits_ = record.n_qubits
        return self

    def score(self, X, y=None):
        """Poisson log-likelihood of ``X`` under the fitted state (up to a constant)."""
        check_is_fitted(self, "rho_")
        record = check_record(X)
        p = np.maximum(born_probabilities(self.rho_, record.settings), 1e-12)
        mu = p * record.totals()[:, None]
        return float(np.sum(record.counts * np.log(mu) - mu))

    def fidelity(self, target):
        check_is_fitted(self, "rho_")
        return self.estimate_.fidelity(target)


class ProcessTomography(BaseEstimator):
    """Fit a trace-preserving chi matrix to input/output state pairs.

    ``X`` holds input states (probe label tuples, states or arrays) and ``y``
    the measured outputs (DensityEstimate, DensityMatrix or arrays).
    """

    def __init__(self, tp_tol=1e-7, max_iter=5000):
        self.tp_tol = tp_tol
        self.max_iter = max_iter

    def fit(self, X, y):
        check_consistent_length(X, y)
        inputs, outputs = check_states(X), check_states(y)
        self.chi_ = fit_chi(inputs, outputs, tp_tol=self.tp_tol, max_iter=self.max_iter)
        self.n_qubits_ = self.chi_.n_qubits
        return self

    def fit_probes(self, probe_outputs: Mapping, arity: int):
        self.chi_ = process_tomography(arity, probe_outputs, tp_tol=self.tp_tol,
                                       max_iter=self.max_iter)
        self.n_qubits_ = arity
        return self

    def predict(self, X):
        check_is_fitted(self, "chi_")
        return [apply_chi(self.chi_, rho) for rho in check_states(X)]

    def score(self, X, y):
        """Negative mean squared Frobenius distance between predicted and given outputs."""
        check_consistent_length(X, y)
        pred = self.predict(X)
        errs = [np.linalg.norm(p.data - t.data) ** 2 for p, t in zip(pred, check_states(y))]
        return -float(np.mean(errs))
