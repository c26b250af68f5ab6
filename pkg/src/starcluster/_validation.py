"""Input coercion shared by the estimator classes and the CLI."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .qstate import DensityMatrix, PureState, as_density


def check_record(X):
    from .tomography.records import MeasurementRecord

    if isinstance(X, MeasurementRecord):
        return X
    if isinstance(X, str):
        return MeasurementRecord.from_csv(X)
    raise TypeError(f"expected a MeasurementRecord or CSV text, got {type(X).__name__}")


def check_state(x) -> DensityMatrix:
    """Density matrix from a state, an array, a DensityEstimate, or probe labels."""
    from .mbqc import probe_input_state
    from .tomography.state import DensityEstimate

    if isinstance(x, DensityEstimate):
        return x.rho
    if isinstance(x, (DensityMatrix, PureState, np.ndarray)):
        return as_density(x)
    if isinstance(x, str) or (isinstance(x, (tuple, list)) and all(isinstance(c, str) for c in x)):
        return probe_input_state(tuple(x)).to_density()
    return as_density(np.asarray(x))


def check_states(X: Sequence) -> list[DensityMatrix]:
    states = [check_state(x) for x in X]
    if not states:
        raise ValueError("empty state list")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise ValueError(f"states of mixed dimension {sorted(dims)}")
    return states


def check_fraction(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value} outside [0, 1]")
    return value
