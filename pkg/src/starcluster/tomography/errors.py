"""Monte Carlo error bars from Poisson resampling of the counts."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .records import MeasurementRecord

Records = Union[MeasurementRecord, Mapping[object, MeasurementRecord]]


def _resample(records: Records, rng: np.random.Generator) -> Records:
    if isinstance(records, MeasurementRecord):
        return records.resampled(rng)
    return {key: rec.resampled(rng) for key, rec in records.items()}


def monte_carlo_samples(records: Records, functional: Callable[[Records], float],
                        n_samples: int = 100, rng: Optional[np.random.Generator] = None,
                        n_jobs: int = 1) -> np.ndarray:
    """Functional values over ``n_samples`` Poisson-resampled copies of ``records``.

    Every sample owns a child generator spawned up front, so the values do not
    depend on ``n_jobs``.
    """
    if n_samples < 2:
        raise ValueError("need at least two Monte Carlo samples")
    rng = np.random.default_rng() if rng is None else rng
    children = rng.spawn(n_samples)

    def one(child):
        return float(functional(_resample(records, child)))

    if n_jobs == 1:
        return np.array([one(s) for s in children])
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return np.array(list(pool.map(one, children)))


def monte_carlo_errors(records: Records, functional: Callable[[Records], float],
                       n_samples: int = 100, rng: Optional[np.random.Generator] = None,
                       n_jobs: int = 1) -> tuple[float, float]:
    """``(mean, standard deviation)`` of ``functional`` under count resampling.

    ``records`` is a single record or a mapping of records (e.g. one per
    probe state); ``functional`` receives the same structure.
    """
    values = monte_carlo_samples(records, functional, n_samples, rng, n_jobs)
    return float(values.mean()), float(values.std(ddof=1))
