"""Pauli-basis measurement settings, count records, and Poissonian count simulation.

Each qubit is analysed in X ({|+>, |->}), Y ({|L>, |R>}) or Z ({|H>, |V>}).
Outcome bit 0 is the +1 eigenvector, so ``|L> = (|H> + i|V>)/sqrt(2)`` is
outcome 0 of Y. Outcome bitstrings list qubit 0 first.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Optional, Sequence

import numpy as np

from ..qstate import KET, as_density

_BASIS_KETS = {"X": (KET["+"], KET["-"]), "Y": (KET["L"], KET["R"]), "Z": (KET["H"], KET["V"])}


def pauli_settings(n_qubits: int) -> tuple[str, ...]:
    """All ``3**n`` settings, e.g. ``("XX", "XY", ..., "ZZ")``."""
    return tuple("".join(s) for s in itertools.product("XYZ", repeat=n_qubits))


def outcome_labels(n_qubits: int) -> tuple[str, ...]:
    return tuple(format(k, f"0{n_qubits}b") for k in range(2**n_qubits))


@lru_cache(maxsize=None)
def setting_unitary(setting: str) -> np.ndarray:
    """Rows are the outcome bras, so ``diag(U rho U^dagger)`` are the probabilities."""
    rows = []
    for c in setting:
        try:
            k0, k1 = _BASIS_KETS[c]
        except KeyError:
            raise ValueError(f"invalid basis label {c!r} in setting {setting!r}") from None
        rows.append(np.array([k0.conj(), k1.conj()]))
    u = reduce(np.kron, rows)
    u.flags.writeable = False
    return u


@lru_cache(maxsize=None)
def projector_stack(settings: tuple[str, ...]) -> np.ndarray:
    """Outcome projectors, shape ``(n_settings, 2**n, d, d)``."""
    out = []
    for s in settings:
        u = setting_unitary(s)
        out.append(np.einsum("ka,kb->kab", u.conj(), u))
    arr = np.array(out)
    arr.flags.writeable = False
    return arr


def born_probabilities(rho, settings: Sequence[str]) -> np.ndarray:
    rho = as_density(rho)
    U = np.array([setting_unitary(s) for s in settings])
    p = np.einsum("ska,ab,skb->sk", U, rho.data, U.conj(), optimize=True).real
    return np.clip(p, 0.0, None)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Counts per (setting, outcome); the raw data of a tomography run.

    ``counts`` may be non-integer for noiseless expected-count records.
    """

    settings: tuple[str, ...]
    counts: np.ndarray
    shots: Optional[float] = None

    def __post_init__(self):
        settings = tuple(s.upper() for s in self.settings)
        if not settings:
            raise ValueError("record has no settings")
        n = len(settings[0])
        if any(len(s) != n for s in settings):
            raise ValueError("settings have unequal length")
        counts = np.array(self.counts, dtype=float)
        if counts.shape != (len(settings), 2**n):
            raise ValueError(
                f"counts shape {counts.shape} != ({len(settings)}, {2**n})"
            )
        if (counts < 0).any() or not np.isfinite(counts).all():
            raise ValueError("counts must be finite and nonnegative")
        counts.flags.writeable = False
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "counts", counts)

    @property
    def n_qubits(self) -> int:
        return len(self.settings[0])

    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def frequencies(self) -> np.ndarray:
        tot = self.totals()
        return self.counts / np.where(tot > 0, tot, 1.0)[:, None]

    def is_complete(self) -> bool:
        return set(pauli_settings(self.n_qubits)) <= set(self.settings)

    def resampled(self, rng: np.random.Generator) -> "MeasurementRecord":
        """Each count ``c`` replaced by a ``Poisson(c)`` draw."""
        return MeasurementRecord(self.settings, rng.poisson(self.counts), self.shots)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting", "outcome", "count"])
        integral = np.allclose(self.counts, np.round(self.counts))
        for s, row in zip(self.settings, self.counts):
            for lab, c in zip(outcome_labels(self.n_qubits), row):
                w.writerow([s, lab, int(round(c)) if integral else repr(float(c))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, shots: Optional[float] = None) -> "MeasurementRecord":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty counts file")
        settings = list(dict.fromkeys(r["setting"].strip().upper() for r in rows))
        n = len(settings[0])
        counts = np.zeros((len(settings), 2**n))
        seen = set()
        for r in rows:
            s, o = r["setting"].strip().upper(), r["outcome"].strip()
            if len(o) != n or set(o) - {"0", "1"}:
                raise ValueError(f"bad outcome {o!r} for setting {s!r}")
            if (s, o) in seen:
                raise ValueError(f"duplicate row for {s} {o}")
            seen.add((s, o))
            counts[settings.index(s), int(o, 2)] = float(r["count"])
        return cls(tuple(settings), counts, shots)


def exact_record(rho, settings: Optional[Sequence[str]] = None, shots: float = 1.0) -> MeasurementRecord:
    """Noiseless record: counts equal ``shots`` times the Born probabilities."""
    rho = as_density(rho)
    settings = tuple(settings) if settings is not None else pauli_settings(rho.n_qubits)
    return MeasurementRecord(settings, shots * born_probabilities(rho, settings), shots)


def simulate_counts(rho, settings: Optional[Sequence[str]] = None, shots: float = 600,
                    rng: Optional[np.random.Generator] = None) -> MeasurementRecord:
    """Independent ``Poisson(shots * p)`` counts for every setting and outcome."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng() if rng is None else rng
    rho = as_density(rho)
    settings = tuple(settings) if settings is not None else pauli_settings(rho.n_qubits)
    mean = shots * born_probabilities(rho, settings)
    return MeasurementRecord(settings, rng.poisson(mean), shots)
