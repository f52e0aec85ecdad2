"""Sample statistics and reproducible random streams.

Every simulation in the package draws from :func:`stream` so that a
``SeedSpec`` fully determines its output.  Moments are computed with
exactly rounded sums (:func:`math.fsum`), which makes :func:`summarize`
independent of the order of the observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from sklearn.utils import check_array

from ._errors import DomainError

__all__ = [
    "MeasurementBatch",
    "SampleSummary",
    "SeedSpec",
    "RNG_ALGORITHM",
    "MOMENT_CONVENTION",
    "check_measurements",
    "summarize",
    "cv_of_sd",
    "stream",
    "chunked_streams",
]

RNG_ALGORITHM = "numpy PCG64 / SeedSequence(root_seed, spawn_key=(stream_id, *path))"
MOMENT_CONVENTION = "adjusted Fisher-Pearson (G1 skewness, G2 excess kurtosis)"

MIN_FIT_SIZE = 8


def check_measurements(X, *, min_samples: int = 2) -> np.ndarray:
    """Validate measurements and return them as a 1-D float64 array.

    Accepts a sequence, a 1-D array or a single-column 2-D array (the
    scikit-learn ``(n_samples, 1)`` layout).
    """
    arr = check_array(
        X,
        ensure_2d=False,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_min_samples=1,
        input_name="X",
    )
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(
                f"expected a single measurement column, got shape {arr.shape}"
            )
        arr = arr[:, 0]
    if arr.shape[0] < min_samples:
        raise DomainError(
            f"insufficient observations: n={arr.shape[0]} < {min_samples}"
        )
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class MeasurementBatch:
    """Ordered measurements of one dimension."""

    dimension_id: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = check_measurements(self.values, min_samples=2)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def fittable(self) -> bool:
        return self.n >= MIN_FIT_SIZE

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class SampleSummary:
    """Location, dispersion and shape of a sample.

    ``sd`` uses the ``n - 1`` divisor.  ``cv_s`` is the normal-theory
    coefficient of variation of ``sd``.
    """

    n: int
    mean: float
    sd: float
    skewness: float
    excess_kurtosis: float
    cv_s: float
    moment_convention: str = MOMENT_CONVENTION

    @property
    def variance(self) -> float:
        return self.sd * self.sd


def cv_of_sd(n: int) -> float:
    """Approximate coefficient of variation of the sample standard deviation.

    ``1 / sqrt(2 (n - 1))`` from the chi-square law of ``(n-1) S^2 / sigma^2``.

    >>> round(cv_of_sd(32), 3)
    0.127
    """
    if int(n) != n or n < 2:
        raise DomainError(f"cv_of_sd requires an integer n >= 2, got {n!r}")
    return 1.0 / math.sqrt(2.0 * (int(n) - 1))


def summarize(batch) -> SampleSummary:
    """Two-pass sample moments of a batch (or of a raw array of values)."""
    values = batch.values if isinstance(batch, MeasurementBatch) else check_measurements(batch)
    n = int(values.shape[0])
    if n < 2:
        raise DomainError("insufficient observations")
    xs = values.tolist()
    # a constant sample has S = 0 exactly even when fsum(xs) / n rounds
    mean = xs[0] if min(xs) == max(xs) else math.fsum(xs) / n
    # deviations are rescaled by a power of two (exact) so that squares and
    # fourth powers neither underflow nor overflow
    big = max(abs(x - mean) for x in xs)
    scale = math.ldexp(1.0, math.frexp(big)[1]) if big > 0 else 1.0
    dev = [(x - mean) / scale for x in xs]
    ss = math.fsum(d * d for d in dev)
    sd = scale * math.sqrt(ss / (n - 1))

    skew = kurt = math.nan
    if ss > 0.0:
        m2 = ss / n
        m3 = math.fsum(d * d * d for d in dev) / n
        m4 = math.fsum((d * d) * (d * d) for d in dev) / n
        if n >= 3:
            g1 = m3 / m2**1.5
            skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
        if n >= 4:
            g2 = m4 / (m2 * m2) - 3.0
            kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return SampleSummary(
        n=n,
        mean=mean,
        sd=sd,
        skewness=skew,
        excess_kurtosis=kurt,
        cv_s=cv_of_sd(n),
    )


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one reproducible random stream.

    ``path`` extends the spawn key for derived sub-streams, so that
    ``SeedSpec(7, 3).child(0)`` and ``SeedSpec(7, 3).child(1)`` never share
    state with each other or with their parent.
    """

    root_seed: int = 0
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("root_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v!r}")
        if any(int(p) < 0 for p in self.path):
            raise DomainError("sub-stream indices must be non-negative")

    def child(self, index: int) -> "SeedSpec":
        return SeedSpec(self.root_seed, self.stream_id, self.path + (int(index),))

    @property
    def spawn_key(self) -> tuple[int, ...]:
        return (int(self.stream_id),) + tuple(int(p) for p in self.path)

    def as_dict(self) -> dict:
        return {"root_seed": self.root_seed, "stream_id": self.stream_id, "path": list(self.path)}


def stream(seed: SeedSpec) -> np.random.Generator:
    """Return a fresh generator for ``seed``.

    Handles are single-owner; derive one per task with :meth:`SeedSpec.child`.
    """
    ss = np.random.SeedSequence(entropy=int(seed.root_seed), spawn_key=seed.spawn_key)
    return np.random.Generator(np.random.PCG64(ss))


def chunked_streams(seed: SeedSpec, total: int, chunk: int) -> Iterator[tuple[np.random.Generator, int]]:
    """Split ``total`` work items into fixed-size chunks with their own streams.

    Chunk ``i`` always draws from ``seed.child(i)``, so results do not
    depend on how chunks are scheduled.
    """
    if chunk < 1:
        raise DomainError("chunk size must be positive")
    done = 0
    i = 0
    while done < total:
        size = min(chunk, total - done)
        yield stream(seed.child(i)), size
        done += size
        i += 1
