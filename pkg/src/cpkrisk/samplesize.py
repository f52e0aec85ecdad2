"""Probability-of-pass curves and reliability-based minimum sample size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._errors import DomainError
from .capability import SpecificationLimits
from .reliability import acceptance_mc, bootstrap_cpk
from .statcore import MeasurementBatch, SeedSpec, check_measurements

__all__ = [
    "PassPoint",
    "PassCurve",
    "SampleSizeResult",
    "pass_curve",
    "n_min_search",
    "bootstrap_pass_curve",
    "DEFAULT_R",
    "DEFAULT_N_MAX",
]

DEFAULT_R = 5000
DEFAULT_N_MAX = 100_000
SE_GUARD = 2.0


@dataclass(frozen=True)
class PassPoint:
    n: int
    p_acc: float
    mc_std_err: float


@dataclass(frozen=True)
class PassCurve:
    cpk_true: float
    c0: float
    points: tuple[PassPoint, ...]
    replications: int
    seed: SeedSpec
    source: str = "normal_mc"

    @property
    def n(self) -> np.ndarray:
        return np.array([p.n for p in self.points])

    @property
    def p_acc(self) -> np.ndarray:
        return np.array([p.p_acc for p in self.points])

    @property
    def mc_std_err(self) -> np.ndarray:
        return np.array([p.mc_std_err for p in self.points])


@dataclass(frozen=True)
class SampleSizeResult:
    gamma: float
    cpk_true: float
    c0: float
    n_min: int | None
    status: str
    reason: str = ""
    trace: tuple[PassPoint, ...] = field(default=(), repr=False)

    @property
    def attained(self) -> bool:
        return self.n_min is not None


def _grid(n_grid) -> list[int]:
    grid = [int(n) for n in n_grid]
    if any(n < 2 for n in grid):
        raise DomainError("all grid sizes must be >= 2")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("n_grid must be strictly increasing")
    return grid


def pass_curve(
    cpk_true: float,
    c0: float,
    n_grid,
    R: int = DEFAULT_R,
    seed: SeedSpec = SeedSpec(),
    sampler: str = "auto",
    mean_offset: float = 0.0,
) -> PassCurve:
    """Monte Carlo ``p_acc(n) = P(Cpk_hat_n >= c0 | cpk_true)`` on a grid.

    Size ``n`` draws from ``seed.child(n)`` so a point does not depend on the
    rest of the grid.
    """
    if not cpk_true > 0:
        raise DomainError("cpk_true must be positive")
    if R < 100:
        raise DomainError("need R >= 100 replications")
    pts = []
    for n in _grid(n_grid):
        p, se = acceptance_mc(cpk_true, c0, n, R, seed.child(n), sampler, mean_offset)
        pts.append(PassPoint(n, p, se))
    return PassCurve(cpk_true, c0, tuple(pts), R, seed)


def n_min_search(
    cpk_true: float,
    c0: float,
    gamma: float,
    R: int = DEFAULT_R,
    n_max: int = DEFAULT_N_MAX,
    seed: SeedSpec = SeedSpec(),
    n_start: int = 2,
    sampler: str = "auto",
) -> SampleSizeResult:
    """Smallest ``n`` with estimated ``p_acc(n) >= gamma``.

    Doubling scan from ``n_start``, then integer bisection between the last
    failing and first passing size.  Declared unattainable when
    ``p_acc(n_max) + 2 se < gamma``; a shortfall inside two standard
    errors is reported as ``"inconclusive"``.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if n_start < 2 or n_max < n_start:
        raise DomainError("need 2 <= n_start <= n_max")
    if cpk_true <= c0 and gamma > 0.5:
        return SampleSizeResult(
            gamma, cpk_true, c0, None, "unattainable",
            "unattainable: true capability at or below threshold",
        )
    cache: dict[int, PassPoint] = {}

    def evaluate(n):
        if n not in cache:
            p, se = acceptance_mc(cpk_true, c0, n, R, seed.child(n), sampler)
            cache[n] = PassPoint(n, p, se)
        return cache[n]

    def trace():
        return tuple(cache[k] for k in sorted(cache))

    lo, n = None, n_start
    while True:
        pt = evaluate(n)
        if pt.p_acc >= gamma:
            hi = n
            break
        lo = n
        if n == n_max:
            if pt.p_acc + SE_GUARD * pt.mc_std_err < gamma:
                return SampleSizeResult(
                    gamma, cpk_true, c0, None, "unattainable",
                    f"p_acc({n_max}) = {pt.p_acc:.4f} is below gamma by more than {SE_GUARD:g} SE",
                    trace(),
                )
            return SampleSizeResult(
                gamma, cpk_true, c0, None, "inconclusive",
                f"p_acc({n_max}) = {pt.p_acc:.4f} is within {SE_GUARD:g} SE of gamma",
                trace(),
            )
        n = min(2 * n, n_max)
    if lo is None:
        return SampleSizeResult(gamma, cpk_true, c0, hi, "attained", "grid minimum passes", trace())
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(mid).p_acc >= gamma:
            hi = mid
        else:
            lo = mid
    return SampleSizeResult(gamma, cpk_true, c0, hi, "attained", "", trace())


def bootstrap_pass_curve(
    batch,
    spec: SpecificationLimits,
    c0: float,
    n_grid,
    B: int = 2000,
    seed: SeedSpec = SeedSpec(),
) -> PassCurve:
    """Bootstrap estimate of ``p_acc(n)`` from the empirical distribution.

    Grid size ``n`` resamples from ``seed.child(n)``, matching
    :func:`~cpkrisk.reliability.bootstrap_reliability` called with that seed.
    """
    values = batch.values if isinstance(batch, MeasurementBatch) else check_measurements(batch)
    pts = []
    for n in _grid(n_grid):
        cpks, _ = bootstrap_cpk(values, spec, n, B, seed.child(n))
        p = float(np.count_nonzero(cpks >= c0)) / B
        pts.append(PassPoint(n, p, math.sqrt(p * (1.0 - p) / B)))
    return PassCurve(math.nan, c0, tuple(pts), B, seed, source="bootstrap")
