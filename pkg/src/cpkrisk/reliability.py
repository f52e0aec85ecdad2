"""Approval rules, bootstrap decision reliability and misclassification risk."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._errors import DomainError
from .capability import CapabilityEstimate, SpecificationLimits, cpk_plugin, plugin_cpk
from .statcore import MeasurementBatch, SampleSummary, SeedSpec, check_measurements, chunked_streams, summarize

logger = logging.getLogger(__name__)

__all__ = [
    "RULES",
    "DecisionPolicy",
    "ReliabilitySummary",
    "MisclassificationRisk",
    "bootstrap_cpk",
    "bootstrap_reliability",
    "lcb_analytic",
    "lcb_analytic_array",
    "nearest_rank_quantile",
    "simulate_centered_statistics",
    "misclassification_mc",
    "apply_rule",
    "LCB_CONVENTION",
]

RULES = ("point_threshold", "lcb_bootstrap", "lcb_analytic")
LCB_CONVENTION = "bootstrap percentile, nearest-rank alpha-quantile; resample S with n-1 divisor"

BOOTSTRAP_CHUNK = 1000
MC_CHUNK = 10_000
# raw-sample chunks are capped at this many normal draws
RAW_DRAW_BUDGET = 2_000_000
RAW_SAMPLER_MAX_N = 1000


@dataclass(frozen=True)
class DecisionPolicy:
    c0: float = 1.33
    gamma: float = 0.95
    rule: str = "point_threshold"

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.c0 > 0:
            raise DomainError(f"c0 must be positive, got {self.c0}")
        if self.rule not in RULES:
            raise DomainError(f"unknown rule {self.rule!r}; expected one of {RULES}")

    @property
    def alpha(self) -> float:
        return 1.0 - self.gamma


@dataclass(frozen=True)
class ReliabilitySummary:
    p_hat: float
    lcb: float
    b_resamples: int
    decision: str
    rule_used: str
    cpk_point: float
    n_accepted: int
    n_degenerate: int = 0
    lcb_convention: str = LCB_CONVENTION

    @property
    def degenerate_batch(self) -> bool:
        return self.n_degenerate == self.b_resamples


@dataclass(frozen=True)
class MisclassificationRisk:
    cpk_true: float
    c0: float
    n: int
    replications: int
    p_accept: float
    mc_std_err: float
    type1: float | None
    type2: float | None

    @property
    def error_rate(self) -> float:
        return self.type1 if self.type1 is not None else self.type2


def nearest_rank_quantile(values, q: float) -> float:
    """Smallest value whose empirical CDF reaches ``q`` (rank ``ceil(q n)``)."""
    v = np.sort(np.asarray(values, dtype=float))
    rank = max(1, math.ceil(q * v.size - 1e-9))
    return float(v[rank - 1])


def _batch_values(batch) -> np.ndarray:
    return batch.values if isinstance(batch, MeasurementBatch) else check_measurements(batch)


def bootstrap_cpk(values, spec: SpecificationLimits, n: int, B: int, seed: SeedSpec) -> tuple[np.ndarray, int]:
    """Plug-in Cpk of ``B`` with-replacement resamples of size ``n``.

    Returns the Cpk array and the number of zero-variance resamples (whose
    Cpk is signed infinity by the position of their mean).
    """
    values = np.asarray(values, dtype=float)
    if n < 2:
        raise DomainError("bootstrap resamples need n >= 2")
    out = np.empty(B)
    pos = 0
    for gen, size in chunked_streams(seed, B, BOOTSTRAP_CHUNK):
        idx = gen.integers(0, values.size, size=(size, n))
        x = values[idx]
        out[pos : pos + size] = plugin_cpk(x.mean(axis=1), x.std(axis=1, ddof=1), spec.lsl, spec.usl)
        pos += size
    n_deg = int(np.count_nonzero(np.isinf(out)))
    if n_deg:
        logger.info("%d of %d bootstrap resamples had zero variance", n_deg, B)
    return out, n_deg


def lcb_analytic_array(cpk, n, alpha: float):
    """Bissell-type lower bound ``Cpk (1 - z sqrt(1/(9 n Cpk^2) + 1/(2(n-1))))``."""
    cpk = np.asarray(cpk, dtype=float)
    z = special.ndtri(1.0 - alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = cpk * (1.0 - z * np.sqrt(1.0 / (9.0 * n * cpk * cpk) + 1.0 / (2.0 * (n - 1))))
    return out


def lcb_analytic(summary: SampleSummary, spec: SpecificationLimits, alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    est = cpk_plugin(summary, spec)
    if not est.cpk > 0:
        raise DomainError(f"analytic LCB needs Cpk > 0, got {est.cpk:.4g}")
    return float(lcb_analytic_array(est.cpk, summary.n, alpha))


def _decide(value: float, c0: float) -> str:
    return "accept" if value >= c0 else "reject"


def bootstrap_reliability(
    batch,
    spec: SpecificationLimits,
    policy: DecisionPolicy = DecisionPolicy(),
    B: int = 2000,
    seed: SeedSpec = SeedSpec(),
) -> ReliabilitySummary:
    """Nonparametric bootstrap pass probability and percentile LCB."""
    if B < 100:
        raise DomainError(f"need B >= 100 resamples, got {B}")
    values = _batch_values(batch)
    summary = summarize(values)
    cpk_point = float(plugin_cpk(summary.mean, summary.sd, spec.lsl, spec.usl))
    cpks, n_deg = bootstrap_cpk(values, spec, values.size, B, seed)
    n_acc = int(np.count_nonzero(cpks >= policy.c0))
    lcb = nearest_rank_quantile(cpks, policy.alpha)
    if n_deg == B:
        logger.warning("degenerate batch: every resample has zero variance")
    if policy.rule == "point_threshold":
        decision = _decide(cpk_point, policy.c0)
    elif policy.rule == "lcb_bootstrap":
        decision = _decide(lcb, policy.c0)
    else:
        decision = _decide(lcb_analytic(summary, spec, policy.alpha), policy.c0)
    return ReliabilitySummary(
        p_hat=n_acc / B,
        lcb=lcb,
        b_resamples=B,
        decision=decision,
        rule_used=policy.rule,
        cpk_point=cpk_point,
        n_accepted=n_acc,
        n_degenerate=n_deg,
    )


def apply_rule(evidence, policy: DecisionPolicy, spec: SpecificationLimits | None = None) -> str:
    """Accept/reject from a capability estimate, a sample summary or a bootstrap summary.

    ``point_threshold`` accepts when ``Cpk >= c0`` (inclusive).
    """
    if policy.rule == "lcb_bootstrap":
        if not isinstance(evidence, ReliabilitySummary):
            raise DomainError("lcb_bootstrap rule needs a bootstrap ReliabilitySummary")
        return _decide(evidence.lcb, policy.c0)
    if policy.rule == "lcb_analytic":
        if not isinstance(evidence, SampleSummary) or spec is None:
            raise DomainError("lcb_analytic rule needs a SampleSummary and specification limits")
        return _decide(lcb_analytic(evidence, spec, policy.alpha), policy.c0)
    if isinstance(evidence, CapabilityEstimate):
        cpk = evidence.cpk
    elif isinstance(evidence, ReliabilitySummary):
        cpk = evidence.cpk_point
    elif isinstance(evidence, SampleSummary):
        if spec is None:
            raise DomainError("point rule on a SampleSummary needs specification limits")
        cpk = cpk_plugin(evidence, spec).cpk
    else:
        cpk = float(evidence)
    return _decide(cpk, policy.c0)


def _resolve_sampler(sampler: str, n: int) -> str:
    if sampler == "auto":
        return "raw" if n <= RAW_SAMPLER_MAX_N else "sufficient"
    if sampler not in ("raw", "sufficient"):
        raise DomainError(f"unknown sampler {sampler!r}")
    return sampler


def simulate_centered_statistics(
    n: int, R: int, seed: SeedSpec, sampler: str = "auto", mean_offset: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Sample means and sds of ``R`` normal samples of size ``n`` (unit sigma).

    ``"raw"`` draws full samples; ``"sufficient"`` draws ``X-bar`` and
    ``S`` from their exact joint law (normal and scaled chi) which is
    equal in distribution and O(R) in ``n``.
    """
    if n < 2:
        raise DomainError("samples need n >= 2")
    sampler = _resolve_sampler(sampler, n)
    means = np.empty(R)
    sds = np.empty(R)
    pos = 0
    if sampler == "raw":
        chunk = max(1, min(MC_CHUNK, RAW_DRAW_BUDGET // n))
        for gen, size in chunked_streams(seed, R, chunk):
            x = gen.standard_normal((size, n))
            means[pos : pos + size] = x.mean(axis=1)
            sds[pos : pos + size] = x.std(axis=1, ddof=1)
            pos += size
    else:
        for gen, size in chunked_streams(seed, R, MC_CHUNK):
            means[pos : pos + size] = gen.standard_normal(size) / math.sqrt(n)
            sds[pos : pos + size] = np.sqrt(gen.chisquare(n - 1, size) / (n - 1))
            pos += size
    return means + mean_offset, sds


def _accept_mask(cpk_true, n, policy, R, seed, sampler, mean_offset, B):
    half_width = 3.0 * cpk_true
    if policy.rule == "lcb_bootstrap":
        # nested bootstrap: each replicate gets its own resampling stream
        acc = np.empty(R, dtype=bool)
        spec = SpecificationLimits.symmetric(0.0, half_width)
        data_seed, boot_seed = seed.child(0), seed.child(1)
        for i, (gen, _) in enumerate(chunked_streams(data_seed, R, 1)):
            x = gen.standard_normal(n) + mean_offset
            cpks, _ = bootstrap_cpk(x, spec, n, B, boot_seed.child(i))
            acc[i] = nearest_rank_quantile(cpks, policy.alpha) >= policy.c0
        return acc
    means, sds = simulate_centered_statistics(n, R, seed, sampler, mean_offset)
    cpk = plugin_cpk(means, sds, -half_width, half_width)
    if policy.rule == "lcb_analytic":
        cpk = lcb_analytic_array(cpk, n, policy.alpha)
    return cpk >= policy.c0


def misclassification_mc(
    cpk_true: float,
    n: int,
    policy: DecisionPolicy = DecisionPolicy(),
    R: int = 10_000,
    seed: SeedSpec = SeedSpec(),
    sampler: str = "auto",
    mean_offset: float = 0.0,
    B: int = 200,
) -> MisclassificationRisk:
    """Monte Carlo Type I / Type II risk for a centered unit-sigma normal process.

    Limits sit at ``+/- 3 cpk_true``.  Only the error type that applies to
    ``cpk_true`` relative to ``c0`` is reported; the other is ``None``.
    """
    if not cpk_true > 0:
        raise DomainError("cpk_true must be positive")
    if n < 2 or R < 100:
        raise DomainError("need n >= 2 and R >= 100")
    acc = _accept_mask(cpk_true, n, policy, R, seed, sampler, mean_offset, B)
    p = float(np.count_nonzero(acc)) / R
    se = math.sqrt(p * (1.0 - p) / R)
    if cpk_true < policy.c0:
        type1, type2 = p, None
    else:
        type1, type2 = None, 1.0 - p
    return MisclassificationRisk(cpk_true, policy.c0, n, R, p, se, type1, type2)


def acceptance_mc(cpk_true, c0, n, R, seed, sampler="auto", mean_offset=0.0) -> tuple[float, float]:
    """Point-rule acceptance probability and its binomial standard error."""
    acc = _accept_mask(cpk_true, n, DecisionPolicy(c0=c0), R, seed, sampler, mean_offset, 0)
    p = float(np.count_nonzero(acc)) / R
    return p, math.sqrt(p * (1.0 - p) / R)
