"""Capability indices and the mapping to defect probability / PPM."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._errors import DegenerateSampleError, DomainError
from .distributions import DistributionModel, normal_logcdf, normal_logsf
from .statcore import SampleSummary

logger = logging.getLogger(__name__)

__all__ = [
    "SpecificationLimits",
    "CapabilityEstimate",
    "DefectRisk",
    "PPMTriplet",
    "ModelDistortion",
    "PERCENTILE_LEVELS",
    "plugin_cpk",
    "cpk_plugin",
    "cpk_percentile",
    "defect_risk",
    "normal_defect_risk",
    "perturbed_ppm",
    "perturbed_ppm_fitted",
    "model_distortion",
    "format_ppm",
]

# Phi(-3) and Phi(3): the "0.135 % / 99.865 %" points, kept exact so that a
# normal model spans exactly 3 sigma between median and tail quantile.
PERCENTILE_LEVELS = (float(special.ndtr(-3.0)), float(special.ndtr(3.0)))

_LN10 = math.log(10.0)
# Below this a linear float loses precision (subnormal range).
_LOG10_LINEAR_FLOOR = -300.0


@dataclass(frozen=True)
class SpecificationLimits:
    nominal: float
    tol_plus: float
    tol_minus: float

    def __post_init__(self):
        if not (self.tol_plus > 0 and self.tol_minus > 0):
            raise DomainError("tolerances must be positive")
        if math.isnan(self.nominal):
            raise DomainError("nominal must be a number")

    @classmethod
    def symmetric(cls, nominal: float, tol: float) -> "SpecificationLimits":
        return cls(nominal, tol, tol)

    @classmethod
    def from_limits(cls, lsl: float, usl: float) -> "SpecificationLimits":
        if not lsl < usl:
            raise DomainError(f"need lsl < usl, got {lsl}, {usl}")
        if math.isfinite(lsl) and math.isfinite(usl):
            mid = 0.5 * (lsl + usl)
            return cls(mid, usl - mid, mid - lsl)
        # one-sided or unbounded: nominal is a unit inside the finite limit
        if math.isfinite(usl):
            return cls(usl - 1.0, 1.0, math.inf)
        if math.isfinite(lsl):
            return cls(lsl + 1.0, math.inf, 1.0)
        return cls(0.0, math.inf, math.inf)

    @property
    def lsl(self) -> float:
        return self.nominal - self.tol_minus

    @property
    def usl(self) -> float:
        return self.nominal + self.tol_plus

    @property
    def symmetric_tolerance(self) -> bool:
        return self.tol_plus == self.tol_minus


@dataclass(frozen=True)
class CapabilityEstimate:
    cpk: float
    method: str
    source_model: str
    z_lower: float = math.nan
    z_upper: float = math.nan

    @property
    def incapable_by_location(self) -> bool:
        return not self.cpk > 0


def plugin_cpk(mean, sd, lsl, usl):
    """Vectorised ``min((usl - mean), (mean - lsl)) / (3 sd)``.

    Zero ``sd`` maps to ``+inf`` when the mean is inside the limits and to
    ``-inf`` otherwise.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    dist = np.minimum(usl - mean, mean - lsl)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = dist / (3.0 * sd)
    zero = sd == 0
    if np.any(zero):
        out = np.where(zero, np.where(dist > 0, np.inf, -np.inf), out)
    return out[()] if out.ndim == 0 else out


def cpk_plugin(summary: SampleSummary, spec: SpecificationLimits) -> CapabilityEstimate:
    """Plug-in Cpk from the sample mean and ``n - 1`` standard deviation."""
    if not summary.sd > 0:
        raise DegenerateSampleError("degenerate dispersion: S = 0")
    if not spec.symmetric_tolerance:
        logger.info("asymmetric tolerance (+%g/-%g)", spec.tol_plus, spec.tol_minus)
    s = summary.sd
    cpk = min((spec.usl - summary.mean) / (3.0 * s), (summary.mean - spec.lsl) / (3.0 * s))
    if not cpk > 0:
        logger.warning("incapable by location: Cpk = %.4g", cpk)
    return CapabilityEstimate(
        cpk=cpk,
        method="normal_plugin",
        source_model="Normal",
        z_lower=(summary.mean - spec.lsl) / s,
        z_upper=(spec.usl - summary.mean) / s,
    )


def cpk_percentile(model: DistributionModel, spec: SpecificationLimits) -> CapabilityEstimate:
    """Percentile (ISO 22514 style) capability index from a fitted model.

    ``min((usl - q50) / (q99.865 - q50), (q50 - lsl) / (q50 - q0.135))``.
    """
    lo_p, hi_p = PERCENTILE_LEVELS
    med = model.median()
    q_hi = float(model.isf(lo_p))
    q_lo = float(model.ppf(lo_p))
    if not (q_lo < med < q_hi):
        raise DomainError(f"quantiles of {model.describe()} are not ordered")
    cpk = min((spec.usl - med) / (q_hi - med), (med - spec.lsl) / (med - q_lo))
    return CapabilityEstimate(cpk=cpk, method="percentile_fitted", source_model=model.family)


@dataclass(frozen=True)
class DefectRisk:
    """Out-of-specification probability, carried as natural-log tail masses.

    Linear accessors may underflow to zero; ``log10_ppm`` never does unless
    the probability is genuinely zero (infinite limits).
    """

    log_lower: float
    log_upper: float

    @property
    def log_p(self) -> float:
        return float(np.logaddexp(self.log_lower, self.log_upper))

    @property
    def p_defect(self) -> float:
        return math.exp(self.log_p)

    @property
    def lower_tail_ppm(self) -> float:
        return 1e6 * math.exp(self.log_lower)

    @property
    def upper_tail_ppm(self) -> float:
        return 1e6 * math.exp(self.log_upper)

    @property
    def ppm(self) -> float:
        return 1e6 * self.p_defect

    @property
    def log10_ppm(self) -> float:
        lp = self.log_p
        return lp / _LN10 + 6.0 if lp > -math.inf else -math.inf

    @property
    def underflow(self) -> bool:
        return self.log10_ppm < _LOG10_LINEAR_FLOOR and self.log_p > -math.inf

    def display(self) -> str:
        return format_ppm(self.ppm, self.log10_ppm)


@dataclass(frozen=True)
class PPMTriplet:
    """Defect risk at S, S(1 + cv) and S(1 - cv)."""

    base: DefectRisk
    plus: DefectRisk
    minus: DefectRisk
    cv: float

    def ppm(self) -> tuple[float, float, float]:
        return (self.base.ppm, self.plus.ppm, self.minus.ppm)

    def log10(self) -> tuple[float, float, float]:
        return (self.base.log10_ppm, self.plus.log10_ppm, self.minus.log10_ppm)

    @property
    def relative_increase(self) -> float:
        """``(ppm_plus - ppm0) / ppm0``, computed in log space."""
        return math.expm1((self.plus.log10_ppm - self.base.log10_ppm) * _LN10)


@dataclass(frozen=True)
class ModelDistortion:
    delta_cpk: float


def defect_risk(model: DistributionModel, spec: SpecificationLimits) -> DefectRisk:
    """``F(lsl) + 1 - F(usl)`` under the model's own parameterization."""
    lsl, usl = spec.lsl, spec.usl
    log_lower = float(model.logcdf(lsl)) if lsl > -math.inf else -math.inf
    log_upper = float(model.logsf(usl)) if usl < math.inf else -math.inf
    return DefectRisk(log_lower, log_upper)


def normal_defect_risk(mean: float, sd: float, spec: SpecificationLimits) -> DefectRisk:
    if not sd > 0:
        raise DegenerateSampleError("degenerate dispersion: sd = 0")
    lsl, usl = spec.lsl, spec.usl
    log_lower = float(normal_logcdf((lsl - mean) / sd)) if lsl > -math.inf else -math.inf
    log_upper = float(normal_logsf((usl - mean) / sd)) if usl < math.inf else -math.inf
    return DefectRisk(log_lower, log_upper)


def _check_cv(cv: float) -> float:
    cv = float(cv)
    if not 0.0 <= cv < 1.0:
        raise DomainError(f"perturbation cv must lie in [0, 1), got {cv} (n too small)")
    return cv


def perturbed_ppm(summary: SampleSummary, spec: SpecificationLimits, cv: float | None = None) -> PPMTriplet:
    """Normal-model defect risk with the mean fixed and S scaled by 1 and 1 +/- cv."""
    cv = _check_cv(summary.cv_s if cv is None else cv)
    if not summary.sd > 0:
        raise DegenerateSampleError("degenerate dispersion: S = 0")
    m, s = summary.mean, summary.sd
    return PPMTriplet(
        normal_defect_risk(m, s, spec),
        normal_defect_risk(m, s * (1.0 + cv), spec),
        normal_defect_risk(m, s * (1.0 - cv), spec),
        cv,
    )


def perturbed_ppm_fitted(
    model: DistributionModel, spec: SpecificationLimits, cv: float, mode: str = "dispersion"
) -> PPMTriplet:
    """Fitted-model defect risk with the model's spread scaled by 1 and 1 +/- cv.

    See :meth:`DistributionModel.with_dispersion` for what is scaled per family.
    """
    cv = _check_cv(cv)
    if mode == "dispersion" and model.family in ("Lognormal", "Weibull"):
        logger.info("%s perturbation scales the log-scale dispersion with the median fixed", model.family)
    return PPMTriplet(
        defect_risk(model, spec),
        defect_risk(model.with_dispersion(1.0 + cv, mode), spec),
        defect_risk(model.with_dispersion(1.0 - cv, mode), spec) if cv > 0 else defect_risk(model, spec),
        cv,
    )


def model_distortion(cpk_fitted: float, cpk_normal: float) -> ModelDistortion:
    if not (math.isfinite(cpk_fitted) and math.isfinite(cpk_normal)):
        raise DomainError("model distortion needs finite Cpk values")
    return ModelDistortion(cpk_fitted - cpk_normal)


def format_ppm(value: float, log10_value: float | None = None) -> str:
    """Table-style rendering: 3 significant digits, scientific below 0.01 or from 1e5.

    Values too small for a float are rendered from ``log10_value``.
    """
    if log10_value is None:
        log10_value = math.log10(value) if value > 0 else -math.inf
    if log10_value == -math.inf:
        return "0"
    if value == 0.0 or not math.isfinite(value) or abs(value) < 0.01 or abs(value) >= 1e5:
        exp = math.floor(log10_value)
        mant = 10.0 ** (log10_value - exp)
        if round(mant, 2) >= 10.0:
            mant /= 10.0
            exp += 1
        if exp >= 0:
            return f"{mant:.2f}e{exp}"
        return f"{mant:.2f}e-{-exp:02d}"
    if abs(value) >= 100:
        return f"{value:.0f}"
    return f"{value:#.3g}"
