"""Dispersion amplification of defect risk.

The amplification coefficient is the elasticity of the defect probability
with respect to the process spread, ``|d log PPM / d log sigma|``.  For a
centered normal process with ``z = (USL - mu) / sigma = 3 Cpk`` it equals
``z r(z)``, where ``r`` is the Mills ratio ``phi(z) / (1 - Phi(z))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._errors import DegenerateSampleError, DomainError
from .capability import SpecificationLimits, defect_risk
from .distributions import DistributionModel
from .statcore import SampleSummary

__all__ = [
    "AmplificationProfile",
    "TailAmplification",
    "DeltaMethodResult",
    "mills_ratio",
    "amplification_from_z",
    "amplification_normal",
    "amplification_numeric",
    "amplification_by_tail",
    "dispersion_sensitivity",
    "delta_method_var_ppm",
    "FD_STEP",
]

FD_STEP = 1e-5

_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def mills_ratio(z):
    """``phi(z) / (1 - Phi(z))``.

    For ``z >= 0`` this is ``sqrt(2/pi) / erfcx(z / sqrt(2))``, which has no
    underflow for large ``z`` (where ``r(z) ~ z + 1/z``).
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = _SQRT_2_OVER_PI / special.erfcx(z[pos] / _SQRT2)
    zn = z[~pos]
    out[~pos] = _INV_SQRT_2PI * np.exp(-0.5 * zn * zn) / (0.5 * special.erfc(zn / _SQRT2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AmplificationProfile:
    z: float
    mills: float
    a_sigma: float

    @property
    def cpk_equiv(self) -> float:
        return self.z / 3.0


def amplification_from_z(z: float) -> AmplificationProfile:
    z = float(z)
    if not z > 0:
        raise DomainError(f"standardized distance must be positive, got {z}")
    r = mills_ratio(z)
    return AmplificationProfile(z=z, mills=r, a_sigma=z * r)


def amplification_normal(cpk: float) -> AmplificationProfile:
    """Closed-form ``A = 3 Cpk r(3 Cpk)`` for a centered normal process."""
    if not cpk > 0:
        raise DomainError(f"amplification needs Cpk > 0, got {cpk}")
    return amplification_from_z(3.0 * float(cpk))


@dataclass(frozen=True)
class TailAmplification:
    lower: float
    upper: float
    combined: float


def _log_tail(model, spec, tail):
    risk = defect_risk(model, spec)
    if tail == "lower":
        return risk.log_lower
    if tail == "upper":
        return risk.log_upper
    return risk.log_p


def _log_derivative(model, spec, tail, h, mode):
    def fd(step):
        up = _log_tail(model.with_dispersion(math.exp(step), mode), spec, tail)
        dn = _log_tail(model.with_dispersion(math.exp(-step), mode), spec, tail)
        return (up - dn) / (2.0 * step)

    # one Richardson pass cancels the O(h^2) term
    return (4.0 * fd(0.5 * h) - fd(h)) / 3.0


def amplification_numeric(
    model: DistributionModel,
    spec: SpecificationLimits,
    h: float = FD_STEP,
    mode: str = "dispersion",
    tail: str = "both",
) -> float:
    """``|d log p / d log theta|`` by central differences in ``log theta``.

    ``theta`` is the spread perturbed by
    :meth:`DistributionModel.with_dispersion` in the given ``mode``.
    ``tail`` selects the total defect probability (``"both"``) or one tail.
    """
    if tail not in ("both", "lower", "upper"):
        raise DomainError(f"unknown tail {tail!r}")
    if _log_tail(model, spec, tail) == -math.inf:
        raise DomainError("degenerate tail: defect probability is zero")
    return abs(_log_derivative(model, spec, tail, h, mode))


def amplification_by_tail(model, spec, h: float = FD_STEP, mode: str = "dispersion") -> TailAmplification:
    """Per-tail and combined amplification for off-center processes.

    A tail with zero probability (infinite limit) reports ``nan``.
    """
    vals = {}
    for tail in ("lower", "upper", "both"):
        try:
            vals[tail] = amplification_numeric(model, spec, h=h, mode=mode, tail=tail)
        except DomainError:
            vals[tail] = math.nan
    return TailAmplification(vals["lower"], vals["upper"], vals["both"])


def dispersion_sensitivity(model: DistributionModel, spec: SpecificationLimits, h: float = FD_STEP) -> float:
    """Derivative of the upper-tail probability with respect to the spread.

    Normal: ``phi(z) (USL - mu) / sigma**2`` with ``z = (USL - mu) / sigma``.
    Other families: central difference with respect to
    :attr:`DistributionModel.dispersion`.
    """
    usl = spec.usl
    if not math.isfinite(usl):
        raise DomainError("dispersion sensitivity needs a finite USL")
    if model.family == "Normal":
        mu, sigma = model.params
        z = (usl - mu) / sigma
        return float(_INV_SQRT_2PI * math.exp(-0.5 * z * z) * (usl - mu) / (sigma * sigma))
    theta = model.dispersion
    up = float(model.with_dispersion(math.exp(h)).sf(usl))
    dn = float(model.with_dispersion(math.exp(-h)).sf(usl))
    return (up - dn) / (2.0 * h) / theta


@dataclass(frozen=True)
class DeltaMethodResult:
    grad_mean: float
    grad_sd: float
    cov_mean: float
    cov_sd: float
    ppm: float

    @property
    def var_ppm(self) -> float:
        return self.grad_mean**2 * self.cov_mean + self.grad_sd**2 * self.cov_sd

    @property
    def sd_ppm(self) -> float:
        return math.sqrt(self.var_ppm)


def delta_method_var_ppm(summary: SampleSummary, spec: SpecificationLimits) -> DeltaMethodResult:
    """First-order variance of the normal-model PPM estimate.

    ``X-bar`` and ``S`` are taken as independent with variances ``S^2/n``
    and ``S^2 / (2 (n - 1))``.
    """
    n, mu, s = summary.n, summary.mean, summary.sd
    if n < 2:
        raise DomainError("delta method needs n >= 2")
    if not s > 0:
        raise DegenerateSampleError("degenerate dispersion: S = 0")
    grad_mean = grad_sd = 0.0
    ppm = 0.0
    if math.isfinite(spec.lsl):
        zl = (spec.lsl - mu) / s
        phl = _INV_SQRT_2PI * math.exp(-0.5 * zl * zl)
        grad_mean -= phl / s
        grad_sd -= phl * zl / s
        ppm += float(special.ndtr(zl))
    if math.isfinite(spec.usl):
        zu = (spec.usl - mu) / s
        phu = _INV_SQRT_2PI * math.exp(-0.5 * zu * zu)
        grad_mean += phu / s
        grad_sd += phu * zu / s
        ppm += float(special.ndtr(-zu))
    return DeltaMethodResult(
        grad_mean=1e6 * grad_mean,
        grad_sd=1e6 * grad_sd,
        cov_mean=s * s / n,
        cov_sd=s * s / (2.0 * (n - 1)),
        ppm=1e6 * ppm,
    )
