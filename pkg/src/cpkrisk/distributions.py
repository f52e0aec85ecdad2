"""Two-parameter families used for distribution-aware capability.

Normal, Logistic, Lognormal and Weibull (two-parameter, zero threshold)
models with tail-accurate evaluation, maximum-likelihood fitting, AICc
selection and the Anderson-Darling normality test.

Far-tail normal probabilities go through the scaled complementary error
function ``erfcx``: ``log Q(z) = -z**2/2 + log(erfcx(z/sqrt(2))/2)``, which
stays finite long after ``Q(z)`` itself underflows.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from ._errors import DegenerateSampleError, DomainError, FamilyInapplicableError, FitError
from .statcore import MIN_FIT_SIZE, MeasurementBatch, check_measurements

logger = logging.getLogger(__name__)

__all__ = [
    "FAMILIES",
    "DistributionModel",
    "NormalityDiagnostic",
    "TailUnderflowWarning",
    "evaluate",
    "fit_mle",
    "fit_candidates",
    "select_model",
    "normality_test",
    "normal_logsf",
    "normal_logcdf",
    "normal_sf",
    "normal_cdf",
]

# Tie-break order for AICc selection: simplest first.
FAMILIES = ("Normal", "Logistic", "Lognormal", "Weibull")
N_PARAMS = 2
AICC_TIE_TOL = 1e-9
NORMALITY_TEST = "Anderson-Darling (estimated mean and sd, D'Agostino-Stephens p-value)"

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class TailUnderflowWarning(RuntimeWarning):
    """A tail probability underflowed to zero; its logarithm is still finite."""


# ---------------------------------------------------------------------------
# standard normal tails


def normal_sf(z):
    """Upper tail ``1 - Phi(z)`` without cancellation."""
    return 0.5 * special.erfc(np.asarray(z, dtype=float) / _SQRT2)


def normal_cdf(z):
    return 0.5 * special.erfc(-np.asarray(z, dtype=float) / _SQRT2)


def normal_logsf(z):
    """``log(1 - Phi(z))``, finite for any finite ``z``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    zp = z[pos]
    out[pos] = -0.5 * zp * zp + np.log(0.5 * special.erfcx(zp / _SQRT2))
    zn = z[~pos]
    out[~pos] = np.log1p(-0.5 * special.erfc(-zn / _SQRT2))
    return out[()] if out.ndim == 0 else out


def normal_logcdf(z):
    return normal_logsf(-np.asarray(z, dtype=float))


def normal_logpdf(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * z * z - _LOG_SQRT_2PI


# ---------------------------------------------------------------------------
# family backends


class _Family:
    name = ""
    positive_support = False
    param_names: tuple[str, str] = ("", "")

    @classmethod
    def check_params(cls, a, b):
        if not (math.isfinite(a) and math.isfinite(b)) or b <= 0:
            raise DomainError(f"invalid {cls.name} parameters ({a}, {b})")


class _Normal(_Family):
    name = "Normal"
    param_names = ("mu", "sigma")

    @staticmethod
    def logpdf(x, mu, sigma):
        return normal_logpdf((x - mu) / sigma) - math.log(sigma)

    @staticmethod
    def logcdf(x, mu, sigma):
        return normal_logcdf((x - mu) / sigma)

    @staticmethod
    def logsf(x, mu, sigma):
        return normal_logsf((x - mu) / sigma)

    @staticmethod
    def cdf(x, mu, sigma):
        return normal_cdf((x - mu) / sigma)

    @staticmethod
    def sf(x, mu, sigma):
        return normal_sf((x - mu) / sigma)

    @staticmethod
    def ppf(p, mu, sigma):
        return mu + sigma * special.ndtri(p)

    @staticmethod
    def isf(p, mu, sigma):
        return mu - sigma * special.ndtri(p)

    @staticmethod
    def median(mu, sigma):
        return mu

    @staticmethod
    def fit(x):
        mu = math.fsum(x.tolist()) / x.size
        sigma = math.sqrt(math.fsum(((x - mu) ** 2).tolist()) / x.size)
        return mu, sigma


class _Logistic(_Family):
    name = "Logistic"
    param_names = ("location", "scale")

    @staticmethod
    def logpdf(x, m, s):
        u = (x - m) / s
        return -u - 2.0 * np.logaddexp(0.0, -u) - math.log(s)

    @staticmethod
    def logcdf(x, m, s):
        return -np.logaddexp(0.0, -(x - m) / s)

    @staticmethod
    def logsf(x, m, s):
        return -np.logaddexp(0.0, (x - m) / s)

    @staticmethod
    def cdf(x, m, s):
        return special.expit((x - m) / s)

    @staticmethod
    def sf(x, m, s):
        return special.expit(-(x - m) / s)

    @staticmethod
    def ppf(p, m, s):
        return m + s * special.logit(p)

    @staticmethod
    def isf(p, m, s):
        return m - s * special.logit(p)

    @staticmethod
    def median(m, s):
        return m

    @staticmethod
    def fit(x, max_iter=200, tol=1e-10):
        return _fit_logistic(x, max_iter=max_iter, tol=tol)


class _Lognormal(_Family):
    name = "Lognormal"
    positive_support = True
    param_names = ("mu_log", "sigma_log")

    @staticmethod
    def logpdf(x, mu, sigma):
        lx = np.log(x)
        return normal_logpdf((lx - mu) / sigma) - math.log(sigma) - lx

    @staticmethod
    def logcdf(x, mu, sigma):
        return normal_logcdf((np.log(x) - mu) / sigma)

    @staticmethod
    def logsf(x, mu, sigma):
        return normal_logsf((np.log(x) - mu) / sigma)

    @staticmethod
    def cdf(x, mu, sigma):
        return normal_cdf((np.log(x) - mu) / sigma)

    @staticmethod
    def sf(x, mu, sigma):
        return normal_sf((np.log(x) - mu) / sigma)

    @staticmethod
    def ppf(p, mu, sigma):
        return np.exp(mu + sigma * special.ndtri(p))

    @staticmethod
    def isf(p, mu, sigma):
        return np.exp(mu - sigma * special.ndtri(p))

    @staticmethod
    def median(mu, sigma):
        return math.exp(mu)

    @staticmethod
    def fit(x):
        return _Normal.fit(np.log(x))


class _Weibull(_Family):
    name = "Weibull"
    positive_support = True
    param_names = ("shape", "scale")

    @classmethod
    def check_params(cls, k, lam):
        if not (math.isfinite(k) and math.isfinite(lam)) or k <= 0 or lam <= 0:
            raise DomainError(f"invalid Weibull parameters ({k}, {lam})")

    @staticmethod
    def _t(x, k, lam):
        # cumulative hazard; overflow to inf is the correct limit
        with np.errstate(over="ignore"):
            return (x / lam) ** k

    @classmethod
    def logpdf(cls, x, k, lam):
        return math.log(k / lam) + (k - 1.0) * np.log(x / lam) - cls._t(x, k, lam)

    @classmethod
    def logcdf(cls, x, k, lam):
        return np.log(-np.expm1(-cls._t(x, k, lam)))

    @classmethod
    def logsf(cls, x, k, lam):
        return -cls._t(x, k, lam)

    @classmethod
    def cdf(cls, x, k, lam):
        return -np.expm1(-cls._t(x, k, lam))

    @classmethod
    def sf(cls, x, k, lam):
        return np.exp(-cls._t(x, k, lam))

    @staticmethod
    def ppf(p, k, lam):
        return lam * (-np.log1p(-p)) ** (1.0 / k)

    @staticmethod
    def isf(p, k, lam):
        return lam * (-np.log(p)) ** (1.0 / k)

    @staticmethod
    def median(k, lam):
        return lam * math.log(2.0) ** (1.0 / k)

    @staticmethod
    def fit(x, max_iter=200, tol=1e-12):
        return _fit_weibull(x, max_iter=max_iter, tol=tol)


_BACKENDS = {f.name: f for f in (_Normal, _Logistic, _Lognormal, _Weibull)}


def _backend(family: str) -> type[_Family]:
    try:
        return _BACKENDS[family]
    except KeyError:
        raise DomainError(f"unknown family {family!r}; expected one of {FAMILIES}") from None


# ---------------------------------------------------------------------------
# iterative MLE


def _fit_weibull(x, max_iter, tol):
    """Profile-likelihood Weibull MLE.

    Solves ``sum(y^k ln y)/sum(y^k) - 1/k - mean(ln y) = 0`` for the shape
    with Newton steps kept inside a sign-change bracket; ``y = x / max(x)``
    keeps ``y^k`` in range for large shapes.
    """
    c = float(x.max())
    ly = np.log(x / c)
    mean_ly = float(ly.mean())

    def score(k):
        w = np.exp(k * ly)
        sw = w.sum()
        a = float((w * ly).sum() / sw)
        b = float((w * ly * ly).sum() / sw)
        return a - 1.0 / k - mean_ly, (b - a * a) + 1.0 / (k * k)

    sd_log = float(np.std(ly))
    k = 1.2 / sd_log if sd_log > 0 else 1.0
    lo, hi = 0.0, math.inf
    g = math.nan
    for it in range(1, max_iter + 1):
        g, dg = score(k)
        if g < 0:
            lo = max(lo, k)
        else:
            hi = min(hi, k)
        if abs(g) * k < tol:
            break
        step = k - g / dg
        if not (lo < step < hi) or not math.isfinite(step):
            step = 2.0 * k if math.isinf(hi) else 0.5 * (lo + hi)
        if abs(step - k) <= tol * k:
            k = step
            break
        k = step
    else:
        raise FitError(
            f"Weibull shape iteration did not converge (score {g:.3e})",
            family="Weibull",
            iterations=max_iter,
            residual=abs(g),
        )
    lam = c * float(np.mean(np.exp(k * ly))) ** (1.0 / k)
    return k, lam


def _logistic_loglik(x, m, s):
    u = (x - m) / s
    return float(np.sum(-u - 2.0 * np.logaddexp(0.0, -u))) - x.size * math.log(s)


def _fit_logistic(x, max_iter, tol):
    """Damped Newton ascent on the logistic log-likelihood in (m, s)."""
    n = x.size
    m = float(np.median(x))
    s = float(np.std(x, ddof=1)) * math.sqrt(3.0) / math.pi
    ll = _logistic_loglik(x, m, s)
    grad_norm = math.inf
    for it in range(1, max_iter + 1):
        u = (x - m) / s
        t = np.tanh(0.5 * u)
        tp = 0.5 / np.cosh(0.5 * u) ** 2
        g = np.array([t.sum() / s, (u * t - 1.0).sum() / s])
        H = np.array(
            [
                [-tp.sum(), -(t + u * tp).sum()],
                [-(t + u * tp).sum(), (1.0 - 2.0 * u * t - u * u * tp).sum()],
            ]
        ) / (s * s)
        grad_norm = float(np.max(np.abs(g))) * s / n
        try:
            delta = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            delta = g * s * s / n
        if float(g @ delta) <= 0:
            delta = g * s * s / n
        rel_step = float(np.max(np.abs(delta))) / s
        if rel_step < tol:
            m, s = m + delta[0], s + delta[1]
            break
        if rel_step < 1e-4 and s + delta[1] > 0:
            # quadratic region: likelihood gains fall below working precision
            m, s = m + delta[0], s + delta[1]
            ll = _logistic_loglik(x, m, s)
            continue
        lam = 1.0
        while lam > 1e-12:
            m_new, s_new = m + lam * delta[0], s + lam * delta[1]
            if s_new > 0:
                ll_new = _logistic_loglik(x, m_new, s_new)
                if ll_new >= ll:
                    break
            lam *= 0.5
        else:
            raise FitError(
                f"logistic line search failed (relative step {rel_step:.3e})",
                family="Logistic",
                iterations=it,
                residual=grad_norm,
            )
        m, s, ll = m_new, s_new, ll_new
    else:
        raise FitError(
            f"logistic Newton iteration did not converge (scaled gradient {grad_norm:.3e})",
            family="Logistic",
            iterations=max_iter,
            residual=grad_norm,
        )
    return m, s


# ---------------------------------------------------------------------------
# model object


@dataclass(frozen=True)
class DistributionModel:
    """A fitted (or specified) two-parameter model.

    ``params`` follow the family's native order: Normal ``(mu, sigma)``,
    Logistic ``(location, scale)``, Lognormal ``(mu_log, sigma_log)``,
    Weibull ``(shape, scale)``.
    """

    family: str
    params: tuple[float, float]
    loglik: float = math.nan
    aicc: float = math.nan
    n_fit: int = 0

    def __post_init__(self):
        be = _backend(self.family)
        a, b = (float(p) for p in self.params)
        be.check_params(a, b)
        object.__setattr__(self, "params", (a, b))

    @classmethod
    def normal(cls, mu: float, sigma: float) -> "DistributionModel":
        return cls("Normal", (mu, sigma))

    @property
    def _be(self):
        return _BACKENDS[self.family]

    @property
    def positive_support(self) -> bool:
        return self._be.positive_support

    @property
    def param_dict(self) -> dict:
        return dict(zip(self._be.param_names, self.params))

    # Support handling lives here so that callers such as defect_risk can pass
    # limits outside a positive support and get the obvious tail value.
    def _split(self, x):
        x = np.asarray(x, dtype=float)
        inside = x > 0 if self.positive_support else np.ones(x.shape, dtype=bool)
        return x, inside

    def logpdf(self, x):
        x, inside = self._split(x)
        out = np.full(x.shape, -np.inf)
        out[inside] = self._be.logpdf(x[inside], *self.params)
        return out[()] if out.ndim == 0 else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def logcdf(self, x):
        x, inside = self._split(x)
        out = np.full(x.shape, -np.inf)
        out[inside] = self._be.logcdf(x[inside], *self.params)
        return out[()] if out.ndim == 0 else out

    def logsf(self, x):
        x, inside = self._split(x)
        out = np.zeros(x.shape)
        out[inside] = self._be.logsf(x[inside], *self.params)
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        x, inside = self._split(x)
        out = np.zeros(x.shape)
        out[inside] = self._be.cdf(x[inside], *self.params)
        return out[()] if out.ndim == 0 else out

    def sf(self, x):
        x, inside = self._split(x)
        out = np.ones(x.shape)
        out[inside] = self._be.sf(x[inside], *self.params)
        return out[()] if out.ndim == 0 else out

    def ppf(self, p):
        return self._be.ppf(np.asarray(p, dtype=float), *self.params)

    def isf(self, p):
        return self._be.isf(np.asarray(p, dtype=float), *self.params)

    def median(self) -> float:
        return float(self._be.median(*self.params))

    @property
    def dispersion(self) -> float:
        """The parameter scaled by :meth:`with_dispersion` in its default mode."""
        if self.family == "Weibull":
            return 1.0 / self.params[0]
        return self.params[1]

    def with_dispersion(self, factor: float, mode: str = "dispersion") -> "DistributionModel":
        """Return the model with its spread multiplied by ``factor``.

        ``mode="dispersion"`` keeps the location fixed: Normal sigma and
        Logistic scale are multiplied, Lognormal ``sigma_log`` is multiplied
        (median fixed), and the Weibull log-scale dispersion ``1/shape`` is
        multiplied with the median held fixed.  ``mode="scale"`` multiplies
        the Weibull scale parameter instead, which also moves its location;
        the other families are identical in both modes.
        """
        if not factor > 0:
            raise DomainError(f"dispersion factor must be positive, got {factor}")
        if mode not in ("dispersion", "scale"):
            raise DomainError(f"unknown dispersion mode {mode!r}")
        a, b = self.params
        if self.family == "Weibull":
            if mode == "scale":
                new = (a, b * factor)
            else:
                med = self.median()
                k = a / factor
                new = (k, med / math.log(2.0) ** (1.0 / k))
        else:
            new = (a, b * factor)
        return replace(self, params=new, loglik=math.nan, aicc=math.nan)

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v:.6g}" for k, v in self.param_dict.items())
        return f"{self.family}({inner})"


def evaluate(model: DistributionModel, which: str, x: float) -> float:
    """Evaluate one of ``pdf, cdf, sf, quantile, log_sf`` at a scalar.

    Raises :class:`DomainError` outside the support (or outside ``(0, 1)``
    for ``quantile``).  When ``sf`` underflows to zero while ``log_sf`` is
    finite a :class:`TailUnderflowWarning` is issued.
    """
    x = float(x)
    if which == "quantile":
        if not 0.0 < x < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {x}")
        return float(model.ppf(x))
    if math.isnan(x) or (model.positive_support and x <= 0.0):
        raise DomainError(f"{x} is outside the support of {model.family}")
    if which == "pdf":
        return float(model.pdf(x))
    if which == "cdf":
        return float(model.cdf(x))
    if which == "log_sf":
        return float(model.logsf(x))
    if which == "sf":
        val = float(model.sf(x))
        if val == 0.0 and math.isfinite(float(model.logsf(x))):
            warnings.warn(
                f"sf({x}) underflows; use log_sf", TailUnderflowWarning, stacklevel=2
            )
        return val
    raise DomainError(f"unknown evaluation {which!r}")


# ---------------------------------------------------------------------------
# fitting and selection


def _aicc(loglik: float, n: int, k: int = N_PARAMS) -> float:
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def _values(batch) -> np.ndarray:
    if isinstance(batch, MeasurementBatch):
        return batch.values
    return check_measurements(batch)


def fit_mle(batch, family: str) -> DistributionModel:
    """Maximum-likelihood fit of one family.

    Normal and Lognormal are closed form (sigma with divisor ``n``), Weibull
    uses a safeguarded Newton iteration on the profile equation for the
    shape, Logistic a damped Newton iteration on both parameters.
    """
    be = _backend(family)
    x = _values(batch)
    n = x.size
    if n < MIN_FIT_SIZE:
        raise DomainError(f"distribution fit needs n >= {MIN_FIT_SIZE}, got {n}")
    if be.positive_support and np.any(x <= 0):
        raise FamilyInapplicableError(f"{family} requires strictly positive data")
    if np.all(x == x[0]):
        raise DegenerateSampleError("degenerate sample: all values equal")
    a, b = be.fit(x)
    if not (math.isfinite(a) and math.isfinite(b)) or b <= 0 or (family == "Weibull" and a <= 0):
        raise DegenerateSampleError(f"degenerate sample: {family} fit gave ({a}, {b})")
    ll = float(np.sum(be.logpdf(x, a, b)))
    return DistributionModel(family, (a, b), loglik=ll, aicc=_aicc(ll, n), n_fit=n)


def fit_candidates(batch) -> dict[str, DistributionModel]:
    """Fit every applicable family; inapplicable ones are omitted."""
    out = {}
    for fam in FAMILIES:
        try:
            out[fam] = fit_mle(batch, fam)
        except FamilyInapplicableError as exc:
            logger.info("family %s excluded: %s", fam, exc)
    return out


@dataclass(frozen=True)
class NormalityDiagnostic:
    statistic: float
    p_value: float
    rejected_at_0_05: bool
    adjusted_statistic: float = math.nan
    method: str = NORMALITY_TEST


def _ad_pvalue(a2_adj: float) -> float:
    # D'Agostino & Stephens (1986), Table 4.9, case 3.
    a = a2_adj
    if a < 0.2:
        p = 1.0 - math.exp(-13.436 + 101.14 * a - 223.73 * a * a)
    elif a < 0.34:
        p = 1.0 - math.exp(-8.318 + 42.796 * a - 59.938 * a * a)
    elif a < 0.6:
        p = math.exp(0.9177 - 4.279 * a - 1.38 * a * a)
    elif a < 153.467:
        p = math.exp(1.2937 - 5.709 * a + 0.0186 * a * a)
    else:
        # the last branch turns upward beyond its minimum
        p = 0.0
    return min(1.0, max(0.0, p))


def normality_test(batch) -> NormalityDiagnostic:
    """Anderson-Darling test of normality with estimated mean and sd."""
    x = _values(batch)
    n = x.size
    if n < MIN_FIT_SIZE:
        raise DomainError(f"normality test needs n >= {MIN_FIT_SIZE}, got {n}")
    xs = np.sort(x)
    mu = math.fsum(xs.tolist()) / n
    sd = math.sqrt(math.fsum(((xs - mu) ** 2).tolist()) / (n - 1))
    if sd == 0.0:
        raise DegenerateSampleError("degenerate sample: all values equal")
    w = (xs - mu) / sd
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (normal_logcdf(w) + normal_logsf(w[::-1])))
    a2 = float(-n - s / n)
    a2_adj = a2 * (1.0 + 0.75 / n + 2.25 / (n * n))
    p = _ad_pvalue(a2_adj)
    return NormalityDiagnostic(a2, p, p < 0.05, adjusted_statistic=a2_adj)


def select_model(batch, alpha: float = 0.05) -> tuple[DistributionModel, NormalityDiagnostic]:
    """Normality test, then AICc selection if normality is rejected.

    Normal stays a candidate after rejection.  Ties within ``1e-9`` go to
    the earliest family in :data:`FAMILIES`.
    """
    diag = normality_test(batch)
    if diag.p_value >= alpha:
        return fit_mle(batch, "Normal"), diag
    cands = fit_candidates(batch)
    best = None
    for fam in FAMILIES:
        m = cands.get(fam)
        if m is None:
            continue
        if best is None or m.aicc < best.aicc - AICC_TIE_TOL:
            best = m
        elif abs(m.aicc - best.aicc) <= AICC_TIE_TOL:
            logger.info("AICc tie between %s and %s; keeping %s", best.family, fam, best.family)
    if best.family == "Normal":
        logger.info("normality rejected (p=%.4f) but Normal has the lowest AICc", diag.p_value)
    return best, diag
