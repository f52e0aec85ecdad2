"""Per-dimension validation reports (the validation-table pipeline)."""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import asdict, dataclass, field, fields

from joblib import Parallel, delayed

from .._errors import CpkRiskError
from ..capability import (
    cpk_percentile,
    cpk_plugin,
    model_distortion,
    perturbed_ppm,
    perturbed_ppm_fitted,
)
from ..distributions import NORMALITY_TEST, DistributionModel, select_model
from ..reliability import LCB_CONVENTION, DecisionPolicy, bootstrap_reliability
from ..statcore import MOMENT_CONVENTION, RNG_ALGORITHM, SeedSpec, summarize
from .io import Dimension

logger = logging.getLogger(__name__)

__all__ = ["DimensionReport", "analyze_dataset", "analyze_dimension", "CONVENTIONS", "COLUMNS", "PPM_FIELDS"]

PPM_FIELDS = (
    "ppm0_fitted", "ppm_plus_fitted", "ppm_minus_fitted",
    "ppm0_normal", "ppm_plus_normal", "ppm_minus_normal",
)

# Computation convention per numeric column; written next to every table.
CONVENTIONS = {
    "mean": "arithmetic mean (compensated summation)",
    "sd": "sample standard deviation, n-1 divisor",
    "skew": MOMENT_CONVENTION,
    "kurt": MOMENT_CONVENTION,
    "p_value": NORMALITY_TEST,
    "dist": "normal unless rejected at 0.05, else minimum AICc (k=2) over Normal/Logistic/Lognormal/Weibull",
    "cpk_fitted": "percentile index: median and Phi(-3)/Phi(3) quantiles of the selected model; "
    "equals cpk_normal when Normal is selected",
    "cpk_normal": "plug-in min(USL - mean, mean - LSL) / (3 S)",
    "delta_cpk": "cpk_fitted - cpk_normal",
    "p_hat": "bootstrap fraction of resampled Cpk >= c0",
    "lcb": LCB_CONVENTION,
    "ppm_fitted": "1e6 (F(LSL) + 1 - F(USL)) under the selected model with its dispersion scaled by 1, 1+cv, 1-cv "
    "(Weibull 1/shape and Lognormal sigma_log with the median fixed)",
    "ppm_normal": "1e6 (F(LSL) + 1 - F(USL)) under Normal(mean, S), S scaled by 1, 1+cv, 1-cv",
    "cv": "1 / sqrt(2 (n - 1))",
    "display": "3 significant digits; scientific below 0.01 and from 1e5",
    "rng": RNG_ALGORITHM,
}

_NAN = math.nan


@dataclass(frozen=True)
class DimensionReport:
    """One row of the validation table plus provenance.

    PPM cells are stored as ``log10(PPM)`` so that extreme tails survive;
    :meth:`ppm` gives the linear value (which may underflow to 0).
    """

    dim: str
    nominal: float
    tol_plus: float
    tol_minus: float
    n: int
    mean: float = _NAN
    sd: float = _NAN
    skew: float = _NAN
    kurt: float = _NAN
    p_value: float = _NAN
    dist: str = ""
    cpk_fitted: float = _NAN
    cpk_normal: float = _NAN
    delta_cpk: float = _NAN
    p_hat: float = _NAN
    lcb: float = _NAN
    ppm0_fitted: float = _NAN
    ppm_plus_fitted: float = _NAN
    ppm_minus_fitted: float = _NAN
    ppm0_normal: float = _NAN
    ppm_plus_normal: float = _NAN
    ppm_minus_normal: float = _NAN
    # provenance
    decision: str = ""
    cv: float = _NAN
    model_params: tuple = ()
    c0: float = _NAN
    gamma: float = _NAN
    rule: str = ""
    B: int = 0
    seed: dict = field(default_factory=dict)
    error: str = ""

    def ppm(self, name: str) -> float:
        """Linear PPM for one of :data:`PPM_FIELDS`."""
        if name not in PPM_FIELDS:
            raise KeyError(name)
        lg = getattr(self, name)
        return 10.0**lg if math.isfinite(lg) else (0.0 if lg == -math.inf else _NAN)

    @property
    def normal_triplet(self) -> tuple[float, float, float]:
        return tuple(self.ppm(k) for k in PPM_FIELDS[3:])

    @property
    def fitted_triplet(self) -> tuple[float, float, float]:
        return tuple(self.ppm(k) for k in PPM_FIELDS[:3])

    @property
    def ok(self) -> bool:
        return not self.error

    def as_dict(self) -> dict:
        d = asdict(self)
        d["model_params"] = list(self.model_params)
        return d


COLUMNS = tuple(f.name for f in fields(DimensionReport))


def dimension_seed(root: int, dim_id: str) -> SeedSpec:
    """Per-dimension stream, independent of which other dimensions are present."""
    return SeedSpec(root, zlib.crc32(dim_id.encode("utf-8")))


def analyze_dimension(dim: Dimension, policy: DecisionPolicy, B: int, root_seed: int) -> DimensionReport:
    """Run the full pipeline on one dimension; failures land in ``error``."""
    batch, spec = dim
    seed = dimension_seed(root_seed, batch.dimension_id)
    row = dict(
        dim=batch.dimension_id, nominal=spec.nominal, tol_plus=spec.tol_plus, tol_minus=spec.tol_minus,
        n=batch.n, c0=policy.c0, gamma=policy.gamma, rule=policy.rule, B=B, seed=seed.as_dict(),
    )
    stage = "summary"
    try:
        s = summarize(batch)
        row.update(mean=s.mean, sd=s.sd, skew=s.skewness, kurt=s.excess_kurtosis, cv=s.cv_s)
        stage = "capability"
        normal = cpk_plugin(s, spec)
        trip_n = perturbed_ppm(s, spec)
        row.update(cpk_normal=normal.cpk)
        row.update(zip(PPM_FIELDS[3:], trip_n.log10()))
        stage = "bootstrap"
        rel = bootstrap_reliability(batch, spec, policy, B=B, seed=seed)
        row.update(p_hat=rel.p_hat, lcb=rel.lcb, decision=rel.decision)
        stage = "model selection"
        model, diag = select_model(batch)
        row.update(p_value=diag.p_value, dist=model.family)
        if model.family == "Normal":
            # the n-1 normal model, so the fitted columns reduce exactly
            model = DistributionModel.normal(s.mean, s.sd)
            cpk_fit = normal.cpk
            trip_f = trip_n
        else:
            cpk_fit = cpk_percentile(model, spec).cpk
            trip_f = perturbed_ppm_fitted(model, spec, s.cv_s)
        row.update(
            cpk_fitted=cpk_fit,
            delta_cpk=model_distortion(cpk_fit, normal.cpk).delta_cpk,
            model_params=model.params,
        )
        row.update(zip(PPM_FIELDS[:3], trip_f.log10()))
    except CpkRiskError as exc:
        logger.warning("dimension %s failed at %s: %s", batch.dimension_id, stage, exc)
        row["error"] = f"{stage}: {exc}"
    return DimensionReport(**row)


def analyze_dataset(
    dataset,
    policy: DecisionPolicy = DecisionPolicy(),
    B: int = 2000,
    seed: int = 0,
    n_jobs: int = 1,
) -> list[DimensionReport]:
    """Analyse every dimension, in dataset order.

    Each dimension draws from its own seeded stream, so results do not
    depend on ``n_jobs`` or on the other dimensions in the dataset.
    """
    dims = list(dataset)
    if n_jobs == 1 or len(dims) < 2:
        return [analyze_dimension(d, policy, B, seed) for d in dims]
    return Parallel(n_jobs=n_jobs)(delayed(analyze_dimension)(d, policy, B, seed) for d in dims)
