"""Process capability, defect-risk amplification and decision reliability.

Core entry points::

    >>> import cpkrisk as ck
    >>> spec = ck.SpecificationLimits.symmetric(1.65, 0.05)
    >>> ck.amplification_normal(1.33).a_sigma > 10
    True
"""

from ._errors import (
    CpkRiskError,
    DegenerateSampleError,
    DomainError,
    FamilyInapplicableError,
    FitError,
    InputError,
)
from .amplification import (
    amplification_by_tail,
    amplification_from_z,
    amplification_normal,
    amplification_numeric,
    delta_method_var_ppm,
    dispersion_sensitivity,
    mills_ratio,
)
from .capability import (
    SpecificationLimits,
    cpk_percentile,
    cpk_plugin,
    defect_risk,
    format_ppm,
    model_distortion,
    normal_defect_risk,
    perturbed_ppm,
    perturbed_ppm_fitted,
)
from .distributions import DistributionModel, evaluate, fit_candidates, fit_mle, normality_test, select_model
from .reliability import DecisionPolicy, apply_rule, bootstrap_reliability, lcb_analytic, misclassification_mc
from .samplesize import bootstrap_pass_curve, n_min_search, pass_curve
from .statcore import MeasurementBatch, SampleSummary, SeedSpec, cv_of_sd, summarize

__version__ = "0.1.0"

__all__ = [
    "CpkRiskError",
    "DegenerateSampleError",
    "DomainError",
    "FamilyInapplicableError",
    "FitError",
    "InputError",
    "amplification_by_tail",
    "amplification_from_z",
    "amplification_normal",
    "amplification_numeric",
    "delta_method_var_ppm",
    "dispersion_sensitivity",
    "mills_ratio",
    "SpecificationLimits",
    "cpk_percentile",
    "cpk_plugin",
    "defect_risk",
    "format_ppm",
    "model_distortion",
    "normal_defect_risk",
    "perturbed_ppm",
    "perturbed_ppm_fitted",
    "DistributionModel",
    "evaluate",
    "fit_candidates",
    "fit_mle",
    "normality_test",
    "select_model",
    "DecisionPolicy",
    "apply_rule",
    "bootstrap_reliability",
    "lcb_analytic",
    "misclassification_mc",
    "bootstrap_pass_curve",
    "n_min_search",
    "pass_curve",
    "MeasurementBatch",
    "SampleSummary",
    "SeedSpec",
    "cv_of_sd",
    "summarize",
]
