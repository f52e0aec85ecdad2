"""scikit-learn style wrappers.

A measurement batch is one feature column ``X`` of shape ``(n, 1)`` (a 1-D
array is accepted too).  Estimators follow the usual conventions:
constructor arguments are stored untouched, learned state ends in ``_``
and ``fit`` returns ``self``.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .capability import SpecificationLimits, cpk_percentile, cpk_plugin, perturbed_ppm, perturbed_ppm_fitted
from .distributions import FAMILIES, DistributionModel, fit_mle, select_model
from .reliability import DecisionPolicy, apply_rule, bootstrap_reliability
from .statcore import MIN_FIT_SIZE, SeedSpec, check_measurements, summarize

__all__ = ["FamilyFit", "CapabilityStudy"]


def _seed(random_state) -> SeedSpec:
    if isinstance(random_state, SeedSpec):
        return random_state
    if random_state is None:
        return SeedSpec()
    if isinstance(random_state, (int, np.integer)):
        return SeedSpec(int(random_state))
    raise ValueError("random_state must be an int, a SeedSpec or None (generators are not reproducible here)")


class FamilyFit(TransformerMixin, BaseEstimator):
    """Maximum-likelihood fit of one family, or normality test plus AICc selection.

    Parameters
    ----------
    family : {"auto", "Normal", "Logistic", "Lognormal", "Weibull"}
        ``"auto"`` runs the Anderson-Darling test and falls back to AICc
        selection when normality is rejected at ``alpha``.
    alpha : float

    Attributes
    ----------
    model_ : DistributionModel
    normality_ : NormalityDiagnostic or None
    n_features_in_ : int
    """

    def __init__(self, family="auto", alpha=0.05):
        self.family = family
        self.alpha = alpha

    def fit(self, X, y=None):
        x = check_measurements(X, min_samples=MIN_FIT_SIZE)
        if self.family == "auto":
            self.model_, self.normality_ = select_model(x, alpha=self.alpha)
        elif self.family in FAMILIES:
            self.model_, self.normality_ = fit_mle(x, self.family), None
        else:
            raise ValueError(f"family must be 'auto' or one of {FAMILIES}, got {self.family!r}")
        self.n_features_in_ = 1
        return self

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        return np.asarray(self.model_.logpdf(check_measurements(X, min_samples=1)), dtype=float)

    def score(self, X, y=None):
        """Mean log-likelihood per observation."""
        return float(np.mean(self.score_samples(X)))

    def transform(self, X):
        """Probability integral transform ``F(x)`` as an ``(n, 1)`` column."""
        check_is_fitted(self, "model_")
        x = check_measurements(X, min_samples=1)
        return np.asarray(self.model_.cdf(x), dtype=float).reshape(-1, 1)

    def inverse_transform(self, U):
        check_is_fitted(self, "model_")
        u = check_measurements(U, min_samples=1)
        return np.asarray(self.model_.ppf(u), dtype=float).reshape(-1, 1)


class CapabilityStudy(BaseEstimator):
    """Capability study of one dimension against fixed specification limits.

    Parameters
    ----------
    lsl, usl : float
        Specification limits.
    c0 : float
        Approval threshold.
    gamma : float
        Confidence level of the bootstrap lower bound.
    rule : {"point_threshold", "lcb_bootstrap", "lcb_analytic"}
    n_resamples : int
        Bootstrap resamples; 0 skips the bootstrap.
    alpha : float
        Significance level of the normality test.
    random_state : int, SeedSpec or None

    Attributes
    ----------
    summary_ : SampleSummary
    cpk_normal_ : float
        Plug-in index.
    model_ : DistributionModel
        Selected model (``Normal(mean, S)`` when normality holds).
    cpk_ : float
        Percentile index under ``model_``.
    delta_cpk_ : float
    ppm_normal_, ppm_fitted_ : PPMTriplet
    reliability_ : ReliabilitySummary or None
    decision_ : str
    """

    def __init__(
        self,
        lsl=None,
        usl=None,
        c0=1.33,
        gamma=0.95,
        rule="point_threshold",
        n_resamples=2000,
        alpha=0.05,
        random_state=None,
    ):
        self.lsl = lsl
        self.usl = usl
        self.c0 = c0
        self.gamma = gamma
        self.rule = rule
        self.n_resamples = n_resamples
        self.alpha = alpha
        self.random_state = random_state

    def _spec(self) -> SpecificationLimits:
        lsl = -math.inf if self.lsl is None else float(self.lsl)
        usl = math.inf if self.usl is None else float(self.usl)
        return SpecificationLimits.from_limits(lsl, usl)

    def _policy(self) -> DecisionPolicy:
        return DecisionPolicy(c0=self.c0, gamma=self.gamma, rule=self.rule)

    def fit(self, X, y=None):
        x = check_measurements(X, min_samples=MIN_FIT_SIZE)
        spec, policy = self._spec(), self._policy()
        if self.rule == "lcb_bootstrap" and not self.n_resamples:
            raise ValueError("rule 'lcb_bootstrap' needs n_resamples > 0")
        s = summarize(x)
        self.summary_ = s
        self.spec_ = spec
        self.cpk_normal_ = cpk_plugin(s, spec).cpk
        self.ppm_normal_ = perturbed_ppm(s, spec)
        model, self.normality_ = select_model(x, alpha=self.alpha)
        if model.family == "Normal":
            self.model_ = DistributionModel.normal(s.mean, s.sd)
            self.cpk_ = self.cpk_normal_
            self.ppm_fitted_ = self.ppm_normal_
        else:
            self.model_ = model
            self.cpk_ = cpk_percentile(model, spec).cpk
            self.ppm_fitted_ = perturbed_ppm_fitted(model, spec, s.cv_s)
        self.delta_cpk_ = self.cpk_ - self.cpk_normal_
        if self.n_resamples:
            self.reliability_ = bootstrap_reliability(
                x, spec, policy, B=int(self.n_resamples), seed=_seed(self.random_state)
            )
            self.decision_ = self.reliability_.decision
        else:
            self.reliability_ = None
            self.decision_ = self._decide(x, spec, policy)
        self.n_features_in_ = 1
        return self

    @staticmethod
    def _decide(x, spec, policy) -> str:
        return apply_rule(summarize(x), policy, spec)

    def predict(self, X):
        """Accept/reject decision for a new batch under the fitted policy.

        The bootstrap rule reuses ``random_state``.
        """
        check_is_fitted(self, "summary_")
        x = check_measurements(X, min_samples=2)
        policy = self._policy()
        if policy.rule == "lcb_bootstrap":
            rel = bootstrap_reliability(x, self.spec_, policy, B=int(self.n_resamples), seed=_seed(self.random_state))
            return rel.decision
        return self._decide(x, self.spec_, policy)

    def score(self, X, y=None):
        """Plug-in Cpk of ``X`` against the study's limits."""
        check_is_fitted(self, "summary_")
        return cpk_plugin(summarize(check_measurements(X, min_samples=2)), self.spec_).cpk
