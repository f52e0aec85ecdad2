"""Property suites: round trips, monotonicity, ordering, equivariance, determinism."""

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cpkrisk import (
    DistributionModel,
    SeedSpec,
    SpecificationLimits,
    cpk_plugin,
    mills_ratio,
    normal_defect_risk,
    perturbed_ppm,
    summarize,
)
from cpkrisk.reliability import DecisionPolicy, bootstrap_reliability, misclassification_mc
from cpkrisk.samplesize import n_min_search, pass_curve
from cpkrisk.workbench import load_fixture
from cpkrisk.workbench.emit import render_reports
from cpkrisk.workbench.report import analyze_dataset

positive = st.floats(0.05, 20.0)
location = st.floats(-100.0, 100.0)


@st.composite
def models(draw):
    fam = draw(st.sampled_from(("Normal", "Logistic", "Lognormal", "Weibull")))
    if fam in ("Normal", "Logistic"):
        return DistributionModel(fam, (draw(location), draw(positive)))
    if fam == "Lognormal":
        return DistributionModel(fam, (draw(st.floats(-3.0, 3.0)), draw(st.floats(0.05, 2.0))))
    return DistributionModel(fam, (draw(st.floats(0.5, 20.0)), draw(positive)))


@st.composite
def batches(draw, min_size=8, max_size=60):
    n = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    mu = draw(st.floats(-50.0, 50.0))
    sd = draw(st.floats(1e-3, 10.0))
    return mu + sd * np.random.default_rng(seed).standard_normal(n)


# ---------------------------------------------------------------------------
# quantile / cdf round trips


@given(models(), st.floats(1e-6, 1 - 1e-6))
def test_cdf_of_quantile(model, p):
    assert float(model.cdf(model.ppf(p))) == pytest.approx(p, rel=1e-9, abs=1e-15)


@given(models(), st.floats(1e-9, 1 - 1e-9))
def test_quantile_of_cdf(model, p):
    x = float(model.ppf(p))
    assume(math.isfinite(x) and x != 0)
    u = float(model.cdf(x))
    assume(1e-12 < u < 1 - 1e-9)
    assert float(model.ppf(u)) == pytest.approx(x, rel=1e-9)


@given(models(), st.floats(1e-12, 0.5))
def test_upper_quantile_round_trip(model, q):
    x = float(model.isf(q))
    assume(math.isfinite(x))
    assert float(model.sf(x)) == pytest.approx(q, rel=1e-8)


@given(models(), st.floats(-50, 50))
def test_log_sf_consistent(model, x):
    sf = float(model.sf(x))
    assume(sf > 1e-290)
    assert float(model.logsf(x)) == pytest.approx(math.log(sf), rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------------------
# PPM monotone in sigma and the triplet order


@given(location, st.floats(0.01, 5.0), st.floats(0.01, 0.99))
def test_defect_risk_increases_with_sigma(mean_frac, half_width, u):
    spec = SpecificationLimits.symmetric(0.0, half_width)
    mean = (2 * u - 1) * half_width * 0.999
    grid = half_width * np.geomspace(0.02, 5.0, 40)
    lg = [normal_defect_risk(mean, s, spec).log10_ppm for s in grid]
    assert all(b > a for a, b in zip(lg, lg[1:]))


@given(batches(), st.floats(0.5, 8.0), st.floats(-0.9, 0.9))
def test_triplet_order(x, k, shift):
    s = summarize(x)
    spec = SpecificationLimits.symmetric(s.mean + shift * k * s.sd, k * s.sd)
    trip = perturbed_ppm(s, spec)
    mid, hi, lo = trip.log10()
    assert lo < mid < hi


def test_triplet_order_on_fixture():
    for batch, spec in load_fixture():
        mid, hi, lo = perturbed_ppm(summarize(batch), spec).log10()
        assert lo < mid < hi, batch.dimension_id


# ---------------------------------------------------------------------------
# scale-equivariance


@given(batches(), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3), st.floats(0.5, 6.0), st.floats(-0.8, 0.8))
def test_cpk_affine_equivariance(x, a, b, k, shift):
    s = summarize(x)
    spec = SpecificationLimits.symmetric(s.mean + shift * k * s.sd, k * s.sd)
    base = cpk_plugin(s, spec).cpk
    y = a * x + b
    # rounding y costs eps * |y| / (a S) relative; keep that below the tolerance
    assume(np.finfo(float).eps * np.max(np.abs(y)) / (a * s.sd) < 1e-14)
    spec2 = SpecificationLimits.symmetric(a * spec.nominal + b, a * spec.tol_plus)
    assert cpk_plugin(summarize(y), spec2).cpk == pytest.approx(base, rel=1e-12, abs=1e-12)


@given(st.permutations(list(np.round(np.linspace(1.0, 2.0, 17) ** 1.7, 6))))
def test_summary_permutation_invariant(xs):
    ref = summarize(sorted(xs))
    s = summarize(xs)
    assert s.mean == pytest.approx(ref.mean, rel=1e-13)
    assert s.sd == pytest.approx(ref.sd, rel=1e-13)


# ---------------------------------------------------------------------------
# seed determinism end to end


@given(st.integers(0, 2**32 - 1))
def test_bootstrap_determinism(root):
    batch, spec = load_fixture()[2]
    a = bootstrap_reliability(batch, spec, B=200, seed=SeedSpec(root))
    b = bootstrap_reliability(batch, spec, B=200, seed=SeedSpec(root))
    assert a == b


@given(st.integers(0, 2**32 - 1), st.integers(2, 60))
def test_mc_determinism(root, n):
    a = misclassification_mc(1.2, n, R=500, seed=SeedSpec(root))
    b = misclassification_mc(1.2, n, R=500, seed=SeedSpec(root))
    assert a == b
    assert pass_curve(1.4, 1.33, [n], R=300, seed=SeedSpec(root)) == pass_curve(
        1.4, 1.33, [n], R=300, seed=SeedSpec(root)
    )


def test_n_min_determinism():
    a = n_min_search(1.8, 1.33, 0.9, R=1000, seed=SeedSpec(5))
    b = n_min_search(1.8, 1.33, 0.9, R=1000, seed=SeedSpec(5))
    assert a == b


def test_analysis_determinism():
    dims = load_fixture()[:4]
    a = render_reports(analyze_dataset(dims, B=200, seed=17), "json")
    b = render_reports(analyze_dataset(dims, B=200, seed=17), "json")
    c = render_reports(analyze_dataset(dims, B=200, seed=18), "json")
    assert a == b and a != c


# ---------------------------------------------------------------------------
# Mills ratio


@given(st.floats(1e-8, 1e3))
def test_mills_ratio_exceeds_argument(z):
    assert mills_ratio(z) > z


@given(st.floats(-38.0, 38.0))
def test_mills_ratio_positive_and_above_argument(z):
    r = mills_ratio(z)
    assert r > 0 and r > z
