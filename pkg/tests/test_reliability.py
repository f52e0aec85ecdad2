import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpkrisk import DomainError, SeedSpec
from cpkrisk.capability import SpecificationLimits, cpk_plugin
from cpkrisk.reliability import (
    DecisionPolicy,
    acceptance_mc,
    apply_rule,
    bootstrap_cpk,
    bootstrap_reliability,
    lcb_analytic,
    lcb_analytic_array,
    misclassification_mc,
    nearest_rank_quantile,
    simulate_centered_statistics,
)
from cpkrisk.statcore import summarize
from cpkrisk.workbench.report import dimension_seed
from oracles import p_accept_exact

# P(accept | cpk_true = 1.20, n = 32, c0 = 1.33) from R = 1e5 draws, SeedSpec(42);
# the quadrature value is 0.1673539 and the MC standard error 0.00118
TYPE1_FROZEN = 0.1669


def _boot(dims, dim, policy=DecisionPolicy(), B=2000, root=42):
    batch, spec = dims[dim]
    return bootstrap_reliability(batch, spec, policy, B=B, seed=dimension_seed(root, dim))


# ---------------------------------------------------------------------------
# quantile and policy


def test_nearest_rank_quantile():
    v = np.arange(1, 101, dtype=float)
    assert nearest_rank_quantile(v, 0.05) == 5.0
    assert nearest_rank_quantile(v, 0.051) == 6.0
    assert nearest_rank_quantile(v, 0.0) == 1.0
    assert nearest_rank_quantile(v, 1.0) == 100.0
    assert nearest_rank_quantile(v[::-1], 0.5) == 50.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.floats(0.001, 1.0))
def test_nearest_rank_is_an_order_statistic(xs, q):
    v = nearest_rank_quantile(xs, q)
    assert v in xs
    frac = np.mean(np.asarray(xs) <= v)
    assert frac >= q - 1e-9


def test_policy_validation():
    with pytest.raises(DomainError):
        DecisionPolicy(gamma=1.0)
    with pytest.raises(DomainError):
        DecisionPolicy(gamma=0.0)
    with pytest.raises(DomainError):
        DecisionPolicy(c0=0.0)
    with pytest.raises(DomainError):
        DecisionPolicy(rule="vote")
    assert DecisionPolicy(gamma=0.9).alpha == pytest.approx(0.1)


def test_point_rule_is_inclusive():
    p = DecisionPolicy(c0=1.33)
    assert apply_rule(1.33, p) == "accept"
    assert apply_rule(np.nextafter(1.33, 0), p) == "reject"


def test_apply_rule_evidence_types(fixture_dims):
    batch, spec = fixture_dims["D090"]
    s = summarize(batch)
    p = DecisionPolicy()
    assert apply_rule(s, p, spec) == apply_rule(cpk_plugin(s, spec), p) == "accept"
    rel = _boot(fixture_dims, "D090")
    assert apply_rule(rel, p) == "accept"
    assert apply_rule(rel, DecisionPolicy(rule="lcb_bootstrap")) == "reject"
    assert apply_rule(s, DecisionPolicy(rule="lcb_analytic"), spec) == "reject"
    with pytest.raises(DomainError):
        apply_rule(s, DecisionPolicy(rule="lcb_bootstrap"))
    with pytest.raises(DomainError):
        apply_rule(1.5, DecisionPolicy(rule="lcb_analytic"))
    with pytest.raises(DomainError):
        apply_rule(s, p)


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_fixture_reference_values(fixture_dims):
    d090 = _boot(fixture_dims, "D090")
    assert d090.p_hat == pytest.approx(0.5735)
    assert d090.lcb == pytest.approx(1.124, abs=5e-4)
    assert d090.decision == "accept"
    d308 = _boot(fixture_dims, "D308")
    assert d308.p_hat == 1.0 and d308.lcb == pytest.approx(2.856, abs=5e-4)
    d360 = _boot(fixture_dims, "D360")
    assert d360.p_hat == 0.0 and d360.decision == "reject"


def test_bootstrap_deterministic_and_seed_sensitive(fixture_dims):
    a = _boot(fixture_dims, "D056")
    b = _boot(fixture_dims, "D056")
    c = _boot(fixture_dims, "D056", root=43)
    assert a == b
    assert a.p_hat != c.p_hat or a.lcb != c.lcb


def test_bootstrap_rules(fixture_dims):
    lcb = _boot(fixture_dims, "D308", DecisionPolicy(rule="lcb_bootstrap"))
    assert lcb.decision == "accept" and lcb.rule_used == "lcb_bootstrap"
    an = _boot(fixture_dims, "D056", DecisionPolicy(rule="lcb_analytic"))
    assert an.decision == "reject"
    # the lcb rule never accepts what the point rule rejects
    for dim in fixture_dims:
        r = _boot(fixture_dims, dim, DecisionPolicy(rule="lcb_bootstrap"), B=300)
        if r.decision == "accept":
            assert r.cpk_point >= 1.33


def test_lcb_below_point_estimate(fixture_dims):
    for dim in fixture_dims:
        r = _boot(fixture_dims, dim, B=500)
        assert r.lcb <= r.cpk_point


def test_p_hat_saturates_far_from_threshold(fixture_dims):
    for dim in fixture_dims:
        r = _boot(fixture_dims, dim, B=500)
        if abs(r.cpk_point - 1.33) > 0.5:
            assert r.p_hat in (0.0, 1.0), dim


def test_constant_batch_is_degenerate():
    # zero spread inside the limits gives an infinite plug-in index in every resample
    spec = SpecificationLimits.symmetric(5.0, 0.1)
    x = np.full(20, 5.0)
    cpks, n_deg = bootstrap_cpk(x, spec, 20, 200, SeedSpec(1))
    assert n_deg == 200 and np.all(cpks == np.inf)
    r = bootstrap_reliability(x, spec, B=200, seed=SeedSpec(1))
    assert r.degenerate_batch and r.p_hat == 1.0


def test_bootstrap_needs_enough_resamples(fixture_dims):
    batch, spec = fixture_dims["D090"]
    with pytest.raises(DomainError):
        bootstrap_reliability(batch, spec, B=50)


def test_bootstrap_chunking_is_schedule_free(fixture_dims):
    batch, spec = fixture_dims["D090"]
    full, _ = bootstrap_cpk(batch.values, spec, batch.n, 2500, SeedSpec(9))
    head, _ = bootstrap_cpk(batch.values, spec, batch.n, 1000, SeedSpec(9))
    assert np.array_equal(full[:1000], head)


# ---------------------------------------------------------------------------
# analytic lower bound


def test_lcb_analytic_reference():
    assert float(lcb_analytic_array(1.334, 32, 0.05)) == pytest.approx(1.0392, abs=1e-3)
    assert float(lcb_analytic_array(1.334, 32, 0.5)) == pytest.approx(1.334, rel=1e-12)
    assert float(lcb_analytic_array(1.334, 10**7, 0.05)) == pytest.approx(1.334, rel=1e-3)
    vals = lcb_analytic_array(1.334, np.array([8, 16, 32, 64, 128]), 0.05)
    assert np.all(np.diff(vals) > 0)


def test_lcb_analytic_domain(fixture_dims):
    batch, spec = fixture_dims["D090"]
    s = summarize(batch)
    with pytest.raises(DomainError):
        lcb_analytic(s, spec, 1.0)
    off = SpecificationLimits.symmetric(s.mean + 10 * s.sd, 0.01)
    with pytest.raises(DomainError):
        lcb_analytic(s, off, 0.05)


# ---------------------------------------------------------------------------
# misclassification


def test_type1_frozen_and_against_quadrature():
    m = misclassification_mc(1.20, 32, R=100_000, seed=SeedSpec(42))
    assert m.type1 == pytest.approx(TYPE1_FROZEN, abs=1e-12)
    assert m.type2 is None and m.error_rate == m.type1
    assert abs(m.type1 - p_accept_exact(1.20, 1.33, 32)) < 4 * m.mc_std_err


def test_at_threshold_acceptance_below_one_half():
    # at cpk_true = c0 the plug-in estimator is biased low for n = 32
    m = misclassification_mc(1.33, 32, R=100_000, seed=SeedSpec(42))
    exact = p_accept_exact(1.33, 1.33, 32)
    assert exact == pytest.approx(0.4247, abs=5e-4)
    assert abs(m.p_accept - exact) < 4 * m.mc_std_err
    assert m.type2 == pytest.approx(1 - m.p_accept)


def test_type2_vanishes_for_capable_process():
    m = misclassification_mc(3.0, 32, R=10_000, seed=SeedSpec(42))
    assert m.type2 == 0.0


@pytest.mark.parametrize("cpk,n", [(1.0, 10), (1.5, 50), (1.33, 200)])
def test_samplers_agree(cpk, n):
    pr, ser = acceptance_mc(cpk, 1.33, n, 40_000, SeedSpec(3), sampler="raw")
    ps, ses = acceptance_mc(cpk, 1.33, n, 40_000, SeedSpec(4), sampler="sufficient")
    exact = p_accept_exact(cpk, 1.33, n)
    assert abs(pr - exact) < 4 * ser + 1e-12
    assert abs(ps - exact) < 4 * ses + 1e-12


def test_sufficient_sampler_moments():
    m, s = simulate_centered_statistics(20, 200_000, SeedSpec(5), sampler="sufficient")
    assert m.mean() == pytest.approx(0, abs=4 / math.sqrt(20 * 200_000))
    assert m.var() == pytest.approx(1 / 20, rel=0.02)
    assert (s**2).mean() == pytest.approx(1.0, rel=0.01)


def test_acceptance_monotone_in_cpk():
    ps = [acceptance_mc(c, 1.33, 32, 20_000, SeedSpec(6))[0] for c in (1.0, 1.2, 1.33, 1.5, 1.8)]
    assert all(a < b for a, b in zip(ps, ps[1:]))


def test_mean_offset_reduces_acceptance():
    p0 = acceptance_mc(1.5, 1.33, 32, 50_000, SeedSpec(7))[0]
    p1 = acceptance_mc(1.5, 1.33, 32, 50_000, SeedSpec(7), mean_offset=0.5)[0]
    assert p1 < p0
    assert p1 == pytest.approx(p_accept_exact(1.5, 1.33, 32, mean_offset=0.5), abs=0.01)


def test_lcb_rules_are_more_conservative():
    point = misclassification_mc(1.5, 20, R=2000, seed=SeedSpec(8))
    analytic = misclassification_mc(1.5, 20, DecisionPolicy(rule="lcb_analytic"), R=2000, seed=SeedSpec(8))
    boot = misclassification_mc(1.5, 20, DecisionPolicy(rule="lcb_bootstrap"), R=200, seed=SeedSpec(8), B=200)
    assert analytic.p_accept < point.p_accept
    assert boot.p_accept < point.p_accept


def test_misclassification_errors():
    with pytest.raises(DomainError):
        misclassification_mc(0.0, 32)
    with pytest.raises(DomainError):
        misclassification_mc(1.0, 1)
    with pytest.raises(DomainError):
        misclassification_mc(1.0, 32, R=10)
    with pytest.raises(DomainError):
        simulate_centered_statistics(10, 100, SeedSpec(), sampler="magic")
