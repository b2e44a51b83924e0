"""Evidence declarations and the leakage computations built on them."""

import math

import numpy as np
import pytest

from probleak import (
    Empirical,
    Evidence,
    ModelError,
    ModelSpec,
    Normal,
    Poisson,
    StudentT,
    fit_model,
    leakage,
    leakage_profile,
    load_dataset_text,
    mc_leakage,
    parse_support,
)


# ---------------------------------------------------------------------------
# Evidence
# ---------------------------------------------------------------------------


def test_interval_evidence_contains():
    e = Evidence.interval(0.0, math.inf)
    assert e.kind == "continuous_support"
    got = e.contains(np.array([-1.0, 0.0, 5.0]))
    np.testing.assert_array_equal(got, [False, True, True])
    assert bool(e.contains(-0.001)) is False


def test_interval_union_must_be_disjoint_and_ordered():
    e = Evidence.interval_union([(0.0, 1.0), (2.0, 3.0)])
    assert e.contains(0.5) and e.contains(2.5)
    assert not e.contains(1.5)
    with pytest.raises(ValueError):
        Evidence.interval_union([(0.0, 2.0), (1.0, 3.0)])
    with pytest.raises(ValueError):
        Evidence.interval_union([(2.0, 3.0), (0.0, 1.0)])
    with pytest.raises(ValueError):
        Evidence.interval(3.0, 1.0)


def test_finite_set_evidence():
    e = Evidence.finite_set([3.0, 1.0, 2.0])
    assert e.kind == "discrete_support"
    np.testing.assert_array_equal(e.possible_values(), [1.0, 2.0, 3.0])
    assert e.contains(2.0)
    assert not e.contains(2.5)
    # duplicates collapse: the declaration is a set
    assert Evidence.finite_set([1.0, 1.0]).values == (1.0,)
    with pytest.raises(ValueError):
        Evidence.finite_set([1.0, math.nan])
    with pytest.raises(ValueError):
        Evidence.finite_set([])


def test_lattice_evidence():
    e = Evidence.lattice_support(0.0, 10.0, 1.0)
    np.testing.assert_array_equal(e.possible_values(), np.arange(11.0))
    assert e.contains(7.0)
    assert not e.contains(7.5)
    assert not e.contains(-1.0)
    assert not e.contains(11.0)
    with pytest.raises(ValueError):
        Evidence.lattice_support(0.0, 10.0, -1.0)
    with pytest.raises(ValueError):
        Evidence.lattice_support(10.0, 0.0, 1.0)


def test_lattice_membership_tolerates_float_noise():
    e = Evidence.lattice_support(0.0, math.inf, 0.1)
    # 0.3 is not exactly representable; 3 * 0.1 must still count as on-lattice
    assert e.contains(0.1 * 3)
    assert e.contains(0.7000000000000001)
    assert not e.contains(0.35)


def test_unbounded_lattice_cannot_be_enumerated():
    e = Evidence.lattice_support(0.0, math.inf, 1.0)
    with pytest.raises(ValueError, match="finite supports"):
        e.possible_values()


def test_evidence_json_round_trip():
    cases = [
        Evidence.interval(0.0, math.inf),
        Evidence.interval(-math.inf, 2.0, description="upper bounded"),
        Evidence.interval_union([(0.0, 1.0), (5.0, math.inf)]),
        Evidence.finite_set([1.0, 4.0]),
        Evidence.lattice_support(0.0, math.inf, 1.0),
        Evidence.lattice_support(0.0, 12.0, 0.5),
    ]
    for e in cases:
        back = Evidence.from_json(e.to_json())
        assert back == e


def test_parse_support_forms():
    e = parse_support("[0,inf)")
    assert e.intervals == ((0.0, math.inf),)
    e = parse_support("(-inf,inf)")
    assert e.intervals == ((-math.inf, math.inf),)
    e = parse_support("[1.5,2.5]")
    assert e.intervals == ((1.5, 2.5),)
    e = parse_support("lattice(0, 10, 1)")
    assert e.kind == "discrete_support"
    assert e.lattice == (0.0, 10.0, 1.0)
    for bad in ("", "nonsense", "[1 2]", "lattice(1,2)"):
        with pytest.raises(ValueError):
            parse_support(bad)


# ---------------------------------------------------------------------------
# leakage
# ---------------------------------------------------------------------------


def test_leakage_single_interval_decomposition():
    d = Normal(loc=1.0, scale=1.0)
    rep = leakage(d, Evidence.interval(0.0, 3.0))
    # oracle: Phi(-1) below, 1 - Phi(2) above
    below = 0.5 * (1.0 + math.erf(-1.0 / math.sqrt(2.0)))
    above = 1.0 - 0.5 * (1.0 + math.erf(2.0 / math.sqrt(2.0)))
    assert rep.below_mass == pytest.approx(below, abs=1e-12)
    assert rep.above_mass == pytest.approx(above, abs=1e-12)
    assert rep.outside_mass_other == 0.0
    assert rep.leakage == pytest.approx(below + above, abs=1e-12)
    assert not rep.complete


def test_leakage_full_support_is_zero():
    rep = leakage(StudentT(df=3.0), Evidence.interval(-math.inf, math.inf))
    assert rep.leakage == 0.0
    assert rep.below_mass == 0.0 and rep.above_mass == 0.0


def test_leakage_interval_union_uses_other_bucket():
    d = Normal(loc=0.0, scale=1.0)
    e = Evidence.interval_union([(-1.0, 0.0), (1.0, 2.0)])
    rep = leakage(d, e)
    inside = (d.cdf(0.0) - d.cdf(-1.0)) + (d.cdf(2.0) - d.cdf(1.0))
    assert rep.outside_mass_other == pytest.approx(1.0 - inside, abs=1e-12)
    assert rep.leakage == rep.outside_mass_other
    assert rep.below_mass == 0.0 and rep.above_mass == 0.0


def test_leakage_kind_mismatch_is_complete():
    for d in (Normal(0.0, 1.0), StudentT(2.0, 0.0, 1.0)):
        for e in (
            Evidence.lattice_support(0.0, math.inf, 1.0),
            Evidence.finite_set([0.0, 1.0, 2.0]),
        ):
            rep = leakage(d, e)
            assert rep.leakage == 1.0
            assert rep.complete is True
            assert rep.outside_mass_other == 1.0


def test_discrete_model_against_discrete_evidence():
    d = Poisson(rate=3.0)
    full = leakage(d, Evidence.lattice_support(0.0, math.inf, 1.0))
    assert full.leakage == pytest.approx(0.0, abs=1e-12)
    bounded = leakage(d, Evidence.lattice_support(0.0, 5.0, 1.0))
    # oracle: P(X > 5) for Poisson(3)
    tail = 1.0 - sum(math.exp(-3.0) * 3.0**k / math.factorial(k) for k in range(6))
    assert bounded.leakage == pytest.approx(tail, rel=1e-10)
    assert not bounded.complete


def test_discrete_model_against_continuous_evidence():
    d = Poisson(rate=3.0)
    rep = leakage(d, Evidence.interval(0.0, math.inf))
    assert rep.leakage == pytest.approx(0.0, abs=1e-12)
    rep = leakage(d, Evidence.interval(2.0, math.inf))
    # atoms at 0 and 1 fall outside
    outside = math.exp(-3.0) * (1.0 + 3.0)
    assert rep.leakage == pytest.approx(outside, rel=1e-10)


def test_empirical_model_leakage():
    d = Empirical([1.0, 2.0, 3.0, 4.0])
    rep = leakage(d, Evidence.finite_set([1.0, 2.0]))
    assert rep.leakage == pytest.approx(0.5, abs=1e-12)


def test_leakage_carries_x_star():
    rep = leakage(Normal(0.0, 1.0), Evidence.interval(0.0, math.inf), x_star={"x": 1.0})
    assert rep.x_star == {"x": 1.0}
    doc = rep.to_json()
    assert doc["x_star"] == {"x": 1.0}
    assert 0.0 <= doc["leakage"] <= 1.0


def test_leakage_report_parts_sum():
    rep = leakage(StudentT(df=4.0, loc=0.4, scale=1.2), Evidence.interval(0.0, 2.0))
    assert rep.below_mass + rep.above_mass + rep.outside_mass_other == pytest.approx(
        rep.leakage, abs=1e-15
    )


# ---------------------------------------------------------------------------
# profile and Monte Carlo
# ---------------------------------------------------------------------------


def test_leakage_profile_orders_and_reports():
    data = load_dataset_text("x,y\n0,0\n1,1\n2,3\n3,4\n")
    result = fit_model(data, ModelSpec("y", ("x",)))
    e = Evidence.interval(0.0, math.inf)
    points = [{"x": v} for v in (0.0, 1.0, 2.0)]
    reports = leakage_profile(result, e, points)
    assert [r.x_star for r in reports] == points
    # leakage shrinks as the predictive mean climbs away from the bound
    assert reports[0].leakage > reports[1].leakage > reports[2].leakage


def test_leakage_profile_labels_failing_point():
    data = load_dataset_text("x,y\n0,0\n1,1\n2,3\n3,4\n")
    result = fit_model(data, ModelSpec("y", ("x",)))
    e = Evidence.interval(0.0, math.inf)
    with pytest.raises(ModelError, match="grid point 1:"):
        leakage_profile(result, e, [{"x": 0.0}, {"bogus": 1.0}])


def test_mc_leakage_agrees_with_analytic():
    d = StudentT(df=2.0, loc=2.0, scale=math.sqrt(4.0 / 3.0))
    e = Evidence.interval(0.0, math.inf)
    exact = leakage(d, e).leakage
    est = mc_leakage(d, e, n=200_000, seed=9)
    assert est.n == 200_000
    assert abs(est.estimate - exact) <= 4.0 * est.stderr
    assert est.stderr == pytest.approx(
        math.sqrt(est.estimate * (1 - est.estimate) / est.n), abs=1e-12
    )


def test_mc_leakage_is_seeded():
    d = Normal(0.0, 1.0)
    e = Evidence.interval(0.0, math.inf)
    a = mc_leakage(d, e, n=10_000, seed=1)
    b = mc_leakage(d, e, n=10_000, seed=1)
    assert a == b


def test_mc_leakage_rejects_small_n():
    with pytest.raises(ValueError, match="1e4"):
        mc_leakage(Normal(0.0, 1.0), Evidence.interval(0.0, math.inf), n=100, seed=0)
