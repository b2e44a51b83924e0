"""Seeded generators with known truths, and the impossibility experiment."""

import math

import numpy as np
import pytest

from probleak import (
    DEFAULT_CONTROL_CONFIG,
    DEFAULT_TRUNCATED_CONFIG,
    CallCenterConfig,
    DataError,
    Normal,
    SimConfig,
    TruncatedNormal,
    gen_callcenter_like,
    gen_truncated_regression,
    impossibility_experiment,
)


# ---------------------------------------------------------------------------
# TruncatedNormal
# ---------------------------------------------------------------------------


def test_truncated_normal_reduces_to_normal_without_bound():
    t = TruncatedNormal(loc=1.0, scale=2.0)
    n = Normal(loc=1.0, scale=2.0)
    ys = np.linspace(-6, 8, 15)
    np.testing.assert_allclose(t.cdf(ys), n.cdf(ys), atol=1e-14)
    np.testing.assert_allclose(t.density(ys), n.density(ys), atol=1e-14)


def test_truncated_normal_cdf_and_density():
    t = TruncatedNormal(loc=0.0, scale=1.0, lower=0.0)
    assert t.cdf(-0.5) == 0.0
    assert t.density(-0.5) == 0.0
    # oracle: renormalized upper half of the standard normal
    assert t.cdf(0.0) == pytest.approx(0.0, abs=1e-15)
    z = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))  # Phi(1)
    assert t.cdf(1.0) == pytest.approx((z - 0.5) / 0.5, abs=1e-12)
    assert t.density(0.5) == pytest.approx(
        2.0 * math.exp(-0.125) / math.sqrt(2 * math.pi), abs=1e-12
    )


def test_truncated_normal_samples_respect_bound():
    t = TruncatedNormal(loc=-1.0, scale=1.0, lower=0.0)
    draws = t.sample(50_000, 13)
    assert draws.min() >= 0.0
    # oracle: mean of N(-1,1) truncated at 0 is -1 + phi(1)/(1 - Phi(1))
    phi1 = math.exp(-0.5) / math.sqrt(2 * math.pi)
    tail = 1.0 - 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
    want = -1.0 + phi1 / tail
    assert draws.mean() == pytest.approx(want, abs=0.01)


def test_truncated_normal_sampling_is_seeded():
    t = TruncatedNormal(loc=0.5, scale=1.0, lower=0.0)
    np.testing.assert_array_equal(t.sample(100, 3), t.sample(100, 3))


def test_truncated_normal_infeasible_raises():
    # the kept region is ~24 sigma out: mass below the feasibility floor
    with pytest.raises(DataError, match="mass"):
        TruncatedNormal(loc=0.0, scale=1.0, lower=24.0)


def test_truncated_normal_has_mass_respects_bound():
    t = TruncatedNormal(loc=0.0, scale=1.0, lower=0.0)
    assert t.has_mass(1.0, 2.0)
    assert not t.has_mass(-3.0, -1.0)
    assert t.has_mass(-3.0, 1.0)


def test_truncated_normal_quantile_roundtrip():
    t = TruncatedNormal(loc=0.2, scale=1.3, lower=0.0)
    for p in (0.01, 0.5, 0.99):
        assert t.cdf(t.quantile(p)) == pytest.approx(p, abs=1e-10)


# ---------------------------------------------------------------------------
# truncated regression generator
# ---------------------------------------------------------------------------


def test_sim_config_validation():
    with pytest.raises(ValueError, match="n >= 4"):
        SimConfig(n=3, coefficients=(0.0, 1.0), noise_sd=1.0, covariate_ranges=((0, 1),))
    with pytest.raises(ValueError, match="noise_sd"):
        SimConfig(n=10, coefficients=(0.0, 1.0), noise_sd=0.0, covariate_ranges=((0, 1),))
    with pytest.raises(ValueError, match="coefficients"):
        SimConfig(n=10, coefficients=(0.0,), noise_sd=1.0, covariate_ranges=((0, 1),))
    with pytest.raises(ValueError, match="range"):
        SimConfig(n=10, coefficients=(0.0, 1.0), noise_sd=1.0, covariate_ranges=((1, 0),))


def test_gen_truncated_regression_columns_and_determinism():
    cfg = SimConfig(
        n=50,
        coefficients=(0.5, 1.0, -0.5),
        noise_sd=0.7,
        covariate_ranges=((0.0, 1.0), (2.0, 3.0)),
        support_lower=0.0,
        seed=5,
    )
    a = gen_truncated_regression(cfg)
    b = gen_truncated_regression(cfg)
    assert a.names == ("y", "x1", "x2")
    assert a.n == 50
    np.testing.assert_array_equal(a.column("y"), b.column("y"))
    assert a.column("y").min() >= 0.0
    assert a.column("x1").min() >= 0.0 and a.column("x1").max() <= 1.0
    assert a.column("x2").min() >= 2.0 and a.column("x2").max() <= 3.0


def test_gen_truncated_regression_unbounded_can_go_negative():
    cfg = SimConfig(
        n=200,
        coefficients=(0.0, 0.1),
        noise_sd=1.0,
        covariate_ranges=((0.0, 1.0),),
        seed=6,
    )
    data = gen_truncated_regression(cfg)
    assert data.column("y").min() < 0.0


def test_gen_truncated_regression_infeasible_row():
    cfg = SimConfig(
        n=10,
        coefficients=(-40.0, 0.0),
        noise_sd=1.0,
        covariate_ranges=((0.0, 1.0),),
        support_lower=0.0,
        seed=0,
    )
    with pytest.raises(DataError, match="infeasible config"):
        gen_truncated_regression(cfg)


def test_default_configs_differ_only_in_truncation():
    assert DEFAULT_TRUNCATED_CONFIG.support_lower == 0.0
    assert DEFAULT_CONTROL_CONFIG.support_lower == -math.inf
    assert DEFAULT_TRUNCATED_CONFIG.n == DEFAULT_CONTROL_CONFIG.n
    assert DEFAULT_TRUNCATED_CONFIG.coefficients == DEFAULT_CONTROL_CONFIG.coefficients
    assert DEFAULT_TRUNCATED_CONFIG.seed == DEFAULT_CONTROL_CONFIG.seed


# ---------------------------------------------------------------------------
# call-center-like generator
# ---------------------------------------------------------------------------


def test_callcenter_config_validation():
    with pytest.raises(ValueError, match="two rows"):
        CallCenterConfig(per_location_n=1)
    with pytest.raises(ValueError, match="calls range"):
        CallCenterConfig(calls_range=(100, 50))
    with pytest.raises(ValueError, match="absentee range"):
        CallCenterConfig(absentee_range=(5, 1))


def test_callcenter_dataset_shape():
    data = gen_callcenter_like()
    assert data.names == ("abandonment", "calls", "absentees", "location")
    assert data.n == 104
    loc = data.column("location")
    assert sorted(set(loc)) == ["A", "B"]
    assert int(np.sum(loc == "A")) == 52
    assert int(np.sum(loc == "B")) == 52
    assert data.column("abandonment").min() >= 0.0


def test_callcenter_extremes_hit_configured_ranges():
    cfg = CallCenterConfig()
    data = gen_callcenter_like(cfg)
    calls = data.column("calls")
    absentees = data.column("absentees")
    assert calls.min() == cfg.calls_range[0]
    assert calls.max() == cfg.calls_range[1]
    assert absentees.min() == cfg.absentee_range[0]
    assert absentees.max() == cfg.absentee_range[1]
    # the pinned extreme rows sit in location B, so A never samples the
    # low corner and a fit must extrapolate there
    loc = data.column("location")
    at_min = (calls == calls.min()) & (absentees == absentees.min())
    assert set(loc[at_min]) == {"B"}


def test_callcenter_is_deterministic_per_seed():
    a = gen_callcenter_like(CallCenterConfig(seed=2))
    b = gen_callcenter_like(CallCenterConfig(seed=2))
    c = gen_callcenter_like(CallCenterConfig(seed=3))
    np.testing.assert_array_equal(a.column("abandonment"), b.column("abandonment"))
    assert not np.array_equal(a.column("abandonment"), c.column("abandonment"))


def test_callcenter_integer_covariates():
    data = gen_callcenter_like()
    calls = data.column("calls")
    absentees = data.column("absentees")
    np.testing.assert_array_equal(calls, np.rint(calls))
    np.testing.assert_array_equal(absentees, np.rint(absentees))


# ---------------------------------------------------------------------------
# impossibility experiment
# ---------------------------------------------------------------------------


def test_impossibility_experiment_small_smoke():
    cfg = SimConfig(
        n=400,
        coefficients=(0.2, 0.3),
        noise_sd=1.0,
        covariate_ranges=((0.0, 1.0),),
        support_lower=0.0,
        seed=71,
    )
    rep = impossibility_experiment(cfg, holdout_n=800, compute_crps=False)
    assert rep.truncated is True
    assert rep.ell_min > 0.0
    assert len(rep.pits) == 800
    assert rep.ks_critical == pytest.approx(1.36 / math.sqrt(800), abs=1e-12)
    assert 0.0 < rep.p_star < rep.ell_min
    # no PIT can land below the minimum leakage, so the frequency there is 0
    assert rep.frequency_at_p_star == 0.0
    assert rep.deviation_at_p_star == pytest.approx(rep.p_star, abs=1e-15)
    assert rep.mean_crps_model is None and rep.mean_crps_oracle is None
    doc = rep.to_json()
    assert doc["truncated"] is True
    assert doc["ell_min"] == rep.ell_min


def test_impossibility_experiment_control_smoke():
    cfg = SimConfig(
        n=400,
        coefficients=(0.2, 0.3),
        noise_sd=1.0,
        covariate_ranges=((0.0, 1.0),),
        seed=71,
    )
    rep = impossibility_experiment(cfg, holdout_n=800, compute_crps=False)
    assert rep.truncated is False
    assert rep.ell_min == 0.0
    assert rep.ks_stat < rep.ks_critical  # well-specified model passes
