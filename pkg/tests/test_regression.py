"""OLS, TWFE DiD, placebo, pre-trend, and 2SLS against planted ground truth."""

import numpy as np
import pytest
from scipy import stats

from tariffkit.datagen import PanelSpec, attach_exposure_instrument, generate_did_panel
from tariffkit.econometrics import (
    ols,
    placebo_did,
    pretrend_test,
    tsls,
    twfe_did,
    two_way_demean,
)
from tariffkit.errors import RankError


# ------------------------------------------------------------------ ols

def test_exact_fit_recovers_coefficients():
    rng = np.random.default_rng(3)
    x = np.column_stack([np.ones(30), rng.standard_normal((30, 2))])
    beta = np.array([1.0, -2.0, 0.5])
    res = ols(x @ beta, x)
    assert np.allclose(res.params, beta, rtol=0.0, atol=1e-12)
    assert res.r_squared == pytest.approx(1.0, abs=1e-12)
    # a numerically perfect fit reports exactly zero standard errors
    assert np.all(res.se == 0.0)


def test_intercept_only_is_the_mean():
    y = np.array([1.0, 2.0, 4.0, 9.0])
    res = ols(y, np.ones((4, 1)))
    assert res.params[0] == pytest.approx(y.mean(), rel=1e-15)


def test_residuals_orthogonal_to_design():
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = np.column_stack([np.ones(60), rng.standard_normal((60, 3))])
        y = rng.standard_normal(60)
        res = ols(y, x)
        gram = x.T @ res.resid
        assert np.max(np.abs(gram)) <= 1e-8 * max(1.0, float(np.abs(y).sum()))


def test_rank_error_names_the_offending_column():
    # columns 1 and 2 are proportional; either is a valid culprit, but the
    # message must point at one of them, never the intercept
    x = np.column_stack([np.ones(10), np.arange(10.0), 2.0 * np.arange(10.0)])
    with pytest.raises(RankError, match=r"column [12]"):
        ols(np.arange(10.0), x)


def test_slope_sampling_distribution():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(200):
        x = np.column_stack([np.ones(80), rng.standard_normal(80)])
        y = x @ np.array([0.5, 2.0]) + rng.standard_normal(80)
        res = ols(y, x)
        if abs(res.params[1] - 2.0) <= 3.0 * res.se[1]:
            hits += 1
    assert hits >= 190


def test_clustered_se_grows_with_within_cluster_correlation():
    rng = np.random.default_rng(21)
    n_g, per = 25, 8
    ids = np.repeat(np.arange(n_g), per)
    x = np.column_stack([np.ones(n_g * per), np.repeat(rng.standard_normal(n_g), per)])
    y = x @ np.array([0.0, 1.0]) + np.repeat(rng.standard_normal(n_g), per)
    clustered = ols(y, x, cluster_ids=ids)
    classical = ols(y, x)
    assert clustered.cov_type == "cluster"
    assert clustered.n_clusters == n_g
    assert clustered.se[1] > classical.se[1]


def test_names_flow_through():
    res = ols(np.arange(4.0), np.ones((4, 1)), names=("const",))
    assert res.names == ("const",)


# ------------------------------------------------------------------ demeaning

def test_two_way_demean_is_idempotent_and_centered():
    rng = np.random.default_rng(8)
    n_states, n_years = 12, 6
    state_idx = np.repeat(np.arange(n_states), n_years)
    year_idx = np.tile(np.arange(n_years), n_states)
    values = rng.standard_normal(n_states * n_years)
    once = two_way_demean(values, state_idx, year_idx, n_states, n_years)
    twice = two_way_demean(once, state_idx, year_idx, n_states, n_years)
    assert np.max(np.abs(once - twice)) <= 1e-12
    for s in range(n_states):
        assert abs(once[state_idx == s].mean()) <= 1e-12
    for t in range(n_years):
        assert abs(once[year_idx == t].mean()) <= 1e-12


# ------------------------------------------------------------------ twfe_did

def two_by_two(beta, shift=0.3):
    # 2 states x 2 years, no noise: exposure 0/1, effect lands in the post year
    spec = PanelSpec(
        n_states=2,
        start_year=2017,
        end_year=2018,
        treatment_year=2018,
        beta_true=beta,
        common_post_shift=shift,
        sigma_state=0.0,
        sigma_year=0.0,
        sigma_noise=0.0,
        exposure=("binary", 1),
    )
    return generate_did_panel(spec)


def test_twfe_equals_difference_of_means_on_2x2():
    panel = two_by_two(beta=-1.625)  # dyadic: every cell mean is exact
    did = twfe_did(panel)
    y = panel.outcome
    treated = panel.exposure == 1.0
    post = panel.year == 2018
    oracle = (
        y[treated & post].mean() - y[treated & ~post].mean()
    ) - (y[~treated & post].mean() - y[~treated & ~post].mean())
    assert did.beta_hat == oracle
    assert did.regression.se[0] == 0.0
    assert did.regression.df_resid == 0
    assert did.group_changes["did"] == oracle
    assert did.group_changes["treated"] == pytest.approx(-1.625 + 0.3, abs=1e-12)
    assert did.group_changes["control"] == pytest.approx(0.3, abs=1e-12)


def test_twfe_2x2_nondyadic_within_float_accumulation():
    panel = two_by_two(beta=-1.6)
    did = twfe_did(panel)
    assert abs(did.beta_hat - (-1.6)) <= 1e-12


def test_planted_effect_recovery_with_noise():
    spec = PanelSpec()
    rejections = 0
    for r in range(100):
        panel = generate_did_panel(spec, seed=7000 + r)
        did = twfe_did(panel, event_study=False)
        assert did.regression.cov_type == "cluster"
        if abs(did.beta_hat - spec.beta_true) > 4.0 * did.regression.se[0]:
            rejections += 1
    assert rejections <= 2


def test_treatment_year_inference_and_overrides():
    panel = generate_did_panel(PanelSpec())
    auto = twfe_did(panel)
    explicit = twfe_did(panel, treatment_year=2018)
    assert auto.beta_hat == explicit.beta_hat
    assert auto.treatment_year == 2018
    with pytest.raises(ValueError, match="treatment"):
        twfe_did(panel, treatment_year=2014)  # no pre period left
    stripped = panel.__class__(
        state=panel.state, year=panel.year, outcome=panel.outcome,
        exposure=panel.exposure, ground_truth=None,
    )
    with pytest.raises(ValueError, match="treatment year"):
        twfe_did(stripped)


def test_event_study_base_year_is_exactly_zero():
    panel = generate_did_panel(PanelSpec())
    did = twfe_did(panel)
    assert did.base_year == 2017
    assert did.event_study[2017] == 0.0
    assert did.event_se[2017] == 0.0
    assert set(did.event_study) == set(panel.years)
    # post coefficients carry the planted effect
    for year in (2018, 2019):
        assert did.event_study[year] == pytest.approx(-1.6, abs=4.0 * did.event_se[year])


def test_event_study_skipped_with_single_pre_year():
    spec = PanelSpec(start_year=2017, end_year=2019, treatment_year=2018)
    did = twfe_did(generate_did_panel(spec))
    assert did.event_study is None
    assert did.pretrend_joint_p is None


def test_pretrend_test_size_and_power():
    spec = PanelSpec(beta_true=0.0, exposure=("binary", 20), start_year=2013)
    size_hits = 0
    power_hits = 0
    for r in range(120):
        panel = generate_did_panel(spec, seed=4200 + r)
        clean = twfe_did(panel)
        if clean.pretrend_joint_p < 0.05:
            size_hits += 1
        # plant a linear differential trend half a noise sd per year
        drift = 0.5 * spec.sigma_noise * (panel.year - spec.start_year) * panel.exposure
        drifted = panel.__class__(
            state=panel.state, year=panel.year, outcome=panel.outcome + drift,
            exposure=panel.exposure, ground_truth=spec,
        )
        if twfe_did(drifted).pretrend_joint_p < 0.05:
            power_hits += 1
    assert size_hits <= 15  # ~5% nominal
    assert power_hits >= 96  # ~80% required power, comfortably above


def test_pretrend_chi2_variant_and_explicit_call():
    panel = generate_did_panel(PanelSpec(beta_true=0.0, start_year=2013))
    did = twfe_did(panel)
    p_f = pretrend_test(did, dist="f")
    p_chi2 = pretrend_test(did, dist="chi2")
    assert did.pretrend_joint_p == p_f
    assert 0.0 <= p_chi2 <= 1.0
    assert p_f != p_chi2
    with pytest.raises(ValueError, match="dist"):
        pretrend_test(did, dist="gauss")


def test_placebo_did_truncates_and_is_null():
    spec = PanelSpec()
    betas = []
    for r in range(60):
        panel = generate_did_panel(spec, seed=5100 + r)
        placebo = placebo_did(panel, fake_year=2016)
        assert placebo.treatment_year == 2016
        betas.append(placebo.beta_hat / placebo.regression.se[0])
    # fake-effect t-stats should look like noise, not like the real -1.6 effect
    assert abs(np.mean(betas)) < 0.6
    assert np.mean(np.abs(np.asarray(betas)) > 2.5) < 0.1


def test_placebo_did_contract():
    panel = generate_did_panel(PanelSpec())
    with pytest.raises(ValueError, match="fake"):
        placebo_did(panel, fake_year=2014)  # would leave no pre period
    with pytest.raises(ValueError, match="fake"):
        placebo_did(panel, fake_year=2018)  # not strictly inside the pre period


def test_all_treated_panel_is_rejected():
    spec = PanelSpec(exposure=tuple(np.ones(6)), n_states=6)
    panel = generate_did_panel(spec)
    with pytest.raises(ValueError, match="treated and control"):
        twfe_did(panel)


# ------------------------------------------------------------------ tsls

def test_tsls_equals_ols_when_z_is_x():
    rng = np.random.default_rng(31)
    x = np.column_stack([np.ones(100), rng.standard_normal(100)])
    y = x @ np.array([1.0, -0.7]) + rng.standard_normal(100)
    iv = tsls(y, x, x)
    direct = ols(y, x)
    assert np.max(np.abs(iv.params - direct.params)) <= 1e-10
    assert np.max(np.abs(iv.se - direct.se)) <= 1e-10
    assert np.isinf(iv.first_stage_f).all()  # every column instruments itself


def test_tsls_underidentified_raises():
    rng = np.random.default_rng(32)
    x = np.column_stack([np.ones(50), rng.standard_normal((50, 2))])
    z = np.ones((50, 2))
    with pytest.raises(RankError, match="under-identified"):
        tsls(rng.standard_normal(50), x, z)


def test_tsls_removes_simultaneity_bias():
    rng = np.random.default_rng(33)
    n, beta_d = 4000, -1.5
    w = rng.standard_normal(n)
    u = rng.standard_normal(n)
    e = 0.5 * rng.standard_normal(n)
    p = (2.0 * w + e - u) / (beta_d - 1.0)
    q = beta_d * p + u
    x = np.column_stack([np.ones(n), p])
    z = np.column_stack([np.ones(n), w])
    biased = ols(q, x)
    iv = tsls(q, x, z)
    assert abs(biased.params[1] - beta_d) > 0.3
    assert abs(iv.params[1] - beta_d) <= 3.0 * iv.se[1]
    assert np.min(iv.first_stage_f) > 10.0
    assert not iv.weak_instruments


def test_weak_instrument_flag():
    spec = PanelSpec(n_states=60)
    panel = attach_exposure_instrument(generate_did_panel(spec), relevance=0.02)
    states = panel.state[:: spec.n_years]
    x_state = panel.exposure[:: spec.n_years]
    z_state = panel.extra["instrument"][:: spec.n_years]
    y = np.asarray([panel.outcome[panel.state == s].mean() for s in np.unique(states)])
    x = np.column_stack([np.ones(spec.n_states), x_state])
    z = np.column_stack([np.ones(spec.n_states), z_state])
    iv = tsls(y, x, z)
    assert iv.weak_instruments
    assert np.min(iv.first_stage_f) < 10.0


def test_tsls_second_stage_residuals_use_original_x():
    rng = np.random.default_rng(34)
    n = 500
    z = rng.standard_normal(n)
    x1 = 0.9 * z + 0.4 * rng.standard_normal(n)
    y = 2.0 + 1.5 * x1 + rng.standard_normal(n)
    xm = np.column_stack([np.ones(n), x1])
    zm = np.column_stack([np.ones(n), z])
    iv = tsls(y, xm, zm)
    assert np.allclose(iv.resid, y - xm @ iv.params, atol=1e-12)


def test_stats_consistency_with_t_distribution():
    rng = np.random.default_rng(35)
    x = np.column_stack([np.ones(40), rng.standard_normal(40)])
    y = rng.standard_normal(40)
    res = ols(y, x)
    expect = 2.0 * stats.t.sf(abs(res.tstats[1]), res.df_resid)
    assert res.pvalues[1] == pytest.approx(expect, rel=1e-12)
