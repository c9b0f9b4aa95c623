"""VAR estimation, identification, IRF/FEVD, and shrinkage checks.

Oracles are closed-form where possible (AR(1) responses, hand Cholesky,
per-equation least squares) and seeded Monte Carlo loops elsewhere.
"""

import numpy as np
import pytest

from tariffkit.datagen import VarSpec, generate_var_series
from tariffkit.econometrics import (
    VarModel,
    event_response,
    fevd,
    fit_var,
    fit_var_shrunk,
    identify_short_run,
    irf,
    ols,
    select_lag,
)
from tariffkit.errors import RankError

# Stable 2-variable VAR(1) used wherever the truth must be known.
A1 = np.array([[0.5, 0.1], [-0.2, 0.6]])
B0_TRUE = np.array([[1.0, 0.0], [0.4, 0.8]])

# A 3-lag DGP whose tail lag is strong enough for criteria to see.
LAG3_A = (
    ((0.4, 0.1), (0.0, 0.3)),
    ((0.2, 0.0), (0.1, 0.2)),
    ((-0.2, 0.05), (0.05, 0.25)),
)

# Triangular 3-variable system for impact-matrix recovery.
SVAR_B0 = np.array([[1.0, 0.0, 0.0], [0.5, 0.8, 0.0], [-0.3, 0.2, 0.9]])
SVAR_A = np.array([[0.5, 0.0, 0.0], [0.1, 0.4, 0.0], [0.0, 0.1, 0.5]])


def sample(t_obs, seed, a=A1, b0=B0_TRUE, names=("exports", "price")):
    spec = VarSpec(
        a_matrices=np.asarray(a),
        b0=b0,
        names=names[: np.asarray(b0).shape[0]],
        t_obs=t_obs,
        seed=seed,
    )
    return generate_var_series(spec)


def toy_model(coefs, sigma, names):
    coefs = np.asarray(coefs, dtype=float)
    k = coefs.shape[1]
    return VarModel(
        names=tuple(names),
        p=coefs.shape[0],
        intercept=np.zeros(k),
        coefs=coefs,
        sigma=np.asarray(sigma, dtype=float),
        aic=0.0,
        bic=0.0,
        hq=0.0,
        nobs=100,
    )


# ------------------------------------------------------------ estimation


def test_sigma_uses_effective_sample_denominator():
    panel = sample(t_obs=120, seed=3)
    model = fit_var(panel, p=2)
    values = panel.values
    t_total = values.shape[0]
    x = np.hstack(
        [
            np.ones((t_total - 2, 1)),
            values[1 : t_total - 1],
            values[: t_total - 2],
        ]
    )
    y = values[2:]
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    oracle = resid.T @ resid / (t_total - 2)
    assert model.nobs == t_total - 2
    assert np.allclose(model.sigma, oracle, atol=1e-12)
    assert np.allclose(model.resid, resid, atol=1e-12)


def test_information_criteria_formulas():
    panel = sample(t_obs=150, seed=11)
    model = fit_var(panel, p=1)
    k = model.k
    t_eff = model.nobs
    n_params = k * (1 + k * model.p)
    _, logdet = np.linalg.slogdet(model.sigma)
    assert model.aic == pytest.approx(logdet + 2.0 * n_params / t_eff, abs=1e-12)
    assert model.bic == pytest.approx(
        logdet + n_params * np.log(t_eff) / t_eff, abs=1e-12
    )
    assert model.hq == pytest.approx(
        logdet + 2.0 * n_params * np.log(np.log(t_eff)) / t_eff, abs=1e-12
    )
    with pytest.raises(ValueError, match="criterion"):
        model.criterion("mdl")


def test_coefficient_layout_matches_equation_form():
    # one-step prediction with the stored (equation, regressor) blocks must
    # reproduce the fitted values
    panel = sample(t_obs=200, seed=21)
    model = fit_var(panel, p=2)
    values = panel.values
    t = 50
    pred = model.intercept.copy()
    for j in range(model.p):
        pred = pred + model.coefs[j] @ values[t - 1 - j]
    assert np.allclose(values[t] - pred, model.resid[t - model.p], atol=1e-10)


def test_too_short_sample_is_rejected():
    with pytest.raises(ValueError, match="too short"):
        fit_var(np.zeros((8, 2)), p=2)
    with pytest.raises(ValueError, match="lag order"):
        fit_var(sample(60, 1), p=0)


def test_exog_rows_must_match():
    panel = sample(t_obs=80, seed=2)
    with pytest.raises(ValueError, match="one row per observation"):
        fit_var(panel, p=1, exog=np.zeros(79))


def test_exog_coefs_and_se_match_per_equation_ols():
    spec = VarSpec(
        a_matrices=A1,
        b0=B0_TRUE,
        names=("exports", "price"),
        t_obs=100,
        seed=17,
        shock_date=40,
        shock_vector=(-6.0, 0.0),
        dummy_dates=(40, 41),
    )
    panel = generate_var_series(spec)
    model = fit_var(panel, p=1, exog=panel.dummy)
    assert model.exog_coefs.shape == (2, 1)
    assert model.exog_se.shape == (2, 1)
    values = panel.values
    x = np.hstack(
        [np.ones((99, 1)), values[:-1], panel.dummy[1:, None].astype(float)]
    )
    for i in range(2):
        fit = ols(values[1:, i], x)
        assert model.exog_coefs[i, 0] == pytest.approx(fit.params[-1], abs=1e-10)
        assert model.exog_se[i, 0] == pytest.approx(fit.se[-1], rel=1e-10)
    # the planted event is large enough to be unmissable in equation 0
    assert abs(model.exog_coefs[0, 0] / model.exog_se[0, 0]) > 3.0


# ------------------------------------------------------------ lag choice


def test_bic_recovers_var1():
    hits = 0
    for r in range(20):
        panel = sample(t_obs=400, seed=300 + r)
        if select_lag(panel, p_max=4, criterion="bic") == 1:
            hits += 1
    assert hits >= 17


def test_aic_finds_third_lag():
    hits = 0
    for r in range(30):
        spec = VarSpec(
            a_matrices=np.asarray(LAG3_A),
            b0=np.eye(2),
            names=("exports", "price"),
            t_obs=1000,
            seed=6000 + r,
        )
        panel = generate_var_series(spec)
        if select_lag(panel, p_max=6, criterion="aic") == 3:
            hits += 1
    assert hits >= 21  # 0.7 of 30


def test_select_lag_validates_inputs():
    panel = sample(t_obs=100, seed=4)
    with pytest.raises(ValueError, match="criterion"):
        select_lag(panel, p_max=3, criterion="gcv")
    with pytest.raises(ValueError, match="p_max"):
        select_lag(panel, p_max=0)


# ----------------------------------------------------- identification


def test_hand_cholesky_factor():
    sigma = np.array([[4.0, 2.0], [2.0, 3.0]])
    model = toy_model(np.zeros((1, 2, 2)), sigma, ("a", "b"))
    sid = identify_short_run(model)
    expected = np.array([[2.0, 0.0], [1.0, np.sqrt(2.0)]])
    assert np.allclose(sid.b0, expected, atol=1e-12)
    assert sid.ordering == (0, 1)
    assert sid.names == ("a", "b")


def test_factorization_reproduces_covariance():
    panel = sample(t_obs=300, seed=9)
    model = fit_var(panel, p=1)
    sid = identify_short_run(model)
    assert np.max(np.abs(sid.b0 @ sid.b0.T - model.sigma)) <= 1e-8
    assert np.all(np.diag(sid.b0) > 0.0)
    assert np.allclose(np.triu(sid.b0, k=1), 0.0)


def test_singular_covariance_is_rejected():
    sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
    model = toy_model(np.zeros((1, 2, 2)), sigma, ("a", "b"))
    with pytest.raises(RankError, match="smallest eigenvalue"):
        identify_short_run(model)


def test_ordering_by_name_permutes_covariance():
    panel = sample(t_obs=300, seed=13)
    model = fit_var(panel, p=1)
    sid = identify_short_run(model, ordering=("price", "exports"))
    assert sid.names == ("price", "exports")
    assert sid.ordering == (1, 0)
    perm = np.ix_((1, 0), (1, 0))
    assert np.allclose(sid.b0 @ sid.b0.T, model.sigma[perm], atol=1e-10)
    with pytest.raises(ValueError, match="unknown variable"):
        identify_short_run(model, ordering=("price", "acreage"))
    with pytest.raises(ValueError, match="permutation"):
        identify_short_run(model, ordering=("price", "price"))


# -------------------------------------------------------- irf and fevd


def test_ar1_impulse_is_geometric():
    model = toy_model(np.array([[[0.9]]]), np.array([[1.0]]), ("y",))
    sid = identify_short_run(model)
    out = irf(model, sid, horizon=12)
    for h in range(13):
        assert out.values[h, 0, 0] == pytest.approx(0.9**h, abs=1e-12)
    assert out.horizons == 12


def test_impact_row_is_b0_exactly():
    panel = sample(t_obs=200, seed=31)
    model = fit_var(panel, p=1)
    sid = identify_short_run(model)
    out = irf(model, sid, horizon=8)
    assert np.array_equal(out.values[0], sid.b0)
    with pytest.raises(ValueError, match="horizon"):
        irf(model, sid, horizon=-1)


def test_fevd_shares_are_a_distribution():
    panel = sample(t_obs=400, seed=37)
    model = fit_var(panel, p=2)
    sid = identify_short_run(model)
    out = fevd(model, sid, horizon=10)
    sums = out.values.sum(axis=2)
    assert np.max(np.abs(sums - 1.0)) <= 1e-8
    assert np.all(out.values >= 0.0)
    # on impact the first-ordered variable only loads on its own shock
    assert out.at_horizon(1)[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(out.at_horizon(1), out.values[0])
    with pytest.raises(ValueError, match="horizon"):
        out.at_horizon(11)
    with pytest.raises(ValueError, match="horizon"):
        fevd(model, sid, horizon=0)


def test_event_response_is_linear():
    panel = sample(t_obs=200, seed=41)
    model = fit_var(panel, p=1)
    sid = identify_short_run(model)
    out = irf(model, sid, horizon=6)
    v = np.array([-2.0, 0.5])
    w = np.array([1.0, 1.0])
    combined = event_response(out, 3.0 * v - 2.0 * w)
    parts = 3.0 * event_response(out, v) - 2.0 * event_response(out, w)
    assert np.allclose(combined, parts, atol=1e-12)
    assert combined.shape == (7, 2)
    with pytest.raises(ValueError, match="one entry per variable"):
        event_response(out, np.zeros(3))


# ----------------------------------------------------------- recovery


def test_estimates_tighten_with_sample_size():
    errors = []
    for t_obs in (200, 2000, 20000):
        panel = sample(t_obs=t_obs, seed=5)
        model = fit_var(panel, p=1)
        errors.append(float(np.max(np.abs(model.coefs[0] - A1))))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.02


def test_impact_matrix_recovery_at_large_t():
    spec = VarSpec(
        a_matrices=SVAR_A,
        b0=SVAR_B0,
        names=("exports", "price", "inventory"),
        t_obs=10000,
        seed=7000,
    )
    panel = generate_var_series(spec)
    model = fit_var(panel, p=1)
    sid = identify_short_run(model)
    assert np.max(np.abs(sid.b0 - SVAR_B0)) <= 0.05


# ---------------------------------------------------------- shrinkage


def test_shrinkage_limits():
    panel = sample(t_obs=60, seed=77)
    loose = fit_var_shrunk(panel, p=1, lam=1e8)
    flat = fit_var(panel, p=1)
    assert np.max(np.abs(loose.coefs - flat.coefs)) <= 1e-6
    assert np.max(np.abs(loose.intercept - flat.intercept)) <= 1e-6

    tight = fit_var_shrunk(panel, p=1, lam=1e-8)
    prior = np.eye(2)  # own first lag one, everything else zero
    assert np.max(np.abs(tight.coefs[0] - prior)) <= 1e-4
    assert tight.shrinkage == pytest.approx(1e-8)


def test_shrinkage_higher_lags_shrink_to_zero():
    panel = sample(t_obs=80, seed=78)
    tight = fit_var_shrunk(panel, p=2, lam=1e-8)
    assert np.max(np.abs(tight.coefs[0] - np.eye(2))) <= 1e-4
    assert np.max(np.abs(tight.coefs[1])) <= 1e-4


def test_shrinkage_tightness_must_be_positive():
    panel = sample(t_obs=60, seed=79)
    with pytest.raises(ValueError, match="tightness"):
        fit_var_shrunk(panel, p=1, lam=0.0)
    with pytest.raises(ValueError, match="tightness"):
        fit_var_shrunk(panel, p=1, lam=-1.0)


def test_some_tightness_beats_least_squares_at_short_t():
    # short-sample risk comparison; full-size version lives in the
    # experiment runner
    grid = (0.1, 0.2, 0.5, 1.0, 2.0)
    sq_err = {lam: 0.0 for lam in grid}
    sq_err["ols"] = 0.0
    reps = 40
    for r in range(reps):
        panel = sample(t_obs=60, seed=8000 + r)
        flat = fit_var(panel, p=1)
        sq_err["ols"] += float(np.sum((flat.coefs[0] - A1) ** 2))
        for lam in grid:
            shrunk = fit_var_shrunk(panel, p=1, lam=lam)
            sq_err[lam] += float(np.sum((shrunk.coefs[0] - A1) ** 2))
    best = min(sq_err[lam] for lam in grid)
    assert best < sq_err["ols"]
