"""Regression estimators: OLS core, two-way fixed effects DiD, 2SLS.

All inference runs through ols().  Cluster-robust covariances use the CR1
small-sample correction (G/(G-1)) * ((n-1)/(n-k)); p-values use a Student t
reference with n-k degrees of freedom classically and G-1 when clustered,
the usual small-cluster convention.  Two-way clustering is out of scope.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, stats

from ..datagen import StatePanel
from ..errors import RankError

__all__ = [
    "RegressionResult",
    "DidResult",
    "IvResult",
    "ols",
    "twfe_did",
    "placebo_did",
    "pretrend_test",
    "tsls",
    "two_way_demean",
]


@dataclass(frozen=True)
class RegressionResult:
    params: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    tstats: np.ndarray
    pvalues: np.ndarray
    n_obs: int
    df_resid: int
    r_squared: float
    cov_type: str
    n_clusters: int | None = None
    names: tuple | None = None
    resid: np.ndarray = field(default=None, repr=False)


def _pivoted_rank_check(x, what="design matrix"):
    """QR with column pivoting; raises RankError naming the bad column."""
    q, r, piv = linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(x.shape) * np.finfo(float).eps * (diag[0] if diag[0] > 0 else 1.0)
    bad = np.flatnonzero(diag <= tol)
    if diag[0] == 0.0 or bad.size:
        col = int(piv[bad[0]]) if bad.size else int(piv[0])
        raise RankError(
            f"{what} is rank deficient: column {col} is linearly dependent "
            f"on the other columns"
        )
    return q, r, piv


def _finalize(params, cov, n, df_resid, df_inference, r_squared, cov_type,
              n_clusters, names, resid):
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(se > 0.0, params / np.where(se > 0.0, se, 1.0),
                          np.where(params == 0.0, 0.0, np.inf * np.sign(params)))
        pvalues = np.where(
            np.isfinite(tstats),
            2.0 * stats.t.sf(np.abs(tstats), df_inference),
            0.0,
        )
    return RegressionResult(
        params=params,
        cov=cov,
        se=se,
        tstats=tstats,
        pvalues=pvalues,
        n_obs=n,
        df_resid=df_resid,
        r_squared=r_squared,
        cov_type=cov_type,
        n_clusters=n_clusters,
        names=names,
        resid=resid,
    )


def _cluster_meat(x, resid, cluster_ids):
    groups, inverse = np.unique(cluster_ids, return_inverse=True)
    n_g = len(groups)
    if n_g < 2:
        raise ValueError("cluster-robust inference needs at least 2 clusters")
    scores = np.zeros((n_g, x.shape[1]))
    np.add.at(scores, inverse, x * resid[:, None])
    return scores.T @ scores, n_g


def ols(y, x, cluster_ids=None, names=None, absorbed_dof=0):
    """Least squares via pivoted QR with classical or CR1-clustered errors.

    absorbed_dof counts parameters removed outside of x (fixed effects swept
    by demeaning); it reduces the residual degrees of freedom used in the
    error variance and the CR1 correction.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    if len(y) != n:
        raise ValueError(f"y has {len(y)} rows but x has {n}")
    q, r, piv = _pivoted_rank_check(x)
    beta_piv = linalg.solve_triangular(r, q.T @ y)
    unpiv = np.argsort(piv)
    params = beta_piv[unpiv]
    resid = y - x @ params
    rss = float(resid @ resid)
    # A numerically perfect fit (zero-noise data, saturated designs) gets an
    # exactly zero covariance instead of float-dust standard errors.
    perfect = rss <= 1e-12 * (1.0 + float(y @ y))
    df_resid = n - k - absorbed_dof
    if df_resid < 1:
        if not perfect:
            raise ValueError(
                f"no residual degrees of freedom: n={n}, params={k + absorbed_dof}"
            )
        df_resid = 0

    r_inv = linalg.solve_triangular(r, np.eye(k))
    xtx_inv = (r_inv @ r_inv.T)[np.ix_(unpiv, unpiv)]
    tss = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - rss / tss if tss > 0.0 else 1.0

    if cluster_ids is None:
        sigma2 = rss / df_resid if df_resid > 0 and not perfect else 0.0
        cov = sigma2 * xtx_inv
        return _finalize(params, cov, n, df_resid, max(df_resid, 1), r_squared,
                         "classical", None, names, resid)
    meat, n_g = _cluster_meat(x, resid, np.asarray(cluster_ids))
    if df_resid > 0 and not perfect:
        cr1 = (n_g / (n_g - 1.0)) * ((n - 1.0) / df_resid)
    else:
        cr1 = 0.0
    cov = cr1 * xtx_inv @ meat @ xtx_inv
    return _finalize(params, cov, n, df_resid, max(n_g - 1, 1), r_squared,
                     "cluster", n_g, names, resid)


# ===================================================================
# Two-way fixed effects difference-in-differences
# ===================================================================


def two_way_demean(values, state_idx, year_idx, n_states, n_years):
    """Within transform for a balanced panel: remove unit and time means.

    One pass (subtract both group means, add the grand mean) is exact when
    the panel is balanced; the transform is idempotent.
    """
    values = np.asarray(values, dtype=float)
    state_means = np.zeros(n_states)
    year_means = np.zeros(n_years)
    np.add.at(state_means, state_idx, values)
    np.add.at(year_means, year_idx, values)
    state_means /= n_years
    year_means /= n_states
    grand = values.mean()
    return values - state_means[state_idx] - year_means[year_idx] + grand


@dataclass(frozen=True)
class DidResult:
    """Static interaction estimate plus the optional event study around it.

    event_study maps year -> coefficient on exposure x 1[year], relative to
    the base year (the last pre-treatment year), whose own entry is exactly
    0 by construction.  pretrend_joint_p is the joint test that the free
    pre-period coefficients are all zero, when at least two exist.
    """

    beta_hat: float
    regression: RegressionResult
    treatment_year: int
    base_year: int
    event_study: dict | None = None
    event_se: dict | None = None
    pretrend_joint_p: float | None = None
    event_result: RegressionResult = field(default=None, repr=False)
    event_years: tuple = field(default=(), repr=False)
    pre_years: tuple = field(default=(), repr=False)
    group_changes: dict | None = None


def _panel_layout(panel):
    states, state_idx = np.unique(panel.state, return_inverse=True)
    years, year_idx = np.unique(panel.year, return_inverse=True)
    return states, state_idx, years, year_idx


def _per_state_exposure(panel, state_idx, n_states):
    exposure = np.zeros(n_states)
    exposure[state_idx] = panel.exposure
    return exposure


def twfe_did(panel, treatment_year=None, exposure_mode="auto", event_study=True):
    """Y_it = beta * post_t x exposure_i + state FE + year FE + e_it.

    Fixed effects are swept by exact two-way demeaning (balanced panels), and
    standard errors are clustered by state with the degrees-of-freedom count
    including the absorbed effects.  The event study interacts exposure with
    every year except the last pre-treatment year; it needs at least two pre
    years and is skipped (static estimate only) otherwise.
    """
    if treatment_year is None:
        if panel.ground_truth is None:
            raise ValueError("no treatment year given and panel has no ground truth")
        treatment_year = panel.ground_truth.treatment_year
    states, state_idx, years, year_idx = _panel_layout(panel)
    n_states, n_years = len(states), len(years)
    pre_years = [int(y) for y in years if y < treatment_year]
    post_years = [int(y) for y in years if y >= treatment_year]
    if not pre_years or not post_years:
        raise ValueError(
            f"treatment year {treatment_year} leaves no "
            f"{'pre' if not pre_years else 'post'} period in the panel"
        )

    exposure_by_state = _per_state_exposure(panel, state_idx, n_states)
    is_binary = np.all(np.isin(exposure_by_state, (0.0, 1.0)))
    if exposure_mode == "binary" and not is_binary:
        raise ValueError("exposure_mode='binary' but exposure is not 0/1")
    if exposure_mode not in ("auto", "binary", "continuous"):
        raise ValueError(f"unknown exposure_mode {exposure_mode!r}")
    if is_binary and exposure_mode != "continuous":
        n_treated = int(exposure_by_state.sum())
        if n_treated == 0 or n_treated == n_states:
            raise ValueError(
                "binary exposure needs both treated and control states, "
                f"got {n_treated} treated of {n_states}"
            )

    post = (panel.year >= treatment_year).astype(float)
    treat = post * panel.exposure
    absorbed = n_states + n_years - 1
    y_dm = two_way_demean(panel.outcome, state_idx, year_idx, n_states, n_years)
    d_dm = two_way_demean(treat, state_idx, year_idx, n_states, n_years)
    static = ols(y_dm, d_dm, cluster_ids=panel.state, names=("post_x_exposure",),
                 absorbed_dof=absorbed)
    beta_hat = float(static.params[0])

    group_changes = None
    if is_binary and exposure_mode != "continuous":
        group_changes = _binary_group_changes(panel, treatment_year)

    base_year = max(pre_years)
    result = DidResult(
        beta_hat=beta_hat,
        regression=static,
        treatment_year=int(treatment_year),
        base_year=base_year,
        group_changes=group_changes,
    )
    if not event_study or len(pre_years) < 2:
        return result

    event_years = tuple(int(y) for y in years if y != base_year)
    columns = np.empty((len(panel.year), len(event_years)))
    for j, ev_year in enumerate(event_years):
        col = panel.exposure * (panel.year == ev_year)
        columns[:, j] = two_way_demean(col, state_idx, year_idx, n_states, n_years)
    ev_names = tuple(f"exposure_x_{y}" for y in event_years)
    ev = ols(y_dm, columns, cluster_ids=panel.state, names=ev_names,
             absorbed_dof=absorbed)
    coef_map = {int(y): float(b) for y, b in zip(event_years, ev.params)}
    se_map = {int(y): float(s) for y, s in zip(event_years, ev.se)}
    coef_map[base_year] = 0.0
    se_map[base_year] = 0.0
    free_pre = tuple(y for y in pre_years if y != base_year)
    result = DidResult(
        beta_hat=beta_hat,
        regression=static,
        treatment_year=int(treatment_year),
        base_year=base_year,
        event_study=dict(sorted(coef_map.items())),
        event_se=dict(sorted(se_map.items())),
        event_result=ev,
        event_years=event_years,
        pre_years=free_pre,
        group_changes=group_changes,
    )
    if len(free_pre) >= 2:
        try:
            result = replace(result, pretrend_joint_p=pretrend_test(result))
        except RankError:
            # perfect fits have an exactly singular covariance block; there
            # is no sampling variation to test, so leave the p-value unset
            pass
    return result


def _binary_group_changes(panel, treatment_year):
    """Post-minus-pre mean outcome change for treated and control groups."""
    post = panel.year >= treatment_year
    treated = panel.exposure == 1.0
    changes = {}
    for label, mask in (("treated", treated), ("control", ~treated)):
        pre_mean = panel.outcome[mask & ~post].mean()
        post_mean = panel.outcome[mask & post].mean()
        changes[label] = float(post_mean - pre_mean)
    changes["did"] = changes["treated"] - changes["control"]
    return changes


def placebo_did(panel, fake_year, real_treatment_year=None):
    """Rerun the DiD on pre-treatment rows only, with a fake cutoff.

    The panel is truncated to years strictly before the real treatment year,
    so any planted effect is excluded and the estimate should be a null.
    fake_year must sit strictly inside the pre-period: at least one
    pre-period year on each side.
    """
    if real_treatment_year is None:
        if panel.ground_truth is None:
            raise ValueError("no real treatment year given and panel has no ground truth")
        real_treatment_year = panel.ground_truth.treatment_year
    years = np.unique(panel.year)
    pre = [int(y) for y in years if y < real_treatment_year]
    if len(pre) < 2 or not pre[0] < fake_year <= pre[-1]:
        raise ValueError(
            f"fake year {fake_year} is not strictly inside the pre-period "
            f"{pre[0] if pre else '?'}..{pre[-1] if pre else '?'} "
            f"(real treatment year {real_treatment_year})"
        )
    keep = panel.year < real_treatment_year
    truncated = StatePanel(
        state=panel.state[keep],
        year=panel.year[keep],
        outcome=panel.outcome[keep],
        exposure=panel.exposure[keep],
        extra={name: col[keep] for name, col in panel.extra.items()},
        ground_truth=None,
        outcome_name=panel.outcome_name,
    )
    return twfe_did(truncated, treatment_year=fake_year)


def pretrend_test(did, dist="f"):
    """Joint Wald test that all free pre-period coefficients are zero.

    Uses the clustered covariance of the event-study regression.  With few
    clusters the chi-square reference over-rejects, so the default maps the
    Wald statistic to an F with (q, G-1) degrees of freedom.
    """
    if did.event_result is None or len(did.pre_years) < 2:
        raise ValueError("need at least two free pre-period event-study coefficients")
    idx = [did.event_years.index(y) for y in did.pre_years]
    coefs = did.event_result.params[idx]
    sub_cov = did.event_result.cov[np.ix_(idx, idx)]
    try:
        solved = np.linalg.solve(sub_cov, coefs)
    except np.linalg.LinAlgError:
        raise RankError("pre-period covariance block is singular") from None
    wald = float(coefs @ solved)
    q = len(idx)
    if dist == "chi2":
        return float(stats.chi2.sf(wald, q))
    if dist == "f":
        df2 = did.event_result.n_clusters - 1
        return float(stats.f.sf(wald / q, q, df2))
    raise ValueError(f"unknown dist {dist!r}; use 'f' or 'chi2'")


# ===================================================================
# Two-stage least squares
# ===================================================================


@dataclass(frozen=True)
class IvResult:
    """2SLS estimates with per-regressor first-stage F statistics.

    first_stage_f is aligned to the columns of x; a column that appears
    verbatim among the instruments is its own instrument and gets +inf.
    weak_instruments flags any instrumented column with F below 10.
    """

    params: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    tstats: np.ndarray
    pvalues: np.ndarray
    n_obs: int
    first_stage_f: np.ndarray
    weak_instruments: bool
    cov_type: str
    n_clusters: int | None = None
    names: tuple | None = None
    resid: np.ndarray = field(default=None, repr=False)


def tsls(y, x, z, cluster_ids=None, names=None):
    """Two-stage least squares of y on x using instruments z.

    The second-stage covariance uses residuals from the original regressors
    (not the fitted first stage).  Each instrumented column's first-stage F
    tests joint significance of the excluded instruments in the regression
    of that column on all of z.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if z.ndim == 1:
        z = z[:, None]
    n, k = x.shape
    m = z.shape[1]
    if z.shape[0] != n or len(y) != n:
        raise ValueError("y, x and z must have the same number of rows")
    if m < k:
        raise RankError(f"under-identified: {m} instruments for {k} regressors")
    qz, _, _ = _pivoted_rank_check(z, what="instrument matrix")
    x_hat = qz @ (qz.T @ x)

    q, r, piv = _pivoted_rank_check(x_hat, what="projected design matrix")
    unpiv = np.argsort(piv)
    params = linalg.solve_triangular(r, q.T @ y)[unpiv]
    resid = y - x @ params
    rss = float(resid @ resid)
    df_resid = n - k
    r_inv = linalg.solve_triangular(r, np.eye(k))
    bread = (r_inv @ r_inv.T)[np.ix_(unpiv, unpiv)]

    if cluster_ids is None:
        cov = (rss / df_resid) * bread
        df_inference = df_resid
        cov_type, n_g = "classical", None
    else:
        meat, n_g = _cluster_meat(x_hat, resid, np.asarray(cluster_ids))
        cr1 = (n_g / (n_g - 1.0)) * ((n - 1.0) / df_resid)
        cov = cr1 * bread @ meat @ bread
        df_inference = n_g - 1
        cov_type = "cluster"

    first_stage_f = _first_stage_f(x, z)
    finite = first_stage_f[np.isfinite(first_stage_f)]
    weak = bool((finite < 10.0).any()) if finite.size else False

    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(se > 0.0, params / np.where(se > 0.0, se, 1.0),
                          np.where(params == 0.0, 0.0, np.inf * np.sign(params)))
        pvalues = np.where(
            np.isfinite(tstats), 2.0 * stats.t.sf(np.abs(tstats), df_inference), 0.0
        )
    return IvResult(
        params=params,
        cov=cov,
        se=se,
        tstats=tstats,
        pvalues=pvalues,
        n_obs=n,
        first_stage_f=first_stage_f,
        weak_instruments=weak,
        cov_type=cov_type,
        n_clusters=n_g,
        names=names,
        resid=resid,
    )


def _first_stage_f(x, z):
    """F statistic of the excluded instruments per column of x.

    A column of x that matches an instrument column exactly instruments
    itself: its F is +inf and it contributes no excluded-instrument test.
    """
    n, k = x.shape
    included = []
    for j in range(k):
        included.append(any(np.array_equal(x[:, j], z[:, c]) for c in range(z.shape[1])))
    excluded_cols = [
        c
        for c in range(z.shape[1])
        if not any(np.array_equal(z[:, c], x[:, j]) for j in range(k))
    ]
    out = np.full(k, np.inf)
    for j in range(k):
        if included[j] or not excluded_cols:
            continue
        first = ols(x[:, j], z)
        idx = excluded_cols
        coefs = first.params[idx]
        sub_cov = first.cov[np.ix_(idx, idx)]
        try:
            wald = float(coefs @ np.linalg.solve(sub_cov, coefs))
        except np.linalg.LinAlgError:
            raise RankError("first-stage covariance block is singular") from None
        out[j] = wald / len(idx)
    return out
