"""Reduced-form VAR estimation, recursive identification, IRFs, FEVD.

Estimation is per-equation least squares on a shared lag design.  The
residual covariance uses denominator T - p (the effective sample size, no
further degrees-of-freedom adjustment) so cross-implementations can match
it exactly.  Identification is by triangular factorization of the residual
covariance under a chosen variable ordering; structural shocks are
normalized to positive own-impact (positive diagonal of B0).
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import RankError

__all__ = [
    "VarModel",
    "StructuralId",
    "Irf",
    "Fevd",
    "fit_var",
    "select_lag",
    "identify_short_run",
    "irf",
    "fevd",
    "fit_var_shrunk",
    "event_response",
]

CRITERIA = ("aic", "bic", "hq")


@dataclass(frozen=True)
class VarModel:
    """Fitted VAR(p): y_t = intercept + sum_j coefs[j] y_{t-j} (+ exog) + u_t."""

    names: tuple
    p: int
    intercept: np.ndarray
    coefs: np.ndarray
    sigma: np.ndarray
    aic: float
    bic: float
    hq: float
    nobs: int
    exog_coefs: np.ndarray | None = None
    exog_se: np.ndarray | None = None
    shrinkage: float | None = None
    resid: np.ndarray = field(default=None, repr=False)

    @property
    def k(self):
        return len(self.names)

    def criterion(self, name):
        name = name.lower()
        if name not in CRITERIA:
            raise ValueError(f"unknown criterion {name!r}; choose from {CRITERIA}")
        return getattr(self, name)


def _coerce_series(series):
    # anything carrying named columns (simulated panels, loaded CSV bundles)
    names = getattr(series, "names", None)
    if names is not None:
        return np.asarray(series.values, dtype=float), tuple(names)
    values = np.asarray(series, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return values, tuple(f"y{j}" for j in range(values.shape[1]))


def _lag_design(values, p, exog):
    t_total, k = values.shape
    rows = t_total - p
    cols = [np.ones((rows, 1))]
    for lag in range(1, p + 1):
        cols.append(values[p - lag : t_total - lag])
    if exog is not None:
        cols.append(exog[p:])
    return np.hstack(cols), values[p:]


def _check_length(values, p, n_exog):
    t_total, k = values.shape
    required = k * p + p + 5 + n_exog
    if not t_total > required:
        raise ValueError(
            f"series too short for p={p}: need more than {required} observations, "
            f"got {t_total}"
        )


def _criteria(sigma, t_eff, n_params):
    sign, logdet = np.linalg.slogdet(sigma)
    ld = logdet if sign > 0 else -np.inf
    aic = ld + 2.0 * n_params / t_eff
    bic = ld + n_params * np.log(t_eff) / t_eff
    hq = ld + 2.0 * n_params * np.log(np.log(t_eff)) / t_eff
    return float(aic), float(bic), float(hq)


def fit_var(series, p, exog=None):
    """Per-equation least squares fit of a VAR(p), optional exogenous terms.

    Information criteria are computed from log det of the residual
    covariance plus the usual penalty in the total parameter count, all on
    the effective sample of T - p observations.
    """
    values, names = _coerce_series(series)
    if p < 1:
        raise ValueError("lag order must be at least 1")
    if exog is not None:
        exog = np.asarray(exog, dtype=float)
        if exog.ndim == 1:
            exog = exog[:, None]
        if exog.shape[0] != values.shape[0]:
            raise ValueError("exog must have one row per observation")
    n_exog = 0 if exog is None else exog.shape[1]
    _check_length(values, p, n_exog)
    x, y = _lag_design(values, p, exog)
    k = values.shape[1]
    t_eff = y.shape[0]

    coef_mat, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef_mat
    sigma = resid.T @ resid / t_eff

    intercept = coef_mat[0]
    lag_coefs = np.empty((p, k, k))
    for lag in range(p):
        # design block for lag j holds regressor y_{t-j-1}; transpose maps
        # (regressor, equation) to (equation, regressor)
        lag_coefs[lag] = coef_mat[1 + lag * k : 1 + (lag + 1) * k].T
    exog_coefs = coef_mat[1 + p * k :].T if n_exog else None
    exog_se = None
    if n_exog:
        # classical per-equation SEs for the exogenous block: the dummy
        # mechanism's significance is how a planted event is detected
        xtx_inv = np.linalg.inv(x.T @ x)
        resid_var = np.diag(sigma) * t_eff / max(t_eff - x.shape[1], 1)
        exog_diag = np.diag(xtx_inv)[1 + p * k :]
        exog_se = np.sqrt(np.outer(resid_var, exog_diag))

    n_params = k * (1 + k * p + n_exog)
    aic, bic, hq = _criteria(sigma, t_eff, n_params)
    return VarModel(
        names=names,
        p=p,
        intercept=intercept,
        coefs=lag_coefs,
        sigma=0.5 * (sigma + sigma.T),
        aic=aic,
        bic=bic,
        hq=hq,
        nobs=t_eff,
        exog_coefs=exog_coefs,
        exog_se=exog_se,
        resid=resid,
    )


def select_lag(series, p_max, criterion="aic", exog=None):
    """Smallest lag order minimizing the criterion over p = 1..p_max.

    Every candidate is fit on the common sample that drops the first p_max
    rows, so criterion values are comparable; ties break to the smaller p.
    """
    values, _ = _coerce_series(series)
    if criterion.lower() not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    best_p, best_value = None, np.inf
    for p in range(1, p_max + 1):
        trimmed = values[p_max - p :]
        trimmed_exog = None if exog is None else np.asarray(exog, dtype=float)[p_max - p :]
        model = fit_var(trimmed, p, exog=trimmed_exog)
        value = model.criterion(criterion)
        if value < best_value:
            best_p, best_value = p, value
    return best_p


@dataclass(frozen=True)
class StructuralId:
    """Recursive short-run identification: B0 lower-triangular, diag > 0.

    b0 lives in the ordering's coordinate system: row i and column j refer
    to ordered variable i and the structural shock of ordered variable j.
    """

    b0: np.ndarray
    ordering: tuple
    names: tuple


def _resolve_ordering(model, ordering):
    if ordering is None:
        return tuple(range(model.k))
    indices = []
    for item in ordering:
        if isinstance(item, str):
            if item not in model.names:
                raise ValueError(f"unknown variable {item!r}; have {model.names}")
            indices.append(model.names.index(item))
        else:
            indices.append(int(item))
    if sorted(indices) != list(range(model.k)):
        raise ValueError(f"ordering {ordering!r} is not a permutation of all variables")
    return tuple(indices)


def identify_short_run(model, ordering=None):
    """Triangular factorization of the residual covariance under an ordering.

    The default ordering is the model's own variable order; the convention
    throughout the toolkit places the demand-shocked quantity (exports)
    first, since supply is predetermined within the period.
    """
    perm = _resolve_ordering(model, ordering)
    sigma = model.sigma[np.ix_(perm, perm)]
    smallest = float(np.linalg.eigvalsh(sigma).min())
    if smallest <= 0.0:
        raise RankError(
            f"residual covariance is not positive definite: "
            f"smallest eigenvalue {smallest:.6e}"
        )
    b0 = np.linalg.cholesky(sigma)
    return StructuralId(
        b0=b0,
        ordering=perm,
        names=tuple(model.names[i] for i in perm),
    )


@dataclass(frozen=True)
class Irf:
    """values[h, i, j]: response of ordered variable i to a one-standard-
    deviation shock in ordered variable j's equation, h periods out."""

    values: np.ndarray
    names: tuple

    @property
    def horizons(self):
        return self.values.shape[0] - 1

    def to_frame(self):
        import pandas as pd

        rows = []
        for h in range(self.values.shape[0]):
            for i, variable in enumerate(self.names):
                for j, shock in enumerate(self.names):
                    rows.append((h, variable, shock, self.values[h, i, j]))
        return pd.DataFrame(rows, columns=["horizon", "variable", "shock", "value"])


@dataclass(frozen=True)
class Fevd:
    """values[s, i, j]: share of ordered variable i's (s+1)-step forecast
    error variance explained by ordered variable j's structural shock."""

    values: np.ndarray
    names: tuple

    def at_horizon(self, h):
        if not 1 <= h <= self.values.shape[0]:
            raise ValueError(f"horizon {h} outside 1..{self.values.shape[0]}")
        return self.values[h - 1]

    def to_frame(self):
        import pandas as pd

        rows = []
        for s in range(self.values.shape[0]):
            for i, variable in enumerate(self.names):
                for j, shock in enumerate(self.names):
                    rows.append((s + 1, variable, shock, self.values[s, i, j]))
        return pd.DataFrame(rows, columns=["horizon", "variable", "shock", "value"])


def _ma_matrices(model, perm, horizon):
    k, p = model.k, model.p
    coefs = np.array([model.coefs[j][np.ix_(perm, perm)] for j in range(p)])
    psi = np.zeros((horizon + 1, k, k))
    psi[0] = np.eye(k)
    for h in range(1, horizon + 1):
        acc = np.zeros((k, k))
        for j in range(1, min(h, p) + 1):
            acc += coefs[j - 1] @ psi[h - j]
        psi[h] = acc
    return psi


def irf(model, sid, horizon):
    """Structural impulse responses for horizons 0..horizon."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    psi = _ma_matrices(model, sid.ordering, horizon)
    values = psi @ sid.b0
    values[0] = sid.b0.copy()
    return Irf(values=values, names=sid.names)


def fevd(model, sid, horizon):
    """Forecast error variance shares for horizons 1..horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    responses = irf(model, sid, horizon - 1).values
    squared = responses**2
    cumulative = np.cumsum(squared, axis=0)
    totals = cumulative.sum(axis=2, keepdims=True)
    return Fevd(values=cumulative / totals, names=sid.names)


def event_response(impulse, shock_vector):
    """Responses to a specific structural shock realization.

    shock_vector gives the shock sizes in standard-deviation units, in the
    identification ordering; a trade disruption is a negative realization of
    the export-demand shock.  Returns an array of shape (horizons+1, k).
    """
    shock_vector = np.asarray(shock_vector, dtype=float)
    if shock_vector.shape != (len(impulse.names),):
        raise ValueError("shock_vector needs one entry per variable")
    return impulse.values @ shock_vector


def _univariate_scales(values, p):
    """Residual variance of a univariate AR(p) per variable, for the prior."""
    t_total, k = values.shape
    scales = np.empty(k)
    for j in range(k):
        cols = [np.ones((t_total - p, 1))]
        for lag in range(1, p + 1):
            cols.append(values[p - lag : t_total - lag, j : j + 1])
        x = np.hstack(cols)
        y = values[p:, j]
        coef, *_ = np.linalg.lstsq(x, y, rcond=None)
        resid = y - x @ coef
        scales[j] = resid @ resid / (t_total - p)
    if np.any(scales <= 0.0):
        bad = int(np.flatnonzero(scales <= 0.0)[0])
        raise ValueError(f"variable {bad} has zero residual scale; cannot set prior")
    return scales


def fit_var_shrunk(series, p, lam, exog=None):
    """Ridge VAR shrinking toward a random walk, Minnesota-style weights.

    Prior mean: own first lag 1, everything else 0.  Prior variance of the
    coefficient on variable j at lag l in equation i is (lam^2 / l^2) *
    (sigma_i^2 / sigma_j^2), with sigma from univariate autoregressions; the
    intercept and exogenous terms are unpenalized.  Large lam recovers the
    least-squares fit, small lam the prior mean.  A single tightness governs
    own and cross lags alike.
    """
    if lam <= 0.0:
        raise ValueError(f"tightness must be positive, got {lam!r}")
    values, names = _coerce_series(series)
    if p < 1:
        raise ValueError("lag order must be at least 1")
    if exog is not None:
        exog = np.asarray(exog, dtype=float)
        if exog.ndim == 1:
            exog = exog[:, None]
    n_exog = 0 if exog is None else exog.shape[1]
    _check_length(values, p, n_exog)
    x, y = _lag_design(values, p, exog)
    k = values.shape[1]
    t_eff = y.shape[0]
    scales = _univariate_scales(values, p)

    # Penalty diag entries: sigma_j^2 * l^2 / lam^2 on the (j, lag l) column;
    # the equation's own sigma_i^2 cancels out of the posterior mean.
    penalty = np.zeros(x.shape[1])
    for lag in range(1, p + 1):
        for j in range(k):
            penalty[1 + (lag - 1) * k + j] = scales[j] * lag**2 / lam**2
    xtx = x.T @ x
    coef_mat = np.empty((x.shape[1], k))
    for i in range(k):
        prior_mean = np.zeros(x.shape[1])
        prior_mean[1 + i] = 1.0
        lhs = xtx + np.diag(penalty)
        rhs = x.T @ y[:, i] + penalty * prior_mean
        coef_mat[:, i] = np.linalg.solve(lhs, rhs)

    resid = y - x @ coef_mat
    sigma = resid.T @ resid / t_eff
    intercept = coef_mat[0]
    lag_coefs = np.empty((p, k, k))
    for lag in range(p):
        lag_coefs[lag] = coef_mat[1 + lag * k : 1 + (lag + 1) * k].T
    exog_coefs = coef_mat[1 + p * k :].T if n_exog else None
    n_params = k * (1 + k * p + n_exog)
    aic, bic, hq = _criteria(sigma, t_eff, n_params)
    return VarModel(
        names=names,
        p=p,
        intercept=intercept,
        coefs=lag_coefs,
        sigma=0.5 * (sigma + sigma.T),
        aic=aic,
        bic=bic,
        hq=hq,
        nobs=t_eff,
        exog_coefs=exog_coefs,
        shrinkage=float(lam),
        resid=resid,
    )
