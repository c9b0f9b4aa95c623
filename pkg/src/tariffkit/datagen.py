"""Synthetic data generators with planted ground truth.

Both generators draw from ``numpy.random.default_rng`` seeded through named
substreams, so every component of a draw is reproducible in isolation.  The
stream-splitting rule: substream ``c`` of seed ``s`` is
``default_rng(SeedSequence(s, spawn_key=(c,)))`` with the component ids in
``STREAM_IDS``.  Within a substream the draw order is documented per
generator: state effects in state order, year effects in year order, noise
row-major over (state, year), exposure in state order, VAR innovations
row-major over (period, variable).  Seeds reproduce draws on any platform
with the same numpy bit generator (PCG64).

Panels carry their generating spec as ground truth so estimators can be
scored against the planted parameters.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from . import _kernels
from .errors import StationarityError

__all__ = [
    "STREAM_IDS",
    "PanelSpec",
    "StatePanel",
    "VarSpec",
    "TimeSeriesPanel",
    "generate_did_panel",
    "attach_exposure_instrument",
    "generate_var_series",
    "resimulate",
]

STREAM_IDS = {
    "state_effects": 0,
    "year_effects": 1,
    "noise": 2,
    "exposure": 3,
    "instrument": 4,
    "var_innovations": 5,
}


def stream(seed, component):
    """Named substream of a seed; see the module docstring for the rule."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(STREAM_IDS[component],))
    )


# ===================================================================
# Difference-in-differences panels
# ===================================================================


@dataclass(frozen=True)
class PanelSpec:
    """State-by-year panel DGP with a treatment intensity interaction.

    outcome = alpha + state effect + year effect
              + common_post_shift * 1[year >= treatment_year]
              + beta_true * 1[year >= treatment_year] * exposure + noise

    ``exposure`` is "uniform" (continuous intensity drawn once per state from
    ``exposure_range``), ``("binary", n_treated)`` (the first n_treated
    states get exposure 1, the rest 0), or an explicit tuple of per-state
    values.  ``common_post_shift`` moves treated and control alike after the
    treatment year and is therefore absorbed by year effects in estimation.
    """

    n_states: int = 40
    start_year: int = 2014
    end_year: int = 2019
    treatment_year: int = 2018
    beta_true: float = -1.6
    alpha: float = 10.0
    sigma_state: float = 0.8
    sigma_year: float = 0.3
    sigma_noise: float = 0.4
    common_post_shift: float = 0.0
    exposure: object = "uniform"
    exposure_range: tuple = (0.05, 0.6)
    seed: int = 20180706
    outcome_name: str = "outcome"

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError("n_states must be at least 2")
        if self.end_year < self.start_year:
            raise ValueError("end_year must not precede start_year")
        if not self.start_year < self.treatment_year <= self.end_year:
            raise ValueError(
                "treatment_year must leave at least one pre and one post year"
            )
        for name in ("sigma_state", "sigma_year", "sigma_noise"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if isinstance(self.exposure, str):
            if self.exposure != "uniform":
                raise ValueError(f"unknown exposure kind {self.exposure!r}")
            lo, hi = self.exposure_range
            if not 0.0 <= lo < hi:
                raise ValueError(f"bad exposure_range {self.exposure_range!r}")
        elif isinstance(self.exposure, tuple) and len(self.exposure) == 2 and self.exposure[0] == "binary":
            n_treated = self.exposure[1]
            if not 0 < n_treated < self.n_states:
                raise ValueError("binary exposure needs 0 < n_treated < n_states")
        else:
            values = np.asarray(self.exposure, dtype=float)
            if values.shape != (self.n_states,):
                raise ValueError("explicit exposure needs one value per state")

    @property
    def years(self):
        return tuple(range(self.start_year, self.end_year + 1))

    @property
    def n_years(self):
        return self.end_year - self.start_year + 1


@dataclass(frozen=True)
class StatePanel:
    """Balanced long-format panel: one row per (state, year)."""

    state: np.ndarray
    year: np.ndarray
    outcome: np.ndarray
    exposure: np.ndarray
    extra: dict = field(default_factory=dict)
    ground_truth: PanelSpec | None = None
    outcome_name: str = "outcome"

    def __post_init__(self):
        n = len(self.state)
        for name in ("year", "outcome", "exposure"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has mismatched length")
        for name, col in self.extra.items():
            if len(col) != n:
                raise ValueError(f"extra column {name} has mismatched length")
        states = np.unique(self.state)
        years = np.unique(self.year)
        if len(states) * len(years) != n:
            raise ValueError("panel is not balanced")

    @property
    def n_states(self):
        return len(np.unique(self.state))

    @property
    def years(self):
        return np.unique(self.year)

    def to_frame(self):
        data = {
            "state": self.state,
            "year": self.year,
            self.outcome_name: self.outcome,
            "exposure": self.exposure,
        }
        data.update(self.extra)
        return pd.DataFrame(data)


def _exposure_values(spec):
    if isinstance(spec.exposure, str):
        lo, hi = spec.exposure_range
        rng = stream(spec.seed, "exposure")
        return rng.uniform(lo, hi, size=spec.n_states)
    if isinstance(spec.exposure, tuple) and len(spec.exposure) == 2 and spec.exposure[0] == "binary":
        values = np.zeros(spec.n_states)
        values[: spec.exposure[1]] = 1.0
        return values
    return np.asarray(spec.exposure, dtype=float)


def generate_did_panel(spec, seed=None):
    """Draw one panel from ``spec``; ``seed`` overrides the one it carries.

    Rows are ordered state-major (all years of state 0, then state 1, ...),
    which is also the noise draw order.
    """
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    n, t = spec.n_states, spec.n_years
    state_eff = stream(spec.seed, "state_effects").normal(0.0, spec.sigma_state, n)
    year_eff = stream(spec.seed, "year_effects").normal(0.0, spec.sigma_year, t)
    noise = stream(spec.seed, "noise").normal(0.0, spec.sigma_noise, (n, t))
    exposure = _exposure_values(spec)

    years = np.asarray(spec.years)
    post = (years >= spec.treatment_year).astype(float)
    outcome = (
        spec.alpha
        + state_eff[:, None]
        + year_eff[None, :]
        + spec.common_post_shift * post[None, :]
        + spec.beta_true * post[None, :] * exposure[:, None]
        + noise
    )
    state_col = np.repeat(np.arange(n), t)
    year_col = np.tile(years, n)
    return StatePanel(
        state=state_col,
        year=year_col,
        outcome=outcome.ravel(),
        exposure=np.repeat(exposure, t),
        ground_truth=spec,
        outcome_name=spec.outcome_name,
    )


def attach_exposure_instrument(panel, relevance, seed=None):
    """Add an instrument for exposure with a chosen first-stage strength.

    The instrument is exposure plus independent noise scaled so the
    population first-stage R-squared equals ``relevance``; it is drawn from
    its own substream and is therefore independent of the outcome noise.
    Returns a new panel with an ``instrument`` column.
    """
    if not 0.0 < relevance <= 1.0:
        raise ValueError(f"relevance must lie in (0, 1], got {relevance!r}")
    if seed is None:
        if panel.ground_truth is None:
            raise ValueError("panel has no ground truth; pass a seed")
        seed = panel.ground_truth.seed
    states, first_rows = np.unique(panel.state, return_index=True)
    exposure = panel.exposure[first_rows]
    var_x = exposure.var()
    noise_sd = np.sqrt(var_x * (1.0 - relevance) / relevance) if relevance < 1.0 else 0.0
    z = exposure + stream(seed, "instrument").normal(0.0, 1.0, len(states)) * noise_sd
    per_state = dict(zip(states, z))
    column = np.array([per_state[s] for s in panel.state])
    extra = dict(panel.extra)
    extra["instrument"] = column
    return replace(panel, extra=extra)


# ===================================================================
# Vector autoregression series
# ===================================================================


@dataclass(frozen=True)
class VarSpec:
    """VAR(p) DGP with unit-variance structural shocks and impact matrix b0.

    y_t = intercept + sum_j a_matrices[j] y_{t-j} + b0 eps_t,
    eps_t ~ N(0, I_k).

    ``shock_date`` (a sample index) optionally overrides eps at one period
    with ``shock_vector`` (in standard deviation units), planting a narrative
    event; ``dummy_dates`` mark sample indices for an exogenous indicator
    column carried alongside the data.  A burn-in is simulated and discarded
    so the sample starts near the stationary distribution.
    """

    a_matrices: tuple
    b0: tuple
    intercept: tuple = None
    names: tuple = ("price", "exports", "inventory")
    t_obs: int = 60
    burn_in: int = 200
    seed: int = 1729
    shock_date: int | None = None
    shock_vector: tuple | None = None
    dummy_dates: tuple = ()

    def __post_init__(self):
        a = np.asarray(self.a_matrices, dtype=float)
        if a.ndim == 2:
            a = a[None, :, :]
        k = a.shape[1]
        if a.shape[1] != a.shape[2]:
            raise ValueError("lag matrices must be square")
        b0 = np.asarray(self.b0, dtype=float)
        if b0.shape != (k, k):
            raise ValueError(f"b0 must be {k}x{k}")
        if abs(np.linalg.det(b0)) < 1e-12:
            raise ValueError("b0 must be nonsingular")
        intercept = (
            np.zeros(k) if self.intercept is None else np.asarray(self.intercept, dtype=float)
        )
        if intercept.shape != (k,):
            raise ValueError(f"intercept must have length {k}")
        if len(self.names) != k:
            raise ValueError("one name per variable required")
        if self.t_obs < 1:
            raise ValueError("t_obs must be positive")
        if self.burn_in < a.shape[0]:
            raise ValueError("burn_in must cover at least p periods")
        if self.shock_date is not None:
            if not 0 <= self.shock_date < self.t_obs:
                raise ValueError("shock_date must lie inside the sample")
            sv = np.asarray(self.shock_vector, dtype=float)
            if sv.shape != (k,):
                raise ValueError("shock_vector must have one entry per variable")
        for d in self.dummy_dates:
            if not 0 <= d < self.t_obs:
                raise ValueError("dummy dates must lie inside the sample")
        radius = _spectral_radius(a)
        if radius >= 1.0:
            raise StationarityError(
                f"companion spectral radius {radius:.6f} is not below one"
            )
        object.__setattr__(self, "a_matrices", _as_nested_tuple(a))
        object.__setattr__(self, "b0", _as_nested_tuple(b0))
        object.__setattr__(self, "intercept", tuple(intercept))

    @property
    def k(self):
        return len(self.names)

    @property
    def p(self):
        return len(self.a_matrices)

    def arrays(self):
        return (
            np.asarray(self.a_matrices, dtype=float),
            np.asarray(self.intercept, dtype=float),
            np.asarray(self.b0, dtype=float),
        )


def _as_nested_tuple(arr):
    if arr.ndim == 1:
        return tuple(float(v) for v in arr)
    return tuple(_as_nested_tuple(sub) for sub in arr)


def _spectral_radius(a):
    p, k = a.shape[0], a.shape[1]
    companion = np.zeros((k * p, k * p))
    companion[:k, :] = a.transpose(1, 0, 2).reshape(k, k * p)
    if p > 1:
        companion[k:, :-k] = np.eye(k * (p - 1))
    return float(np.abs(np.linalg.eigvals(companion)).max())


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Simulated multivariate series with its recorded structural shocks."""

    values: np.ndarray
    shocks: np.ndarray
    presample: np.ndarray
    names: tuple
    dummy: np.ndarray | None = None
    spec: VarSpec | None = None

    def __post_init__(self):
        t, k = self.values.shape
        if self.shocks.shape != (t, k):
            raise ValueError("shocks must match the values' shape")
        if len(self.names) != k:
            raise ValueError("one name per variable required")
        if self.dummy is not None and len(self.dummy) != t:
            raise ValueError("dummy column length must match the sample")

    @property
    def t_obs(self):
        return self.values.shape[0]

    @property
    def k(self):
        return self.values.shape[1]

    def to_frame(self):
        data = {"t": np.arange(self.t_obs)}
        for j, name in enumerate(self.names):
            data[name] = self.values[:, j]
        if self.dummy is not None:
            data["dummy"] = self.dummy
        return pd.DataFrame(data)


def generate_var_series(spec, seed=None):
    """Simulate the VAR, discard the burn-in, record the sample shocks."""
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    a, intercept, b0 = spec.arrays()
    k, p = spec.k, spec.p
    total = spec.burn_in + spec.t_obs
    eps = stream(spec.seed, "var_innovations").standard_normal((total, k))
    if spec.shock_date is not None:
        eps[spec.burn_in + spec.shock_date, :] = np.asarray(spec.shock_vector, dtype=float)
    y = _kernels.simulate_var(a, intercept, b0, eps, np.zeros((p, k)))
    dummy = None
    if spec.dummy_dates:
        dummy = np.zeros(spec.t_obs)
        dummy[list(spec.dummy_dates)] = 1.0
    return TimeSeriesPanel(
        values=y[spec.burn_in :],
        shocks=eps[spec.burn_in :],
        presample=y[spec.burn_in - p : spec.burn_in].copy(),
        names=spec.names,
        dummy=dummy,
        spec=spec,
    )


def resimulate(panel):
    """Rebuild the sample from the recorded shocks and presample exactly.

    Runs the same recursion as the generator seeded with the stored
    presample rows, so the output reproduces ``panel.values`` to the bit.
    """
    if panel.spec is None:
        raise ValueError("panel carries no generating spec")
    a, intercept, b0 = panel.spec.arrays()
    p = panel.spec.p
    eps = np.vstack([np.zeros((p, panel.k)), panel.shocks])
    y = _kernels.simulate_var(a, intercept, b0, eps, panel.presample)
    return y[p:]
