"""Season-by-season dynamics: planting, expectations, storage, clearing.

Each season runs through the same loop.  Farmers form an expected price by
adaptive expectations (weight ``expectation_lambda`` on last season's realized
price; 1.0 is naive), choose acreage from the first-order condition of a
quadratic cost function, and the harvest plus carried-over inventory meets the
static demand system of :mod:`tariffkit.market` at a market-clearing price.
Supply within the season is predetermined; the tariff can therefore land
mid-season with the crop already planted, which is what the default shock
paths do.

Inventory follows an administered price floor: when the clearing price would
fall below ``price_floor_frac * p0``, sales are rationed at the floor and the
unsold residual accumulates as stocks, which re-enter next season's supply
net of a storage loss ``storage_loss``.  A working stock equal to the initial
inventory is held back every season so that the no-shock path is an exact
fixed point with positive inventories.

``calibrate_to_targets`` wraps the loop in a deterministic grid search that
picks demand/supply elasticities, the cost slope and the expectation weight
to match observed-path targets (price drop, acreage drop, export collapse).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .market import ElasticityParams, MarketBaseline, clear_fixed_supply

__all__ = [
    "DynamicsParams",
    "InitialState",
    "ShockPath",
    "SeasonRecord",
    "SimulationPath",
    "CalibrationTargets",
    "CalibrationResult",
    "optimal_acreage",
    "export_demand_loglin",
    "simulate_path",
    "steady_scenario",
    "calibrate_to_targets",
]


@dataclass(frozen=True)
class DynamicsParams:
    """Farmer and storage parameters for the seasonal loop.

    discount is the farmer's discount factor, retained from the planting
    problem the first-order condition is derived from; the myopic acreage
    rule itself uses only yield and the cost coefficients.  An optional
    expected per-unit subsidy can augment the expected price at planting
    (off by default: payments are treated as non-distorting transfers).
    """

    discount: float
    yield_per_acre: float
    cost_c1: float
    cost_c2: float
    expectation_lambda: float
    storage_loss: float
    price_floor_frac: float = 0.8
    expected_subsidy: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount!r}")
        if self.yield_per_acre <= 0.0:
            raise ValueError(f"yield_per_acre must be > 0, got {self.yield_per_acre!r}")
        if self.cost_c2 <= 0.0:
            raise ValueError(f"cost_c2 must be > 0, got {self.cost_c2!r}")
        if self.cost_c1 < 0.0:
            raise ValueError(f"cost_c1 must be >= 0, got {self.cost_c1!r}")
        if not 0.0 <= self.expectation_lambda <= 1.0:
            raise ValueError(
                f"expectation_lambda must lie in [0, 1], got {self.expectation_lambda!r}"
            )
        if not 0.0 <= self.storage_loss < 1.0:
            raise ValueError(f"storage_loss must lie in [0, 1), got {self.storage_loss!r}")
        if not 0.0 <= self.price_floor_frac < 1.0:
            raise ValueError(
                f"price_floor_frac must lie in [0, 1), got {self.price_floor_frac!r}"
            )
        if self.expected_subsidy < 0.0:
            raise ValueError(f"expected_subsidy must be >= 0, got {self.expected_subsidy!r}")


@dataclass(frozen=True)
class InitialState:
    """Entering state of season 0: last expectation and carried stocks."""

    expected_price: float
    inventory: float

    def __post_init__(self):
        if self.expected_price <= 0.0:
            raise ValueError("expected_price must be > 0")
        if self.inventory < 0.0:
            raise ValueError("inventory must be >= 0")


@dataclass(frozen=True)
class ShockPath:
    """Per-season shocks: tariff rate, export demand shift, yield shock.

    ``export_demand`` is the log shift of the tariffed segment's demand (the
    epsilon in the log-linear export demand equation); ``yield_shock`` is a
    fractional deviation of realized yield.
    """

    tau: np.ndarray
    export_demand: np.ndarray
    yield_shock: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        object.__setattr__(self, "export_demand", np.asarray(self.export_demand, dtype=float))
        object.__setattr__(self, "yield_shock", np.asarray(self.yield_shock, dtype=float))
        n = len(self.tau)
        if len(self.export_demand) != n or len(self.yield_shock) != n:
            raise ValueError("shock arrays must share one length")
        if (self.tau < 0.0).any():
            raise ValueError("tariff path must be >= 0")
        if (self.yield_shock <= -1.0).any():
            raise ValueError("yield shocks must exceed -1")

    def __len__(self):
        return len(self.tau)

    @classmethod
    def none(cls, n_seasons):
        z = np.zeros(n_seasons)
        return cls(z, z.copy(), z.copy())

    @classmethod
    def tariff_from(cls, n_seasons, tau, start=1, export_demand=0.0):
        """Permanent tariff (and export demand shift) from a given season on."""
        taus = np.zeros(n_seasons)
        eps = np.zeros(n_seasons)
        taus[start:] = tau
        eps[start:] = export_demand
        return cls(taus, eps, np.zeros(n_seasons))


@dataclass(frozen=True)
class SeasonRecord:
    """Everything realized within one season."""

    t: int
    expected_price: float
    realized_price: float
    acreage: float
    production: float
    domestic_use: float
    exports_china: float
    exports_row: float
    quantity_sold: float
    inventory_end: float
    floor_binding: bool
    market_income: float
    subsidy_income: float


@dataclass(frozen=True)
class SimulationPath:
    """A simulated sequence of seasons plus the inputs that produced it."""

    records: tuple
    baseline: MarketBaseline
    params: DynamicsParams
    shocks: ShockPath

    def __len__(self):
        return len(self.records)

    def __getitem__(self, t):
        return self.records[t]

    def prices(self):
        return np.array([r.realized_price for r in self.records])

    def acreages(self):
        return np.array([r.acreage for r in self.records])

    def inventories(self):
        return np.array([r.inventory_end for r in self.records])


def optimal_acreage(expected_price, params):
    """Acreage from the planting first-order condition, clamped at zero.

    Marginal revenue per acre ``expected_price * yield`` equals marginal cost
    ``c1 + c2 * A`` at the optimum, so A = (E[P] yield - c1) / c2.
    """
    if expected_price < 0.0:
        raise ValueError(f"expected_price must be >= 0, got {expected_price!r}")
    margin = (expected_price + params.expected_subsidy) * params.yield_per_acre
    return max(0.0, (margin - params.cost_c1) / params.cost_c2)


def export_demand_loglin(p_hat, tau, eps_x, eta_d):
    """Log change in tariffed-segment exports given a log price change.

    Returns ``eps_x - eta_d * (p_hat + ln(1 + tau))``: the importer responds
    to the tariff-inclusive price, so even at an unchanged producer price a
    tariff cuts exports by eta_d times ln(1 + tau).
    """
    if tau <= -1.0:
        raise ValueError(f"tau must exceed -1, got {tau!r}")
    if eta_d < 0.0:
        raise ValueError(f"eta_d must be >= 0, got {eta_d!r}")
    return eps_x - eta_d * (p_hat + math.log1p(tau))


def simulate_path(baseline, elas, params, shocks, init=None, subsidy_rates=None):
    """Run the seasonal loop for ``len(shocks)`` seasons.

    Parameters
    ----------
    baseline : MarketBaseline
        Demand anchor; also defines the steady flow of sales.
    elas : ElasticityParams
        Demand elasticities (the supply elasticity is unused here: within a
        season supply is predetermined).
    params : DynamicsParams
    shocks : ShockPath
    init : InitialState, optional
        Defaults to the steady state implied by baseline and params
        (expected price p0, inventory chosen so stocks replace their own
        storage loss).
    subsidy_rates : array, optional
        Per-unit payment on production, one entry per season.

    Returns
    -------
    SimulationPath
        With zero shocks and a consistent baseline, every season reproduces
        season 0 (the loop is at a fixed point).  Mass balance holds exactly:
        production + carried inventory = sales + ending inventory + storage
        loss.
    """
    n = len(shocks)
    if n == 0:
        raise ValueError("shock path is empty")
    if subsidy_rates is None:
        subsidy_rates = np.zeros(n)
    subsidy_rates = np.asarray(subsidy_rates, dtype=float)
    if len(subsidy_rates) != n:
        raise ValueError("subsidy_rates length must match the shock path")
    if init is None:
        init = implied_initial_state(baseline, params)

    working_stock = init.inventory
    expected = init.expected_price
    inventory = init.inventory
    floor = params.price_floor_frac * baseline.p0
    records = []
    for t in range(n):
        acreage = optimal_acreage(expected, params)
        production = acreage * params.yield_per_acre * (1.0 + shocks.yield_shock[t])
        carried = (1.0 - params.storage_loss) * inventory
        marketable = production + carried - working_stock
        if marketable <= 0.0:
            raise SolverError(f"season {t}: no marketable supply ({marketable:.3f})")
        tau = float(shocks.tau[t])
        shift = math.exp(float(shocks.export_demand[t]))
        try:
            price, quantities = clear_fixed_supply(baseline, elas, tau, marketable, shift)
        except SolverError as err:
            raise SolverError(f"season {t}: {err}") from err
        floor_binding = price < floor
        if floor_binding:
            # Rationing: demand is served at the administered floor and the
            # unsold residual goes to stocks.
            price = floor
            x = floor / baseline.p0
            q = np.array([baseline.q_us, baseline.q_china, baseline.q_row])
            eta = np.array([elas.eta_d_us, elas.eta_d_china, elas.eta_d_row])
            wedge = np.array([1.0, 1.0 + tau, 1.0])
            scale = np.array([1.0, shift, 1.0])
            quantities = q * scale * (x * wedge) ** (-eta)
        sold = float(quantities.sum())
        inventory = working_stock + (marketable - sold)
        records.append(
            SeasonRecord(
                t=t,
                expected_price=expected,
                realized_price=price,
                acreage=acreage,
                production=production,
                domestic_use=float(quantities[0]),
                exports_china=float(quantities[1]),
                exports_row=float(quantities[2]),
                quantity_sold=sold,
                inventory_end=inventory,
                floor_binding=floor_binding,
                market_income=price * sold,
                subsidy_income=float(subsidy_rates[t]) * production,
            )
        )
        expected = (
            params.expectation_lambda * price
            + (1.0 - params.expectation_lambda) * expected
        )
    return SimulationPath(
        records=tuple(records), baseline=baseline, params=params, shocks=shocks
    )


def implied_initial_state(baseline, params):
    """Steady entering state: expectation at p0, stocks sized to the anchor.

    The baseline flow of sales equals production minus the storage loss on
    the working stock, so the implied inventory solves
    ``A0 * yield - delta * inv = baseline.supply`` with A0 the acreage chosen
    at an expected price of p0.
    """
    acreage = optimal_acreage(baseline.p0, params)
    production = acreage * params.yield_per_acre
    slack = production - baseline.supply
    if params.storage_loss > 0.0:
        inventory = slack / params.storage_loss
    else:
        inventory = 0.0 if abs(slack) < 1e-9 * baseline.supply else None
    if inventory is None or inventory < 0.0:
        raise ValueError(
            "baseline sales are inconsistent with steady production; cannot "
            "imply a nonnegative working stock"
        )
    return InitialState(expected_price=baseline.p0, inventory=inventory)


# ===================================================================
# Calibration
# ===================================================================

#: Demand shares of the three segments used by the default scenario builder
#: (domestic use, tariffed export segment, rest of world).
DEFAULT_SHARES = (0.478577, 0.296262, 0.225161)


@dataclass(frozen=True)
class ScenarioSpec:
    """A fully wired dynamic tariff scenario, ready to simulate."""

    baseline: MarketBaseline
    elasticities: ElasticityParams
    params: DynamicsParams
    shocks: ShockPath
    init: InitialState


def steady_scenario(
    eta_d_china,
    eta_s,
    cost_c2,
    expectation_lambda,
    *,
    p0=9.30,
    eta_d_us=1.3,
    eta_d_row=2.0,
    shares=DEFAULT_SHARES,
    discount=0.96,
    yield_per_acre=49.0,
    cost_c1=141.43,
    storage_loss=0.05,
    price_floor_frac=0.905,
    stock_to_production=0.099773,
    tau=0.25,
    export_demand_shift=-1.11,
    n_seasons=5,
    shock_start=1,
):
    """Build a self-consistent tariff scenario around a steady baseline.

    Acreage at an expected price of p0 pins production; stocks are sized by
    ``stock_to_production`` and the baseline demand segments absorb exactly
    the steady flow of sales, so the pre-shock path is a fixed point.  The
    tariff and the export demand collapse hit at ``shock_start`` with that
    season's crop already planted.
    """
    params = DynamicsParams(
        discount=discount,
        yield_per_acre=yield_per_acre,
        cost_c1=cost_c1,
        cost_c2=cost_c2,
        expectation_lambda=expectation_lambda,
        storage_loss=storage_loss,
        price_floor_frac=price_floor_frac,
    )
    acreage = optimal_acreage(p0, params)
    production = acreage * yield_per_acre
    inventory = stock_to_production * production
    sales = production - storage_loss * inventory
    q = np.asarray(shares, dtype=float) * sales
    baseline = MarketBaseline(p0=p0, q_us=q[0], q_china=q[1], q_row=q[2])
    elas = ElasticityParams(
        eta_d_us=eta_d_us, eta_d_china=eta_d_china, eta_d_row=eta_d_row, eta_s=eta_s
    )
    shocks = ShockPath.tariff_from(
        n_seasons, tau, start=shock_start, export_demand=export_demand_shift
    )
    init = InitialState(expected_price=p0, inventory=inventory)
    return ScenarioSpec(
        baseline=baseline, elasticities=elas, params=params, shocks=shocks, init=init
    )


@dataclass(frozen=True)
class CalibrationTargets:
    """Observed-path bands: (low, high) fractions, all negative for drops."""

    price_drop: tuple = (-0.10, -0.08)
    acreage_drop: tuple = (-0.15, -0.13)
    export_drop: tuple = (-0.75, -0.70)

    def midpoints(self):
        return {
            name: 0.5 * (lo + hi)
            for name, (lo, hi) in (
                ("price_drop", self.price_drop),
                ("acreage_drop", self.acreage_drop),
                ("export_drop", self.export_drop),
            )
        }

    def contains(self, achieved):
        out = {}
        for name, (lo, hi) in (
            ("price_drop", self.price_drop),
            ("acreage_drop", self.acreage_drop),
            ("export_drop", self.export_drop),
        ):
            out[name] = lo <= achieved[name] <= hi
        return out


@dataclass(frozen=True)
class CalibrationResult:
    params: DynamicsParams
    elasticities: ElasticityParams
    achieved: dict
    in_bands: dict
    all_in_bands: bool
    loss: float
    grid_point: dict


#: Default calibration grid.  The first value of each axis is the reference
#: point; ties in the objective resolve to the earliest grid point visited.
DEFAULT_GRID = {
    "eta_d_china": (1.5, 1.3, 1.7),
    "eta_s": (0.45, 0.35, 0.55),
    "cost_c2": (3.4919, 3.1, 3.9),
    "expectation_lambda": (1.0, 0.75, 0.5),
}


def path_summary(path):
    """Relative changes the calibration targets refer to.

    Price and exports compare the first shocked season to season 0; acreage
    compares the first post-shock planting (season 2 under the default
    timing, where the shock lands after season 1 is planted).
    """
    base = path[0]
    shocks = path.shocks
    hit = np.flatnonzero(
        (shocks.tau != 0.0) | (shocks.export_demand != 0.0) | (shocks.yield_shock != 0.0)
    )
    t_shock = int(hit[0]) if hit.size else min(1, len(path) - 1)
    shocked = path[t_shock]
    t_next = min(t_shock + 1, len(path) - 1)
    return {
        "price_drop": shocked.realized_price / base.realized_price - 1.0,
        "acreage_drop": path[t_next].acreage / base.acreage - 1.0,
        "export_drop": shocked.exports_china / base.exports_china - 1.0,
        "inventory_ratio": shocked.inventory_end / max(base.inventory_end, 1e-12),
    }


def calibrate_to_targets(targets, grid=None, scenario_builder=steady_scenario):
    """Deterministic grid search for the dynamic scenario parameters.

    Simulates every grid point of (eta_d_china, eta_s, cost_c2,
    expectation_lambda) through ``scenario_builder`` and minimizes the sum of
    squared relative distances between achieved path statistics and target
    band midpoints.  Ties resolve to the first point visited (row-major over
    the grid axes as given).  The best point is returned even when it misses
    a band; ``all_in_bands`` flags that case rather than raising.
    """
    if grid is None:
        grid = DEFAULT_GRID
    mids = targets.midpoints()
    best = None
    for eta_c in grid["eta_d_china"]:
        for eta_s in grid["eta_s"]:
            for c2 in grid["cost_c2"]:
                for lam in grid["expectation_lambda"]:
                    spec = scenario_builder(eta_c, eta_s, c2, lam)
                    path = simulate_path(
                        spec.baseline,
                        spec.elasticities,
                        spec.params,
                        spec.shocks,
                        init=spec.init,
                    )
                    achieved = path_summary(path)
                    loss = sum(
                        ((achieved[k] - mids[k]) / mids[k]) ** 2 for k in mids
                    )
                    # Strict improvement beyond float noise, so that points
                    # differing only in scale (which cannot move the relative
                    # targets) tie and the earliest one wins.
                    if best is None or loss < best[0] - 1e-9 * (1.0 + best[0]):
                        point = {
                            "eta_d_china": eta_c,
                            "eta_s": eta_s,
                            "cost_c2": c2,
                            "expectation_lambda": lam,
                        }
                        best = (loss, point, spec, achieved)
    loss, point, spec, achieved = best
    in_bands = targets.contains(achieved)
    return CalibrationResult(
        params=spec.params,
        elasticities=spec.elasticities,
        achieved=achieved,
        in_bands=in_bands,
        all_in_bands=all(in_bands.values()),
        loss=loss,
        grid_point=point,
    )
