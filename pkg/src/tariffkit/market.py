"""Static partial equilibrium for a globally traded commodity under a tariff.

The world market is modelled with isoelastic demand segments anchored at a
common baseline price: domestic use, the tariff-imposing importer (china) and
the rest of the world.  Producers supply along an isoelastic curve anchored at
the same baseline.  An ad valorem tariff tau drives a wedge between the
producer price P and the price the tariffing importer pays, P * (1 + tau);
the other segments trade at the producer price.

The clearing price comes from a bisection on the excess supply function
(bracket P/p0 in [0.01, 100], width 1e-12 relative) with one Newton polish,
so the reported excess demand is far below the 1e-10 relative tolerance the
rest of the toolkit assumes.

``solve_two_exporter`` extends the same demand system to two exporting
origins where only one pays the tariff in the importing destination; buyers
source from the cheapest effective origin, splitting proportionally to
exporter supply at price parity.  That is the mechanism behind trade
diversion: the tariffed exporter's price falls, the competitor's rises.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from . import _kernels
from .errors import SolverError

__all__ = [
    "ElasticityParams",
    "MarketBaseline",
    "TariffScenario",
    "EquilibriumSolution",
    "TwoExporterMarket",
    "TwoExporterSolution",
    "NO_LOSS",
    "solve_equilibrium",
    "clear_fixed_supply",
    "incidence_approx",
    "solve_two_exporter",
    "apply_subsidy",
    "compensation_ratio",
]

#: Excess demand at the returned price must be below this, relative to
#: baseline supply.
CLEARING_TOL = 1e-10


def _require_finite_nonneg(name, value):
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class ElasticityParams:
    """Demand elasticities per segment plus the supply elasticity.

    All elasticities are magnitudes (>= 0); demand curves slope down by
    construction.  At least one of the four must be positive, otherwise the
    clearing price is indeterminate.
    """

    eta_d_us: float
    eta_d_china: float
    eta_d_row: float
    eta_s: float

    def __post_init__(self):
        for name in ("eta_d_us", "eta_d_china", "eta_d_row", "eta_s"):
            _require_finite_nonneg(name, getattr(self, name))
        if self.eta_d_us + self.eta_d_china + self.eta_d_row + self.eta_s == 0.0:
            raise ValueError("all elasticities are zero; price is indeterminate")


@dataclass(frozen=True)
class MarketBaseline:
    """Pre-tariff anchor: price and quantity taken by each demand segment.

    Baseline supply is the sum of the segments, so the market clears at p0
    with no tariff by construction.
    """

    p0: float
    q_us: float
    q_china: float
    q_row: float

    def __post_init__(self):
        if not math.isfinite(self.p0) or self.p0 <= 0.0:
            raise ValueError(f"p0 must be finite and > 0, got {self.p0!r}")
        for name in ("q_us", "q_china", "q_row"):
            _require_finite_nonneg(name, getattr(self, name))
        if self.supply <= 0.0:
            raise ValueError("baseline quantities sum to zero")

    @property
    def supply(self):
        return self.q_us + self.q_china + self.q_row

    @property
    def export_share_china(self):
        return self.q_china / self.supply


@dataclass(frozen=True)
class TariffScenario:
    """Ad valorem tariff rate and an optional per-unit producer subsidy."""

    tau: float
    subsidy_rate: float = 0.0

    def __post_init__(self):
        _require_finite_nonneg("tau", self.tau)
        _require_finite_nonneg("subsidy_rate", self.subsidy_rate)


@dataclass(frozen=True)
class EquilibriumSolution:
    """Cleared market: producer price, wedge price, quantities, revenue."""

    p_producer: float
    p_china: float
    q_us: float
    q_china: float
    q_row: float
    total_supply: float
    producer_revenue: float
    subsidy_payment: float
    price_change_frac: float

    @property
    def market_revenue(self):
        """Revenue from sales alone, net of any subsidy payment."""
        return self.producer_revenue - self.subsidy_payment


class _NoLoss:
    """Sentinel returned by compensation_ratio when there is no revenue loss."""

    def __repr__(self):
        return "NO_LOSS"


NO_LOSS = _NoLoss()


def _segment_arrays(baseline, elas):
    q = np.array([baseline.q_us, baseline.q_china, baseline.q_row])
    eta = np.array([elas.eta_d_us, elas.eta_d_china, elas.eta_d_row])
    return q, eta


def _solve_relative_price(q, eta, wedge, scale, supply_q0, eta_s):
    x = _kernels.clearing_price(q, eta, wedge, scale, supply_q0, eta_s)
    if not math.isfinite(x) or x <= 0.0:
        lo, hi = _kernels.PRICE_BRACKET_LO, _kernels.PRICE_BRACKET_HI
        raise SolverError(
            "no clearing price in bracket "
            f"[{lo:g}, {hi:g}] x baseline price; demand and supply do not cross"
        )
    return x


def solve_equilibrium(baseline, elas, scenario):
    """Solve the single-origin world market under a tariff.

    Parameters
    ----------
    baseline : MarketBaseline
    elas : ElasticityParams
    scenario : TariffScenario

    Returns
    -------
    EquilibriumSolution
        Producer price, the tariff-inclusive price paid by the tariffed
        segment (computed as ``p_producer * (1 + tau)``), segment quantities
        and revenue.  Any subsidy in the scenario is applied on top of the
        market solution (it shifts income, not the clearing price).
    """
    q, eta = _segment_arrays(baseline, elas)
    wedge = np.array([1.0, 1.0 + scenario.tau, 1.0])
    scale = np.ones(3)
    if scenario.tau == 0.0:
        # The baseline anchoring makes x = 1 the exact root; skip the solver
        # so a no-tariff scenario reports a price change of exactly zero.
        x = 1.0
    else:
        x = _solve_relative_price(q, eta, wedge, scale, baseline.supply, elas.eta_s)

    p = x * baseline.p0
    quantities = q * scale * (x * wedge) ** (-eta)
    total = float(quantities.sum())
    residual = abs(baseline.supply * x**elas.eta_s - total) / baseline.supply
    if residual > CLEARING_TOL:
        raise SolverError(f"excess demand {residual:.3e} above tolerance {CLEARING_TOL:g}")

    solution = EquilibriumSolution(
        p_producer=p,
        p_china=p * (1.0 + scenario.tau),
        q_us=float(quantities[0]),
        q_china=float(quantities[1]),
        q_row=float(quantities[2]),
        total_supply=total,
        producer_revenue=p * total,
        subsidy_payment=0.0,
        price_change_frac=x - 1.0,
    )
    if scenario.subsidy_rate > 0.0:
        solution = apply_subsidy(solution, scenario.subsidy_rate)
    return solution


def clear_fixed_supply(baseline, elas, tau, available, china_demand_scale=1.0):
    """Clear a predetermined quantity against the three demand segments.

    This is the within-season problem of the dynamic model: the crop is
    already grown, so supply is perfectly inelastic at ``available``.  The
    china segment's demand can be shifted multiplicatively (an export demand
    shock).  Returns the producer price and the per-segment quantities.
    """
    if available <= 0.0:
        raise ValueError(f"available supply must be > 0, got {available!r}")
    q, eta = _segment_arrays(baseline, elas)
    wedge = np.array([1.0, 1.0 + tau, 1.0])
    scale = np.array([1.0, china_demand_scale, 1.0])
    x = _solve_relative_price(q, eta, wedge, scale, available, 0.0)
    quantities = q * scale * (x * wedge) ** (-eta)
    return x * baseline.p0, quantities


def incidence_approx(elas, tau, export_share):
    """First-order tariff incidence on the producer price.

    Collapses the demand side into a single effective export-demand
    elasticity ``eta_d_eff = export_share * eta_d_china`` (the tariffed
    segment's elasticity weighted by its share of baseline demand; the other
    segments are treated as price-insensitive at this order, and with
    export_share = 1 the expression reduces to the textbook two-country
    incidence formula).  Returns ``-eta_d_eff / (eta_s + eta_d_eff) * tau``,
    the fractional producer price change.
    """
    if not 0.0 <= export_share <= 1.0:
        raise ValueError(f"export_share must be in [0, 1], got {export_share!r}")
    if tau <= -1.0:
        raise ValueError(f"tau must exceed -1, got {tau!r}")
    eta_eff = export_share * elas.eta_d_china
    denom = elas.eta_s + eta_eff
    if denom <= 0.0:
        raise ValueError("eta_s + effective demand elasticity must be positive")
    return -eta_eff / denom * tau


@dataclass(frozen=True)
class TwoExporterMarket:
    """Two exporting origins, two destinations, common baseline price.

    Quantities are baseline shipments: each exporter's supply curve and each
    destination's demand curve is anchored at (p0, q).  Total baseline supply
    must equal total baseline demand.
    """

    p0: float
    q_supply_us: float
    q_supply_brazil: float
    eta_s_us: float
    eta_s_brazil: float
    q_demand_china: float
    q_demand_row: float
    eta_d_china: float
    eta_d_row: float

    def __post_init__(self):
        if not math.isfinite(self.p0) or self.p0 <= 0.0:
            raise ValueError(f"p0 must be finite and > 0, got {self.p0!r}")
        for name in (
            "q_supply_us",
            "q_supply_brazil",
            "eta_s_us",
            "eta_s_brazil",
            "q_demand_china",
            "q_demand_row",
            "eta_d_china",
            "eta_d_row",
        ):
            _require_finite_nonneg(name, getattr(self, name))
        supply = self.q_supply_us + self.q_supply_brazil
        demand = self.q_demand_china + self.q_demand_row
        if not math.isclose(supply, demand, rel_tol=1e-9):
            raise ValueError(
                f"baseline supply {supply!r} must equal baseline demand {demand!r}"
            )


@dataclass(frozen=True)
class TwoExporterSolution:
    """Per-origin prices and the 2x2 origin-by-destination flow matrix."""

    p_us: float
    p_brazil: float
    flow_us_china: float
    flow_us_row: float
    flow_brazil_china: float
    flow_brazil_row: float
    diversion_share: float

    @property
    def flows(self):
        return np.array(
            [
                [self.flow_us_china, self.flow_us_row],
                [self.flow_brazil_china, self.flow_brazil_row],
            ]
        )


def _iso(q0, p0, eta):
    return lambda p: q0 * (p / p0) ** eta


def _brentq(f, p0):
    lo = _kernels.PRICE_BRACKET_LO * p0
    hi = _kernels.PRICE_BRACKET_HI * p0
    if f(lo) * f(hi) > 0.0:
        raise SolverError(
            f"no clearing price in bracket [{lo:g}, {hi:g}]; demand exceeds "
            "supply everywhere or vice versa"
        )
    return optimize.brentq(f, lo, hi, xtol=1e-13 * p0, rtol=8.9e-16)


def solve_two_exporter(market, tau):
    """Solve the two-exporter market when the us origin is tariffed in china.

    China pays ``p_us * (1 + tau)`` on us-origin shipments and ``p_brazil``
    on brazil-origin ones; the rest of the world pays each origin's producer
    price.  Each destination sources from the cheapest effective origin and
    splits proportionally to exporter supply at exact parity.  The solver
    tries the three sourcing patterns that can clear with tau > 0 and returns
    the one whose implied preferences are internally consistent.

    ``diversion_share`` is the fraction of china's purchases sourced from
    brazil.
    """
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau!r}")
    p0 = market.p0
    s_us = _iso(market.q_supply_us, p0, market.eta_s_us)
    s_br = _iso(market.q_supply_brazil, p0, market.eta_s_brazil)
    d_cn = _iso(market.q_demand_china, p0, -market.eta_d_china)
    d_row = _iso(market.q_demand_row, p0, -market.eta_d_row)

    if tau == 0.0:
        # Single world price; both destinations split across origins in
        # proportion to supply.
        p = _brentq(lambda q: s_us(q) + s_br(q) - d_cn(q) - d_row(q), p0)
        share_br = s_br(p) / (s_us(p) + s_br(p))
        sol = TwoExporterSolution(
            p_us=p,
            p_brazil=p,
            flow_us_china=(1.0 - share_br) * d_cn(p),
            flow_us_row=(1.0 - share_br) * d_row(p),
            flow_brazil_china=share_br * d_cn(p),
            flow_brazil_row=share_br * d_row(p),
            diversion_share=share_br,
        )
        return _check_two_exporter(market, tau, sol)

    # Pattern 1: china splits across origins at parity p_brazil = p_us(1+tau),
    # the rest of the world buys only the cheaper us origin.
    w = 1.0 + tau
    p_us = _brentq(lambda q: s_us(q) + s_br(w * q) - d_row(q) - d_cn(w * q), p0)
    p_br = w * p_us
    div = s_br(p_br) / d_cn(p_br)
    if div <= 1.0:
        sol = TwoExporterSolution(
            p_us=p_us,
            p_brazil=p_br,
            flow_us_china=(1.0 - div) * d_cn(p_br),
            flow_us_row=d_row(p_us),
            flow_brazil_china=s_br(p_br),
            flow_brazil_row=0.0,
            diversion_share=div,
        )
        return _check_two_exporter(market, tau, sol)

    # Pattern 2: full diversion, the two origin markets decouple.
    p_us = _brentq(lambda q: s_us(q) - d_row(q), p0)
    p_br = _brentq(lambda q: s_br(q) - d_cn(q), p0)
    if p_us <= p_br <= w * p_us:
        sol = TwoExporterSolution(
            p_us=p_us,
            p_brazil=p_br,
            flow_us_china=0.0,
            flow_us_row=d_row(p_us),
            flow_brazil_china=d_cn(p_br),
            flow_brazil_row=0.0,
            diversion_share=1.0,
        )
        return _check_two_exporter(market, tau, sol)

    # Pattern 3: origins at parity for the rest of the world, which splits;
    # china buys only brazil (its us price carries the tariff on top).
    p = _brentq(lambda q: s_us(q) + s_br(q) - d_cn(q) - d_row(q), p0)
    frac_us = s_us(p) / d_row(p)
    if frac_us > 1.0:
        raise SolverError("no internally consistent sourcing pattern found")
    sol = TwoExporterSolution(
        p_us=p,
        p_brazil=p,
        flow_us_china=0.0,
        flow_us_row=s_us(p),
        flow_brazil_china=d_cn(p),
        flow_brazil_row=(1.0 - frac_us) * d_row(p),
        diversion_share=1.0,
    )
    return _check_two_exporter(market, tau, sol)


def _check_two_exporter(market, tau, sol):
    """Verify nonnegative flows and per-destination clearing to 1e-10."""
    flows = sol.flows
    if (flows < -1e-12).any():
        raise SolverError(f"negative flow in solution: {flows!r}")
    p0 = market.p0
    scale = market.q_demand_china + market.q_demand_row
    eff_cn = min(sol.p_us * (1.0 + tau), sol.p_brazil)
    eff_row = min(sol.p_us, sol.p_brazil)
    demand_cn = market.q_demand_china * (eff_cn / p0) ** (-market.eta_d_china)
    demand_row = market.q_demand_row * (eff_row / p0) ** (-market.eta_d_row)
    resid = max(
        abs(flows[:, 0].sum() - demand_cn),
        abs(flows[:, 1].sum() - demand_row),
    )
    if resid / scale > CLEARING_TOL:
        raise SolverError(f"destination clearing residual {resid / scale:.3e}")
    return sol


def apply_subsidy(solution, rate):
    """Add a non-distorting per-unit subsidy to a solved equilibrium.

    Payment is ``rate * total_supply``; producer revenue rises by the same
    amount and every market outcome (prices, quantities) is unchanged.
    """
    _require_finite_nonneg("rate", rate)
    payment = rate * solution.total_supply
    return replace(
        solution,
        subsidy_payment=solution.subsidy_payment + payment,
        producer_revenue=solution.producer_revenue + payment,
    )


def compensation_ratio(pre, post, eps=1e-9):
    """Subsidy payment relative to the market revenue lost since ``pre``.

    ``pre`` is the no-tariff solution, ``post`` the tariff solution carrying
    a subsidy.  Returns ``post.subsidy_payment / max(loss, eps)`` where loss
    is the fall in market (non-subsidy) revenue.  When there is no loss the
    ratio is meaningless and the ``NO_LOSS`` sentinel is returned instead.
    """
    loss = pre.market_revenue - post.market_revenue
    if loss <= 0.0:
        return NO_LOSS
    return post.subsidy_payment / max(loss, eps)
