"""Seasonal dynamics: fixed point, shock propagation, calibration bands."""

import math

import numpy as np
import pytest

from tariffkit.dynamics import (
    CalibrationTargets,
    DEFAULT_GRID,
    ShockPath,
    calibrate_to_targets,
    export_demand_loglin,
    optimal_acreage,
    path_summary,
    simulate_path,
    steady_scenario,
)
from tariffkit.errors import StationarityError  # noqa: F401  (re-export sanity)


def build(**kwargs):
    return steady_scenario(1.5, 0.45, 3.4919, 1.0, **kwargs)


def run(scenario, subsidy_rates=None):
    return simulate_path(
        scenario.baseline,
        scenario.elasticities,
        scenario.params,
        scenario.shocks,
        scenario.init,
        subsidy_rates=subsidy_rates,
    )


def test_steady_baseline_is_a_fixed_point():
    scenario = build(tau=0.0, export_demand_shift=0.0, n_seasons=6)
    path = run(scenario)
    first = path[0]
    for record in path.records[1:]:
        assert record.realized_price == pytest.approx(first.realized_price, rel=1e-9)
        assert record.acreage == pytest.approx(first.acreage, rel=1e-9)
        assert record.inventory_end == pytest.approx(first.inventory_end, rel=1e-9)
    assert first.realized_price == pytest.approx(scenario.baseline.p0, rel=1e-9)


def test_mass_balance_every_season():
    scenario = build()
    path = run(scenario)
    inventory = scenario.init.inventory
    working = scenario.init.inventory
    for record in path.records:
        carried = (1.0 - scenario.params.storage_loss) * inventory
        marketable = record.production + carried - working
        assert record.quantity_sold + (record.inventory_end - working) == pytest.approx(
            marketable, rel=1e-9
        )
        inventory = record.inventory_end


def test_tariff_path_reproduces_scenario_bands():
    path = run(build())
    summary = path_summary(path)
    assert -0.10 <= summary["price_drop"] <= -0.08
    assert -0.15 <= summary["acreage_drop"] <= -0.13
    assert summary["export_drop"] <= -0.70
    assert summary["inventory_ratio"] >= 1.8


def test_floor_binds_under_the_shock():
    path = run(build())
    scenario = build()
    floor = scenario.params.price_floor_frac * scenario.baseline.p0
    shocked = path[1]
    assert shocked.floor_binding
    assert shocked.realized_price == pytest.approx(floor, rel=1e-12)
    # without a floor the same shock clears strictly lower
    free = run(build(price_floor_frac=0.0))
    assert free[1].realized_price < floor


def test_acreage_foc_closed_form():
    scenario = build()
    params = scenario.params
    for price in (5.0, 9.3, 14.0):
        expected = max(0.0, (price * params.yield_per_acre - params.cost_c1) / params.cost_c2)
        assert optimal_acreage(price, params) == pytest.approx(expected, rel=1e-12)
    assert optimal_acreage(0.0, params) == 0.0
    with pytest.raises(ValueError):
        optimal_acreage(-1.0, params)


def test_export_demand_loglin_formula():
    # eps - eta * (p_hat + ln(1+tau)), responding to the tariff-inclusive price
    assert export_demand_loglin(0.0, 0.0, 0.0, 1.5) == 0.0
    got = export_demand_loglin(-0.05, 0.25, -1.11, 1.5)
    assert got == pytest.approx(-1.11 - 1.5 * (-0.05 + math.log1p(0.25)), rel=1e-12)
    with pytest.raises(ValueError):
        export_demand_loglin(0.0, -1.0, 0.0, 1.5)
    with pytest.raises(ValueError):
        export_demand_loglin(0.0, 0.0, 0.0, -0.5)


def test_yield_shock_moves_price_opposite():
    bad = ShockPath(tau=[0.0, 0.0], export_demand=[0.0, 0.0], yield_shock=[0.0, -0.2])
    good = ShockPath(tau=[0.0, 0.0], export_demand=[0.0, 0.0], yield_shock=[0.0, 0.2])
    scenario = build(tau=0.0, export_demand_shift=0.0, n_seasons=2)
    p_bad = simulate_path(
        scenario.baseline, scenario.elasticities, scenario.params, bad, scenario.init
    )
    p_good = simulate_path(
        scenario.baseline, scenario.elasticities, scenario.params, good, scenario.init
    )
    assert p_bad[1].realized_price > scenario.baseline.p0
    assert p_good[1].realized_price < scenario.baseline.p0


def test_subsidy_rates_add_income_without_moving_price():
    scenario = build()
    rates = np.zeros(len(scenario.shocks))
    rates[1:] = 1.65
    plain = run(scenario)
    paid = run(scenario, subsidy_rates=rates)
    for t in range(len(plain)):
        assert paid[t].realized_price == pytest.approx(plain[t].realized_price, rel=1e-12)
    assert paid[1].subsidy_income == pytest.approx(1.65 * paid[1].production, rel=1e-12)
    assert plain[1].subsidy_income == 0.0


def test_shock_path_validation():
    with pytest.raises(ValueError, match="length"):
        ShockPath(tau=[0.0, 0.1], export_demand=[0.0], yield_shock=[0.0, 0.0])
    with pytest.raises(ValueError, match=">= 0"):
        ShockPath(tau=[-0.1], export_demand=[0.0], yield_shock=[0.0])
    with pytest.raises(ValueError, match="exceed -1"):
        ShockPath(tau=[0.0], export_demand=[0.0], yield_shock=[-1.0])


def test_simulation_is_deterministic():
    a = run(build())
    b = run(build())
    for ra, rb in zip(a.records, b.records):
        assert ra == rb


def test_calibration_hits_all_bands():
    result = calibrate_to_targets(CalibrationTargets())
    assert result.all_in_bands
    assert set(result.in_bands) == {"price_drop", "acreage_drop", "export_drop"}
    # the selected point rebuilds into a scenario that reproduces its summary
    scenario = steady_scenario(
        result.grid_point["eta_d_china"],
        result.grid_point["eta_s"],
        result.grid_point["cost_c2"],
        result.grid_point["expectation_lambda"],
    )
    summary = path_summary(run(scenario))
    for name, value in result.achieved.items():
        assert summary[name] == pytest.approx(value, rel=1e-9)


def test_calibration_prefers_reference_point_on_ties():
    reference = {name: values[0] for name, values in DEFAULT_GRID.items()}
    result = calibrate_to_targets(CalibrationTargets())
    assert result.grid_point == reference
