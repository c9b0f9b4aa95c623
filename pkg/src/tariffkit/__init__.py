"""Simulation and estimation toolkit for tariff shocks in a commodity market."""

__version__ = "0.1.0"

from .datagen import (
    PanelSpec,
    StatePanel,
    TimeSeriesPanel,
    VarSpec,
    attach_exposure_instrument,
    generate_did_panel,
    generate_var_series,
    resimulate,
)
from .dynamics import (
    CalibrationTargets,
    DynamicsParams,
    InitialState,
    ScenarioSpec,
    ShockPath,
    SimulationPath,
    calibrate_to_targets,
    path_summary,
    simulate_path,
    steady_scenario,
)
from .errors import (
    ConfigError,
    RankError,
    SolverError,
    StationarityError,
    ToolkitError,
)
from .experiments import ExperimentResult, available_experiments, run_experiment
from .market import (
    NO_LOSS,
    ElasticityParams,
    EquilibriumSolution,
    MarketBaseline,
    TariffScenario,
    TwoExporterMarket,
    TwoExporterSolution,
    apply_subsidy,
    compensation_ratio,
    incidence_approx,
    solve_equilibrium,
    solve_two_exporter,
)
from .presets import Preset, available_presets, preset

__all__ = [
    "__version__",
    "ConfigError",
    "RankError",
    "SolverError",
    "StationarityError",
    "ToolkitError",
    "NO_LOSS",
    "ElasticityParams",
    "EquilibriumSolution",
    "MarketBaseline",
    "TariffScenario",
    "TwoExporterMarket",
    "TwoExporterSolution",
    "apply_subsidy",
    "compensation_ratio",
    "incidence_approx",
    "solve_equilibrium",
    "solve_two_exporter",
    "DynamicsParams",
    "InitialState",
    "ShockPath",
    "SimulationPath",
    "ScenarioSpec",
    "CalibrationTargets",
    "simulate_path",
    "steady_scenario",
    "path_summary",
    "calibrate_to_targets",
    "PanelSpec",
    "StatePanel",
    "VarSpec",
    "TimeSeriesPanel",
    "generate_did_panel",
    "attach_exposure_instrument",
    "generate_var_series",
    "resimulate",
    "Preset",
    "preset",
    "available_presets",
    "ExperimentResult",
    "run_experiment",
    "available_experiments",
]
