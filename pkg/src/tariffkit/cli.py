"""Command-line pipeline: simulate | datagen | estimate | montecarlo | report.

Every command is deterministic given its config and seed: outputs carry no
timestamps, JSON keys are sorted, and floats print in fixed formats, so a
repeated run is byte-identical.  Settings merge with the precedence
defaults < preset < config file < command-line flags.

The optional JSON config file holds exactly one block named after the
invoked command plus optional top-level "seed", "out", and "format" keys:

    {"simulate": {"preset": "paper2018", "tau": 0.1}, "out": "runs/a"}

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or config
error.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .datagen import generate_did_panel, generate_var_series
from .dynamics import path_summary, simulate_path, steady_scenario
from .econometrics import event_response, fevd, fit_var, identify_short_run, irf, tsls, twfe_did
from .errors import ConfigError, ToolkitError
from .experiments import run_experiment
from .io import read_panel_csv, read_series_csv, write_csv, write_json
from .market import TariffScenario, solve_equilibrium, solve_two_exporter
from .presets import available_presets, preset as load_preset

COMMANDS = ("simulate", "datagen", "estimate", "montecarlo", "report")
_TOP_KEYS = ("seed", "out", "format")

# config keys each command block may carry (the flag names, underscored)
_BLOCK_KEYS = {
    "simulate": ("preset", "tau"),
    "datagen": ("preset",),
    "estimate": (
        "model",
        "input",
        "preset",
        "outcome",
        "treatment_year",
        "lags",
        "horizon",
        "regressor",
        "instrument",
    ),
    "montecarlo": ("experiment", "reps"),
    "report": (),
}


def _load_config(path, command):
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    blocks = [key for key in cfg if key in COMMANDS]
    stray = [key for key in cfg if key not in COMMANDS and key not in _TOP_KEYS]
    if stray:
        raise ConfigError(f"config {path}: unknown top-level key {stray[0]!r}")
    if blocks != [command]:
        raise ConfigError(
            f"config {path} must contain exactly one command block named {command!r}"
        )
    block = cfg[command]
    if not isinstance(block, dict):
        raise ConfigError(f"config {path}: {command!r} block must be a JSON object")
    for key in block:
        if key not in _BLOCK_KEYS[command]:
            raise ConfigError(
                f"config {path}: unknown key {key!r} in {command!r} block"
            )
    top = {key: cfg[key] for key in _TOP_KEYS if key in cfg}
    return block, top


class _Settings:
    """Merged view of defaults, config file, and flags for one invocation."""

    def __init__(self, args):
        self.command = args.command
        block, top = ({}, {})
        if args.config:
            block, top = _load_config(args.config, args.command)
        self._block = block
        self._args = args
        self.seed = args.seed if args.seed is not None else top.get("seed")
        self.out = Path(args.out if args.out is not None else top.get("out", "."))
        self.format = args.format if args.format is not None else top.get("format", "csv")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}; choose csv or json")

    def get(self, key, default=None):
        flag = getattr(self._args, key, None)
        if flag is not None:
            return flag
        return self._block.get(key, default)

    def require(self, key, hint):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"{self.command} needs {hint}")
        return value

    def table_path(self, stem):
        return self.out / f"{stem}.{self.format}"

    def write_table(self, rows, stem):
        """Write tabular rows in the selected format; returns the path."""
        path = self.table_path(stem)
        if self.format == "csv":
            write_csv(rows, path)
        else:
            records = rows.to_dict(orient="records") if hasattr(rows, "to_dict") else list(rows)
            write_json(records, path)
        return path


def _emit(paths):
    for path in paths:
        print(path)


def _resolve_preset(settings):
    name = settings.require("preset", "--preset NAME (or a config 'preset' key)")
    return load_preset(name)


def cmd_simulate(settings):
    bundle = _resolve_preset(settings)
    if bundle.scenario_args is None and bundle.market is None:
        raise ConfigError(f"preset {bundle.name!r} has nothing to simulate")
    tau = settings.get("tau")
    tau = float(tau) if tau is not None else bundle.tariff.tau
    if tau < 0.0:
        raise ConfigError("tau must be >= 0")
    tariff = TariffScenario(tau=tau)
    summary = {"preset": bundle.name, "tau": tau}
    paths = []

    if bundle.scenario_args is not None:
        scenario_args = dict(bundle.scenario_args)
        base_tau = scenario_args.get("tau", 0.25)
        if tau != base_tau:
            # the export demand collapse is the retaliation that comes with
            # the tariff; scale it with the rate so tau=0 is a clean baseline
            scale = tau / base_tau if base_tau > 0.0 else 0.0
            scenario_args["tau"] = tau
            scenario_args["export_demand_shift"] = (
                scenario_args.get("export_demand_shift", 0.0) * scale
            )
        scenario = steady_scenario(**scenario_args)
        solution = solve_equilibrium(scenario.baseline, scenario.elasticities, tariff)
        equilibrium = dataclasses.asdict(solution)
        equilibrium["tau"] = tau
        paths.append(write_json(equilibrium, settings.out / "equilibrium.json"))
        path = simulate_path(
            scenario.baseline,
            scenario.elasticities,
            scenario.params,
            scenario.shocks,
            scenario.init,
        )
        paths.append(
            settings.write_table([dataclasses.asdict(r) for r in path.records], "path")
        )
        summary["price_change_frac"] = solution.price_change_frac
        summary["dynamic"] = path_summary(path)

    if bundle.market is not None:
        two = solve_two_exporter(bundle.market, tau)
        record = dataclasses.asdict(two)
        record["tau"] = tau
        paths.append(write_json(record, settings.out / "two_exporter.json"))
        summary["diversion_share"] = two.diversion_share
        summary["p_us"] = two.p_us
        summary["p_brazil"] = two.p_brazil

    paths.append(write_json(summary, settings.out / "summary.json"))
    _emit(paths)


def cmd_datagen(settings):
    bundle = _resolve_preset(settings)
    if not bundle.panels and bundle.var is None:
        raise ConfigError(f"preset {bundle.name!r} generates no data")
    seed = settings.seed
    paths = []
    for spec in bundle.panels:
        panel = generate_did_panel(spec, seed=seed)
        stem = "panel" if len(bundle.panels) == 1 else f"panel_{spec.outcome_name}"
        paths.append(settings.write_table(panel.to_frame(), stem))
    if bundle.var is not None:
        series = generate_var_series(bundle.var, seed=seed)
        paths.append(settings.write_table(series.to_frame(), "series"))
    _emit(paths)


def _estimate_did(settings, paths):
    panel = read_panel_csv(settings.require("input", "--input FILE"), outcome=settings.get("outcome"))
    treatment_year = settings.get("treatment_year")
    if treatment_year is None and settings.get("preset") is not None:
        treatment_year = _resolve_preset(settings).treatment_year
    if treatment_year is None:
        raise ConfigError("estimate --model did needs --treatment-year (or --preset)")
    did = twfe_did(panel, treatment_year=int(treatment_year))
    reg = did.regression
    record = {
        "model": "did",
        "outcome": panel.outcome_name,
        "treatment_year": did.treatment_year,
        "beta_hat": did.beta_hat,
        "se": reg.se[0],
        "tstat": reg.tstats[0],
        "pvalue": reg.pvalues[0],
        "n_obs": reg.n_obs,
        "n_clusters": reg.n_clusters,
        "cov_type": reg.cov_type,
    }
    if did.group_changes is not None:
        record["group_changes"] = did.group_changes
    if did.event_study is not None:
        record["base_year"] = did.base_year
        record["event_study"] = {str(year): did.event_study[year] for year in did.event_years}
        record["event_se"] = {str(year): did.event_se[year] for year in did.event_years}
        if did.pretrend_joint_p is not None:
            record["pretrend_joint_p"] = did.pretrend_joint_p
        rows = [
            {"year": year, "coef": did.event_study[year], "se": did.event_se[year]}
            for year in did.event_years
        ]
        paths.append(settings.write_table(rows, f"event_study_{panel.outcome_name}"))
    paths.append(write_json(record, settings.out / f"did_{panel.outcome_name}.json"))


def _estimate_svar(settings, paths):
    data = read_series_csv(settings.require("input", "--input FILE"))
    lags = int(settings.get("lags", 1))
    horizon = int(settings.get("horizon", 12))
    exog = data.dummy[:, None] if data.dummy is not None else None
    model = fit_var(data, p=lags, exog=exog)
    sid = identify_short_run(model)
    record = {
        "model": "svar",
        "names": list(model.names),
        "p": model.p,
        "n_obs": model.nobs,
        "intercept": model.intercept,
        "coefs": model.coefs,
        "sigma": model.sigma,
        "b0": sid.b0,
        "ordering": list(sid.names),
        "aic": model.aic,
        "bic": model.bic,
        "hq": model.hq,
    }
    if model.exog_coefs is not None:
        record["dummy_coefs"] = model.exog_coefs[:, 0]
        record["dummy_se"] = model.exog_se[:, 0]
        record["dummy_tstats"] = model.exog_coefs[:, 0] / model.exog_se[:, 0]
    paths.append(write_json(record, settings.out / "var_model.json"))

    impulse = irf(model, sid, horizon)
    irf_rows = impulse.to_frame().to_dict(orient="records")
    if data.dummy is not None:
        # disruption scenario: minus one standard deviation of the first
        # ordered structural shock, labeled for plotting alongside the rest
        shock_vector = np.zeros(model.k)
        shock_vector[0] = -1.0
        event = event_response(impulse, shock_vector)
        irf_rows += [
            {
                "horizon": h,
                "variable": name,
                "shock": "trade_disruption",
                "value": event[h, j],
            }
            for h in range(event.shape[0])
            for j, name in enumerate(impulse.names)
        ]
    paths.append(settings.write_table(irf_rows, "irf"))
    paths.append(settings.write_table(fevd(model, sid, horizon).to_frame(), "fevd"))


def _estimate_iv(settings, paths):
    data = read_series_csv(settings.require("input", "--input FILE"))
    outcome = settings.get("outcome", "price")
    regressor = settings.get("regressor", "exports")
    instrument = settings.get("instrument", "dummy")
    y = data.column(outcome)
    x = data.column(regressor)
    if instrument == "dummy":
        if data.dummy is None:
            raise ConfigError("series has no dummy column to use as instrument")
        z = data.dummy
    else:
        z = data.column(instrument)
    n = len(y)
    design = np.column_stack([np.ones(n), x])
    instruments = np.column_stack([np.ones(n), z])
    result = tsls(y, design, instruments, names=("const", regressor))
    record = {
        "model": "iv",
        "outcome": outcome,
        "regressor": regressor,
        "instrument": instrument,
        "beta_hat": result.params[1],
        "se": result.se[1],
        "tstat": result.tstats[1],
        "pvalue": result.pvalues[1],
        "n_obs": result.n_obs,
        "first_stage_f": float(np.min(result.first_stage_f)),
        "weak_instruments": bool(result.weak_instruments),
    }
    if data.dummy is not None:
        # counterfactual: remove the event's regressor shift implied by the
        # dummy contrast; for log variables the response converts to percent
        d = data.dummy > 0.5
        theta = float(x[d].mean() - x[~d].mean())
        uplift = -float(result.params[1]) * theta
        record["counterfactual_uplift"] = uplift
        record["counterfactual_uplift_pct"] = 100.0 * float(np.expm1(uplift))
    paths.append(write_json(record, settings.out / "iv.json"))


def cmd_estimate(settings):
    model = settings.require("model", "--model did|svar|iv")
    runners = {"did": _estimate_did, "svar": _estimate_svar, "iv": _estimate_iv}
    if model not in runners:
        raise ConfigError(f"unknown model {model!r}; choose from did, svar, iv")
    paths = []
    runners[model](settings, paths)
    _emit(paths)


def cmd_montecarlo(settings):
    name = settings.require("experiment", "--experiment NAME")
    reps = settings.get("reps")
    result = run_experiment(
        name,
        reps=int(reps) if reps is not None else None,
        base_seed=settings.seed,
    )
    summary = {
        "experiment": result.name,
        "reps": result.reps,
        "base_seed": result.base_seed,
        **result.summary,
    }
    paths = [
        settings.write_table(list(result.rows), "reps"),
        write_json(summary, settings.out / "summary.json"),
    ]
    _emit(paths)


_STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.10, "*"))


def _stars(pvalue):
    for level, marks in _STAR_LEVELS:
        if pvalue < level:
            return marks
    return ""


def cmd_report(settings):
    files = sorted(settings.out.glob("did_*.json"))
    if not files:
        raise ToolkitError(
            f"no DiD estimates found in {settings.out}; run estimate --model did first"
        )
    records = [json.loads(f.read_text(encoding="utf-8")) for f in files]

    def row(label, render):
        return f"| {label} | " + " | ".join(render(r) for r in records) + " |"

    def change(record, key):
        changes = record.get("group_changes")
        return f"{changes[key]:.3f}" if changes else "n/a"

    lines = [
        "# Difference-in-differences estimates",
        "",
        "| | " + " | ".join(r["outcome"] for r in records) + " |",
        "|---|" + "---|" * len(records),
        row("Treated change", lambda r: change(r, "treated")),
        row("Control change", lambda r: change(r, "control")),
        row("DiD estimate", lambda r: f"{r['beta_hat']:.3f}{_stars(r['pvalue'])}"),
        row("(SE)", lambda r: f"({r['se']:.3f})"),
        row("Observations", lambda r: str(r["n_obs"])),
        row("States", lambda r: str(r["n_clusters"])),
        "",
        "*** p<0.01, ** p<0.05, * p<0.1. Standard errors clustered by state.",
    ]
    path = settings.out / "table1.md"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit([path])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tariffkit",
        description="Simulate a commodity tariff shock and estimate its effects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="JSON config file")
        cmd.add_argument("--preset", help="named scenario bundle")
        cmd.add_argument("--seed", type=int, help="top-level random seed")
        cmd.add_argument("--out", help="output directory (default: current)")
        cmd.add_argument("--format", choices=("csv", "json"), help="table format")
        return cmd

    add("simulate", "solve the tariff equilibrium and simulate the seasonal path").add_argument(
        "--tau", type=float, help="override the tariff rate"
    )
    add("datagen", "write synthetic panel / series data for a preset")
    est = add("estimate", "fit DiD, SVAR, or IV models on a CSV file")
    est.add_argument("--model", choices=("did", "svar", "iv"), help="estimator")
    est.add_argument("--input", help="input CSV path")
    est.add_argument("--outcome", help="outcome column name")
    est.add_argument("--treatment-year", dest="treatment_year", type=int)
    est.add_argument("--lags", type=int, help="VAR lag order (default 1)")
    est.add_argument("--horizon", type=int, help="IRF/FEVD horizon (default 12)")
    est.add_argument("--regressor", help="endogenous regressor column (iv)")
    est.add_argument("--instrument", help="instrument column (iv; default dummy)")
    mc = add("montecarlo", "run a named replication experiment")
    mc.add_argument("--experiment", help="experiment name")
    mc.add_argument("--reps", type=int, help="replication count")
    add("report", "summarize DiD estimates in --out as a markdown table")
    return parser


_DISPATCH = {
    "simulate": cmd_simulate,
    "datagen": cmd_datagen,
    "estimate": cmd_estimate,
    "montecarlo": cmd_montecarlo,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        settings = _Settings(args)
        settings.out.mkdir(parents=True, exist_ok=True)
        _DISPATCH[args.command](settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ToolkitError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
