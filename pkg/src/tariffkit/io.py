"""File formats: flat CSV tables and JSON records, byte-reproducible.

CSV is comma-separated with a mandatory header row, UTF-8, '.' decimal
point, no index column.  Floats are written in shortest round-trip form in
both CSV and JSON (keys sorted, two-space indent), so identical inputs
produce identical bytes and every numeric field reloads to the exact
in-memory value.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .datagen import StatePanel
from .errors import ConfigError

__all__ = [
    "write_csv",
    "write_json",
    "read_panel_csv",
    "read_series_csv",
    "SeriesData",
]

PANEL_KEY_COLUMNS = ("state", "year", "exposure")


def write_csv(data, path):
    """Write a DataFrame or an iterable of row dicts as CSV."""
    frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(list(data))
    frame.to_csv(path, index=False)
    return Path(path)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2, default=_jsonable)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return Path(path)


def _require_columns(frame, columns, path):
    for name in columns:
        if name not in frame.columns:
            raise ConfigError(f"{path}: missing required column {name!r}")


def _reject_missing(frame, columns, path):
    for name in columns:
        bad = frame.index[frame[name].isna()]
        if len(bad):
            raise ConfigError(
                f"{path}: column {name!r} has a missing value at row {int(bad[0])}"
            )


def read_panel_csv(path, outcome=None):
    """Load a state/year panel CSV into a StatePanel.

    Requires columns state, year, exposure.  The outcome column is the
    single remaining column, or the one named by ``outcome`` when the file
    carries several candidates; any other columns ride along as extras.
    """
    # round_trip parsing: the default fast parser can be a ULP off, which
    # would break bit-exact reproduction of written estimates
    frame = pd.read_csv(path, float_precision="round_trip")
    _require_columns(frame, PANEL_KEY_COLUMNS, path)
    candidates = [c for c in frame.columns if c not in PANEL_KEY_COLUMNS]
    if outcome is not None:
        if outcome not in frame.columns:
            raise ConfigError(f"{path}: missing required column {outcome!r}")
    elif len(candidates) == 1:
        outcome = candidates[0]
    elif not candidates:
        raise ConfigError(f"{path}: no outcome column found")
    else:
        raise ConfigError(
            f"{path}: several outcome candidates ({', '.join(candidates)}); "
            "pick one with --outcome"
        )
    _reject_missing(frame, (*PANEL_KEY_COLUMNS, outcome), path)
    extra = {
        c: frame[c].to_numpy()
        for c in frame.columns
        if c not in PANEL_KEY_COLUMNS and c != outcome
    }
    try:
        return StatePanel(
            state=frame["state"].to_numpy(),
            year=frame["year"].to_numpy(),
            outcome=frame[outcome].to_numpy(dtype=float),
            exposure=frame["exposure"].to_numpy(dtype=float),
            extra=extra,
            ground_truth=None,
            outcome_name=outcome,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class SeriesData:
    """Named multivariate series loaded from CSV; feeds the VAR estimators."""

    values: np.ndarray
    names: tuple
    dummy: np.ndarray | None = None

    def column(self, name):
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise ConfigError(
                f"no series column {name!r}; available: {', '.join(self.names)}"
            ) from None


def read_series_csv(path):
    """Load a time-series CSV: a t index column, variables, optional dummy."""
    frame = pd.read_csv(path, float_precision="round_trip")
    _require_columns(frame, ("t",), path)
    names = tuple(c for c in frame.columns if c not in ("t", "dummy"))
    if not names:
        raise ConfigError(f"{path}: no variable columns found")
    _reject_missing(frame, ("t", *names), path)
    frame = frame.sort_values("t", kind="stable")
    values = frame[list(names)].to_numpy(dtype=float)
    dummy = frame["dummy"].to_numpy(dtype=float) if "dummy" in frame.columns else None
    return SeriesData(values=values, names=names, dummy=dummy)
