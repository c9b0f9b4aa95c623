"""Estimation battery: panel DiD, instrumental variables, structural VARs."""

from .regression import (
    DidResult,
    IvResult,
    RegressionResult,
    ols,
    placebo_did,
    pretrend_test,
    tsls,
    twfe_did,
    two_way_demean,
)
from .var import (
    Fevd,
    Irf,
    StructuralId,
    VarModel,
    event_response,
    fevd,
    fit_var,
    fit_var_shrunk,
    identify_short_run,
    irf,
    select_lag,
)

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
