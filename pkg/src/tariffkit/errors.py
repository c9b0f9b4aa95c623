"""Exception types shared across the toolkit.

The command line layer maps these onto exit codes: configuration problems
exit with 2, numerical/runtime failures with 1.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ToolkitError):
    """Invalid configuration, unknown preset, malformed input file."""


class SolverError(ToolkitError):
    """Root finding failed; message reports the bracket that was searched."""


class StationarityError(ToolkitError):
    """Companion matrix spectral radius at or above one."""


class RankError(ToolkitError):
    """Rank-deficient or non-positive-definite matrix.

    The message names the offending column (design matrices) or the smallest
    eigenvalue (covariance matrices).
    """
