"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage/config problems -> 1,
data problems -> 2, numeric failures -> 3.
"""


class GridcastError(Exception):
    """Base class for all package errors."""


class ConfigError(GridcastError):
    """Invalid configuration or argument value."""


class DataError(GridcastError):
    """Malformed or insufficient input data."""


class NumericError(GridcastError):
    """Numeric failure (non-finite values, shape mismatch, degenerate input)."""
