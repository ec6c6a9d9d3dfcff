"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class LexcbowError(Exception):
    """Base class for all package errors."""


class ConfigError(LexcbowError):
    """Invalid configuration or flag combination."""


class DataError(LexcbowError):
    """Missing, empty or malformed input data."""


class ParseError(DataError):
    """Malformed line in an input file."""

    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class NumericalError(LexcbowError):
    """Non-finite value detected in model parameters."""
