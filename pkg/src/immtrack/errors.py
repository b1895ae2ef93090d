"""Error taxonomy shared by the library, the service, and the CLI.

Each class maps to one CLI exit code / HTTP error category, so raising the
right type anywhere in the core is enough for callers to report it properly.
"""


class ImmTrackError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1
    category = "error"


class ConfigError(ImmTrackError):
    """Invalid or inconsistent configuration (exit code 2)."""

    exit_code = 2
    category = "config"


class DataError(ImmTrackError):
    """Malformed or contract-violating input data (exit code 3)."""

    exit_code = 3
    category = "data"


class NumericalError(ImmTrackError):
    """Numerical failure inside a filter (exit code 4).

    Carries the offending value (for example a covariance eigenvalue or a
    condition number) when one is available.
    """

    exit_code = 4
    category = "numerical"

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class ContractError(ImmTrackError):
    """An API precondition was violated by the caller (exit code 3)."""

    exit_code = 3
    category = "data"
