"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class AutotagError(Exception):
    """Base class for all package errors."""


class ConfigError(AutotagError):
    """Bad or missing configuration (exit code 2)."""


class DataError(AutotagError):
    """Malformed manifests, feature files or inputs (exit code 3)."""


class DivergenceError(AutotagError):
    """Training produced a non-finite loss (exit code 4)."""
