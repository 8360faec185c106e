"""Exception types shared across the package.

The CLI maps each family to an exit code, so library code should raise the
most specific class that applies.
"""


class GraphUQError(Exception):
    """Base class for all package errors."""


class ConfigError(GraphUQError, ValueError):
    """Invalid parameter or configuration value."""

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems) if problems else [message]


class GraphError(GraphUQError, ValueError):
    """Graph construction failed (degenerate scales, disconnected graph, ...)."""


class NumericalError(GraphUQError, ArithmeticError):
    """A numerical routine failed or produced non-finite values."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class DataError(GraphUQError, ValueError):
    """Malformed or out-of-range input data."""
