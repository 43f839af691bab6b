"""Exception hierarchy shared across the package."""


class STCompError(Exception):
    """Base class for all package errors."""


class ConfigError(STCompError, ValueError):
    """Invalid configuration or parameter value.

    ``path`` names the offending field (e.g. ``steps.alpha``) when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        self.detail = message
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class InvalidTopologyError(STCompError, ValueError):
    pass


class NumericInputError(STCompError, ValueError):
    """Non-finite vector handed to a compressor or gradient oracle."""


class NumericalError(STCompError, ArithmeticError):
    pass


class DivergenceError(STCompError, ArithmeticError):
    """Iterates blew up or became non-finite during a run."""

    def __init__(self, message, round_index=None, norms=None):
        self.round_index = round_index
        self.norms = norms or {}
        super().__init__(message)


class ObserverConsistencyError(STCompError, AssertionError):
    """Replicated observer copies disagreed between holders."""
