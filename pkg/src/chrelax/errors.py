"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A numerical parameter is outside its admissible range (lambda <= 0, eps > 1, ...)."""


class DomainError(ValueError):
    """A point lies outside the effective domain of a monotone graph."""


class DataError(ValueError):
    """Problem data violates a structural requirement (compatibility, admissible range)."""


class ConfigError(ValueError):
    """A run configuration file or key is malformed."""


class FitError(ValueError):
    """Not enough usable points for a log-log rate fit."""


class StepError(RuntimeError):
    """One implicit time step failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class RunError(RuntimeError):
    """A time integration failed even after time-step halving."""
