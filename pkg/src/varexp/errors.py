"""Exception types raised by varexp."""


class VarExpError(ValueError):
    """Base class for precondition failures on fields, exponents and grids."""


class DomainMismatchError(VarExpError):
    pass


class SupercriticalExponentError(VarExpError):
    pass


class GridError(VarExpError):
    """A sampling grid (lambda, t, radius) does not cover what the operation needs."""


class ConvergenceError(RuntimeError):
    """Iterative root or minimum search failed; ``bracket`` holds the last interval."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(VarExpError):
    """A configuration document failed schema validation."""
