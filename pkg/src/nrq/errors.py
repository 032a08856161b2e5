"""Exception types shared across the package."""


class NRQError(Exception):
    """Base class for all package errors."""


class BadExponents(NRQError):
    """Exponents do not match any supported functional class."""


class ZeroDenominator(NRQError):
    """The quotient denominator fell below the machine floor."""


class DegenerateFiber(NRQError):
    """Fiber critical points merged; the two branches cannot be separated."""


class BranchUnavailable(NRQError):
    """The requested fiber branch does not exist at this energy."""


class RejectedPair(NRQError):
    """A candidate critical pair failed residual verification."""

    def __init__(self, message, residual_grad, residual_energy):
        super().__init__(message)
        self.residual_grad = residual_grad
        self.residual_energy = residual_energy


class NoConvergence(NRQError):
    """An iterative solve exhausted its budget before reaching tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class NoCrossing(NRQError):
    """No traced curve brackets the requested quotient value."""


class BoundaryCrossed(NRQError):
    """An energy grid left the admissible interval mid-trace."""

    def __init__(self, message, boundary=None):
        super().__init__(message)
        self.boundary = boundary


class CoercivityUnverified(UserWarning):
    """Empirical coercivity probe could not confirm sublevel boundedness."""


class ConfigError(NRQError):
    """A run configuration file failed to parse or validate."""
