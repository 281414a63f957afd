"""Exception types shared across the solver."""


class ConfigError(ValueError):
    """Invalid or unparsable run configuration."""


class FieldFormatError(IOError):
    """Malformed or inconsistent binary field file."""


class SolvabilityError(ValueError):
    """Horizontal Poisson problem with a right-hand side that has nonzero mean."""


class NonEllipticError(ValueError):
    """Balance operator coefficient is not positive; the problem is not elliptic."""


class NonConvergenceError(RuntimeError):
    """Fixed-point iteration failed to reach the requested tolerance.

    Carries the residual history so callers can inspect the divergence.
    """

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = list(residuals)
