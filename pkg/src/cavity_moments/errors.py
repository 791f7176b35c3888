"""Exception hierarchy shared by the solver engines."""


class CavityError(Exception):
    """Base class for all errors raised by :mod:`cavity_moments`."""


class ParameterError(CavityError, ValueError):
    """Malformed or out-of-range physical parameters."""


class PreconditionError(CavityError, ValueError):
    """An engine was asked to evaluate outside its domain of validity."""


class SingularRegimeError(PreconditionError):
    """Rates that make the steady-state problem degenerate (kappa or Gamma <= 0)."""


class NumericalError(CavityError, ArithmeticError):
    """A numerical routine failed its own consistency checks."""


class SingularMatrixError(NumericalError):
    def __init__(self, message, smallest_pivot=None):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class NearZeroIntensityError(NumericalError):
    """g2 requested for a (numerically) empty cavity."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, trend=None):
        super().__init__(message)
        self.residual = residual
        self.trend = trend


class LeakageError(NumericalError):
    """The Fock truncation is too small: population reaches the top level."""

    def __init__(self, message, leakage=None, n_max=None):
        super().__init__(message)
        self.leakage = leakage
        self.n_max = n_max


class BudgetExceededError(CavityError, MemoryError):
    def __init__(self, message, dimension=None, trend=None):
        super().__init__(message)
        self.dimension = dimension
        self.trend = trend
