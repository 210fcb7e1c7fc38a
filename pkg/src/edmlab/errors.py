"""Exception types raised across the package."""


class EdmLabError(Exception):
    """Base class for every error raised by edmlab."""


class ValidationError(EdmLabError, ValueError):
    """Input does not satisfy an operation's preconditions."""


class BadShape(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class RowNotStochastic(ValidationError):
    def __init__(self, s: int, a: int, total: float):
        super().__init__(f"transition row P[{s}][{a}] sums to {total!r}, not 1")
        self.s = s
        self.a = a
        self.total = total


class BadInitial(ValidationError):
    pass


class EmptyDataset(ValidationError):
    pass


class GaugeNotZero(ValidationError):
    pass


class DegenerateContrast(ValidationError):
    pass


class NumericalError(EdmLabError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class SolverFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NonFiniteEvaluation(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class Divergence(NumericalError):
    pass


class FdMismatch(NumericalError):
    """Analytic gradient disagrees with the finite-difference oracle."""
