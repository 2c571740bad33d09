"""Exception types shared across the package."""


class IdkitError(Exception):
    """Base class for all errors raised by idkit."""


class InvalidArgument(IdkitError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalFailure(IdkitError, ArithmeticError):
    """A factorization or solve could not be completed."""


class Diverged(NumericalFailure):
    """A recursion produced non-finite values.

    ``step`` holds the time index at which the failure was detected.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateDenominator(IdkitError, ValueError):
    """The fit percentage is undefined because the target has zero spread."""
