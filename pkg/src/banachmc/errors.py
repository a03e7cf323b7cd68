"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument lies outside the documented domain of an operation."""


class EvaluationError(ValueError):
    """A user-supplied function returned a non-finite value.

    The offending location is kept in ``index`` (node, cell or matrix index).
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericalError(ArithmeticError):
    """A numerical procedure failed to produce a finite or converged result."""


class UnsupportedRegimeError(ValueError):
    """The requested parameter combination is outside the supported theory."""


class SizeError(ValueError):
    """A problem is too large for an exhaustive procedure."""
