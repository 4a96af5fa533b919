"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers that only care about bad
arguments can catch that; numerical trouble derives from ``ArithmeticError``.
The CLI maps the first family to exit code 2 and the second to exit code 3.
"""


class InputValidationError(ValueError):
    pass


class UnsupportedDimensionError(InputValidationError):
    pass


class DimensionCoverageError(InputValidationError):
    pass


class ParameterError(InputValidationError):
    pass


class PairingError(InputValidationError):
    pass


class NumericalError(ArithmeticError):
    pass


class DegenerateConfigurationError(NumericalError):
    """A critical edge has zero length but the loss asks for its direction."""

    def __init__(self, i, j, message=None):
        self.pair = (int(i), int(j))
        super().__init__(message or f"points {i} and {j} coincide on a critical edge")


class NormalizationError(NumericalError):
    pass


class OptimizationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
