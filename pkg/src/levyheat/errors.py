"""Exception hierarchy shared by all modules."""


class LevyHeatError(Exception):
    """Base class for every error raised by the package."""


class InvalidGridError(LevyHeatError, ValueError):
    """Grid parameters are out of range or violate the stability regime."""


class InvalidParameterError(LevyHeatError, ValueError):
    pass


class DomainError(LevyHeatError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfiniteMomentError(LevyHeatError, ValueError):
    pass


class ConfigurationError(LevyHeatError, ValueError):
    """Inputs are individually valid but jointly violate a precondition."""


class AlignmentError(LevyHeatError, ValueError):
    """Refinement factors do not divide the grid dimensions."""


class DivergenceError(LevyHeatError, ArithmeticError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite value produced at step {step}")


class PrecisionError(LevyHeatError, ArithmeticError):
    """A truncated series could not reach the requested tolerance within its cap."""


class FitError(LevyHeatError, ValueError):
    pass
