"""Exception hierarchy shared by all modules."""


class OuterLoopError(Exception):
    """Base class for errors raised by this package."""


class SpaceError(OuterLoopError, ValueError):
    """Invalid parameter or parameter-space definition."""


class UnsupportedDesignError(OuterLoopError):
    """A sampler was asked for a space type it cannot handle."""


class EvaluationError(OuterLoopError):
    """The user function failed or produced non-finite output.

    ``point`` holds the offending input row when known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ContractViolation(OuterLoopError):
    """A component broke its interface contract (e.g. out-of-space candidate)."""


class CapabilityError(OuterLoopError):
    """A method needs a model capability the backend does not provide."""


class ConditioningError(OuterLoopError, ArithmeticError):
    """Gram matrix stayed singular after the full jitter ladder."""


class FitDegeneracyError(OuterLoopError):
    """Training data cannot support hyperparameter fitting."""


class OptimizationFailure(OuterLoopError):
    """Acquisition optimization found no finite value."""


class DegenerateVarianceError(OuterLoopError):
    """Output variance is zero, so variance-based indices are undefined."""
