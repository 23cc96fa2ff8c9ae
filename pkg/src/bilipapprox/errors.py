"""Exception types shared across the package."""


class BilipError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BilipError, ValueError):
    """A parameter lies outside the curve's domain or an interval is reversed."""


class JunctionError(BilipError, ValueError):
    """Two curves were glued at points or parameters that do not match."""


class DegenerateChordError(BilipError):
    """A chord of length zero cannot be traversed at positive speed."""


class NotLipschitzError(BilipError):
    """The input moves faster than the claimed Lipschitz constant."""


class AmbiguousDerivativeError(BilipError):
    """The derivative was requested at a corner, where it has two values."""


class PathologicalInputError(BilipError):
    """The greedy bad-set construction did not terminate in its budget."""


class WindowTooSmallError(BilipError):
    """The window left after removing the bad set is shorter than required."""


class CannotStraightenError(BilipError):
    """Too many cells stayed non-admissible after refining the partition."""


class WouldExpandError(BilipError):
    """A speed-L reparametrization would have to stretch the parameter axis."""


class PreconditionError(BilipError):
    """A documented hypothesis of an operation does not hold."""


class NonConvergenceError(BilipError):
    """An iterative procedure exceeded its step budget."""


class BudgetError(BilipError):
    """A ConstantBudget violates one of its defining inequalities."""


class AccountingError(BilipError):
    """A measured domain length fell outside its guaranteed range."""


class SamplingError(BilipError):
    """Uniform resampling failed to meet its targets within the doubling cap."""


class StageError(BilipError):
    """Wraps an error raised inside a pipeline stage and records which one."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class ChartTooLongError(BilipError, ValueError):
    """A chart on the circle must be shorter than a full turn."""


class GenerationError(BilipError):
    """Rejection sampling could not produce a curve meeting the request."""
