"""Exception hierarchy shared by the solver modules."""


class MinMoveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(MinMoveError, ValueError):
    pass


class NonCoercive(MinMoveError):
    """The proximal search window kept growing without bracketing a minimum."""


class MonotonicityViolation(MinMoveError):
    pass


class HypothesisViolated(MinMoveError):
    pass


class NotFound(MinMoveError):
    pass


class WellEscape(MinMoveError):
    pass


class Pinned(MinMoveError):
    pass


class QuadratureSingularity(MinMoveError):
    pass


class BudgetExceeded(MinMoveError):
    """Raised when an iteration cap is hit; ``estimate`` holds the best value so far."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
