"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class DegenerateMapError(DomainError):
    """All map exponents vanish, so the pushforward is an atom at 1."""


class EvaluationError(ArithmeticError):
    """A series could not be certified within the iteration cap.

    Carries the partial sum reached and the tail bound that failed to close.
    """

    def __init__(self, message, partial_sum=None, bound=None):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.bound = bound
