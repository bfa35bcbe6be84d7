"""Exception hierarchy. Every error knows the CLI exit code it maps to."""


class DelayKitError(Exception):
    exit_code = 5


class DomainError(DelayKitError, ValueError):
    """A precondition on the arguments does not hold."""
    exit_code = 2


class CapacityError(DomainError):
    """Power cap, binomial range or coefficient rounding floor exceeded."""
    exit_code = 2


class ConvergenceError(DelayKitError):
    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class NotAchievedError(DelayKitError):
    """No admissible order reaches the requested accuracy.

    `best` holds the most accurate approximant found during the search.
    """
    exit_code = 3

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InstabilityError(DelayKitError):
    exit_code = 4

    def __init__(self, message, time=None, value=None):
        super().__init__(message)
        self.time = time
        self.value = value


class RangeError(DelayKitError, ArithmeticError):
    """Overflow while evaluating a transfer function."""
    exit_code = 5


class NumericalError(DelayKitError):
    exit_code = 5

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic
