"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class CyclicDependencyError(InvalidArgument):
    pass


class PreconditionError(ValueError):
    pass


class EmptyChoiceError(LookupError):
    """Raised when a scheduler is asked to pick from an empty pool."""


class ResourceLimitError(RuntimeError):
    """An exact search exceeded its configured budget."""

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback


class ValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SchedulerDeadlock(RuntimeError):
    """Incomplete tasks remain but the policy found nothing selectable."""
