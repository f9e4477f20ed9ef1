"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class StabilityError(RuntimeError):
    """Explicit time stepping was refused or blew up."""


class ConfigError(ValueError):
    """A run configuration failed validation.

    ``violations`` holds every problem found, not just the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
