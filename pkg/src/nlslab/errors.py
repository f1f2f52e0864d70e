"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Model or configuration parameters violate their admissible ranges."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, non-finite state)."""
