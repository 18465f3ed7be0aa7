class ValidationError(ValueError):
    """An input structure violates its documented invariants."""


class ConvergenceError(RuntimeError):
    """A fixed-point iteration exhausted its iteration budget or diverged."""
