"""Shared exception types."""


class ResourceLimitError(RuntimeError):
    """A request exceeds a documented desk-scale cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
