"""Exception types raised across the package."""


class EmptyEstimateError(ValueError):
    """No accepted shots were left to build an estimate from."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine did not converge.

    The ``diagnostics`` mapping carries whatever the routine knew when it gave
    up (iteration count, last update size, current iterates).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ResourceLimitError(ValueError):
    """The requested simulation exceeds the configured size limit."""
