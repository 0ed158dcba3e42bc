"""Exception types shared across the package."""


class ChdisguiseError(Exception):
    """Base class for all package errors."""


class ValidationError(ChdisguiseError, ValueError):
    """Malformed or out-of-contract input (bad shapes, ranges, file contents)."""


class NumericalError(ChdisguiseError, RuntimeError):
    """An iterative routine failed to converge or produced an inconsistent result."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
