"""Exception hierarchy shared across the package."""


class TlfError(Exception):
    """Base class for all package errors."""


class ShapeError(TlfError):
    """Array dimensions do not match what an operator or routine expects."""


class ConfigError(TlfError):
    """Invalid parameter value or unsupported configuration."""


class ValidationError(TlfError):
    """Input data violates a documented precondition."""


class FormatError(TlfError):
    """A file or stream does not conform to its binary/text format."""


class NumericalError(TlfError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DenoiserError(TlfError):
    """A denoising module failed (bad reply, crash, timeout, shape change)."""
