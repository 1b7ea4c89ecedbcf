"""Exception types shared across the package."""


class ElqaError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(ElqaError):
    """A source or interchange file is malformed.

    Carries the offending line number (1-based) when one is known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConversionError(ElqaError):
    """A corpus record cannot be converted (fatal per-record failures)."""


class SamplingError(ElqaError):
    """A sampling plan is invalid or cannot be applied to the given pools."""


class ModelError(ElqaError):
    """Model configuration or usage error."""


class MetricsError(ElqaError):
    """Scoring inputs violate a metric's preconditions."""
