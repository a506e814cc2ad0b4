"""Exception types shared across the package."""


class FedqlstmError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FedqlstmError):
    """Invalid configuration value or combination."""


class ShapeError(FedqlstmError):
    """Array dimensions inconsistent with the declared contract."""


class DataError(FedqlstmError):
    """Input data violates a precondition (non-finite value, bad label, ...)."""


class CsvFormatError(FedqlstmError):
    """Malformed CSV content; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TrainingError(FedqlstmError):
    """Training produced a non-finite loss, gradient, or state."""


class AggregationError(FedqlstmError):
    """Parameter snapshots cannot be aggregated."""


class MetricError(FedqlstmError):
    """Metric undefined for the given inputs."""


class UnsupportedOperationError(FedqlstmError):
    """Operation declared unsupported for this configuration."""


class CheckpointError(FedqlstmError):
    """Checkpoint file is missing, corrupt, or incompatible."""
