"""
Custom Exception Classes for the toolkit
All errors carry an exit code and an error code so the CLI can report them the same way
"""

from typing import Any, Optional


class ClorlException(Exception):
    """Base exception for all custom exceptions"""

    def __init__(
        self,
        message: str,
        exit_code: int = 1,
        error_code: Optional[str] = None,
        details: Optional[Any] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.error_code = error_code or self.__class__.__name__
        self.details = details
        super().__init__(self.message)


# ===============================
# Configuration & Usage Errors
# ===============================

class ConfigException(ClorlException):
    """Run / sweep configuration failed validation"""

    def __init__(self, message: str = "Invalid configuration", details: Any = None):
        super().__init__(
            message=message,
            exit_code=2,
            error_code="CONFIG_ERROR",
            details=details
        )


class UsageException(ClorlException):
    """Command invoked with arguments that cannot be satisfied"""

    def __init__(self, message: str = "Usage error", details: Any = None):
        super().__init__(
            message=message,
            exit_code=64,
            error_code="USAGE_ERROR",
            details=details
        )


class OutputExistsException(ClorlException):
    """Refusing to overwrite an existing artifact"""

    def __init__(self, message: str = "Output already exists", details: Any = None):
        super().__init__(
            message=message,
            exit_code=5,
            error_code="OUTPUT_EXISTS",
            details=details
        )


# ===============================
# Dataset Errors
# ===============================

class DatasetFormatException(ClorlException):
    """CODS file is malformed (magic, version, truncation, checksum)"""

    def __init__(self, message: str = "Invalid dataset file", details: Any = None):
        super().__init__(
            message=message,
            exit_code=4,
            error_code="DATASET_FORMAT_ERROR",
            details=details
        )


class DatasetValidationException(ClorlException):
    """Dataset arrays violate the transition invariants"""

    def __init__(self, message: str = "Dataset validation failed", details: Any = None):
        super().__init__(
            message=message,
            exit_code=4,
            error_code="DATASET_VALIDATION_ERROR",
            details=details
        )


class CheckpointFormatException(ClorlException):
    """Checkpoint file is malformed or truncated"""

    def __init__(self, message: str = "Invalid checkpoint file", details: Any = None):
        super().__init__(
            message=message,
            exit_code=4,
            error_code="CHECKPOINT_FORMAT_ERROR",
            details=details
        )


# ===============================
# Numerical Contract Errors
# ===============================

class InvalidSupportException(ClorlException):
    """Value support is degenerate"""

    def __init__(self, message: str = "Invalid value support", details: Any = None):
        super().__init__(
            message=message,
            exit_code=1,
            error_code="INVALID_SUPPORT",
            details=details
        )


class ShapeMismatchException(ClorlException):
    """Array shapes disagree with the network or support they are used with"""

    def __init__(self, message: str = "Shape mismatch", details: Any = None):
        super().__init__(
            message=message,
            exit_code=1,
            error_code="SHAPE_MISMATCH",
            details=details
        )


class NonFiniteException(ClorlException):
    """NaN or infinity where a finite value is required"""

    def __init__(self, message: str = "Non-finite value", details: Any = None):
        super().__init__(
            message=message,
            exit_code=1,
            error_code="NON_FINITE",
            details=details
        )


class InvalidActionException(ClorlException):
    """Action outside the [-1, 1] box"""

    def __init__(self, message: str = "Action out of bounds", details: Any = None):
        super().__init__(
            message=message,
            exit_code=1,
            error_code="INVALID_ACTION",
            details=details
        )


# ===============================
# Training Errors
# ===============================

class DivergenceException(ClorlException):
    """Training produced a non-finite loss"""

    def __init__(self, step: int, message: str = "Training diverged", details: Any = None):
        self.step = step
        details = dict(details or {})
        details["step"] = step
        super().__init__(
            message=f"{message} at step {step}",
            exit_code=3,
            error_code="DIVERGENCE",
            details=details
        )
