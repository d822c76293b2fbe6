"""
Global Exception Handlers
All errors raised by a command end up here and leave the process with a consistent payload
"""

import logging
from datetime import datetime
from typing import Any, Tuple

from pydantic import ValidationError

from clorl.core.exceptions import ClorlException

logger = logging.getLogger(__name__)

CONFIG_ERROR_EXIT_CODE = 2
INTERNAL_ERROR_EXIT_CODE = 1


def create_error_response(
    error_code: str,
    message: str,
    command: str,
    details: Any = None
) -> dict:
    """
    Create error response with consistent format

    Format Response:
    {
        "success": false,
        "error": {
            "code": "ERROR_CODE",
            "message": "Error message",
            "details": {...},
            "command": "train",
            "timestamp": "2025-12-20T10:30:45"
        }
    }
    """
    error_response = {
        "success": False,
        "error": {
            "code": error_code,
            "message": message,
            "command": command,
            "timestamp": datetime.now().isoformat()
        }
    }

    if details:
        error_response["error"]["details"] = details

    return error_response


def clorl_exception_handler(command: str, exc: ClorlException) -> Tuple[int, dict]:
    """
    Handler for all custom ClorlException
    """
    logger.error(f"{exc.error_code} - {exc.message} - Command: {command}")

    return exc.exit_code, create_error_response(
        error_code=exc.error_code,
        message=exc.message,
        command=command,
        details=exc.details
    )


def validation_exception_handler(command: str, exc: ValidationError) -> Tuple[int, dict]:
    """
    Handler for validation errors from Pydantic
    """
    errors = []
    for error in exc.errors():
        errors.append({
            "field": " -> ".join(str(loc) for loc in error["loc"]),
            "message": error["msg"],
            "type": error["type"]
        })

    logger.warning(f"Validation Error - Command: {command} - Errors: {errors}")

    return CONFIG_ERROR_EXIT_CODE, create_error_response(
        error_code="CONFIG_ERROR",
        message="Validation failed",
        command=command,
        details={"errors": errors}
    )


def generic_exception_handler(command: str, exc: Exception) -> Tuple[int, dict]:
    """
    Handler for all unhandled exceptions
    """
    logger.error(f"Unhandled Exception - Command: {command} - Error: {str(exc)}", exc_info=True)

    return INTERNAL_ERROR_EXIT_CODE, create_error_response(
        error_code="INTERNAL_ERROR",
        message="An unexpected error occurred",
        command=command,
        details={"error": str(exc)}
    )


def handle_exception(command: str, exc: Exception) -> Tuple[int, dict]:
    """
    Dispatch an exception to its handler, most specific first
    """
    if isinstance(exc, ClorlException):
        return clorl_exception_handler(command, exc)
    if isinstance(exc, ValidationError):
        return validation_exception_handler(command, exc)
    return generic_exception_handler(command, exc)
