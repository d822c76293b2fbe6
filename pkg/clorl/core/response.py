"""
Standard Response Format for all commands
Ensures consistent payload structure across the CLI
"""

from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel


class CommandResponse:
    """Helper class to create consistent responses"""

    @staticmethod
    def _serialize_data(data: Any) -> Any:
        """Convert Pydantic models, numpy values and paths to JSON-friendly values"""
        if isinstance(data, BaseModel):
            return data.model_dump(mode='json')
        elif isinstance(data, (list, tuple)):
            return [CommandResponse._serialize_data(item) for item in data]
        elif isinstance(data, dict):
            return {k: CommandResponse._serialize_data(v) for k, v in data.items()}
        elif isinstance(data, np.ndarray):
            return data.tolist()
        elif isinstance(data, np.generic):
            return data.item()
        elif isinstance(data, Path):
            return str(data)
        elif isinstance(data, Enum):
            return data.value
        return data

    @staticmethod
    def success(
        message: str,
        data: Any = None,
        meta: Optional[dict] = None
    ) -> dict:
        """
        Standard format for success response

        Args:
            message: Success message
            data: Returned data (optional) - can be Pydantic model, numpy array, or dict
            meta: Additional metadata such as output paths (optional)

        Returns:
            Dictionary with consistent format
        """
        response = {
            "success": True,
            "message": message
        }

        if data is not None:
            response["data"] = CommandResponse._serialize_data(data)

        if meta is not None:
            response["meta"] = CommandResponse._serialize_data(meta)

        return response

    @staticmethod
    def created(message: str, data: Any = None, meta: Optional[dict] = None) -> dict:
        """Response for a newly written artifact"""
        return CommandResponse.success(message=message, data=data, meta=meta)

    @staticmethod
    def retrieved(message: str, data: Any, meta: Optional[dict] = None) -> dict:
        """Response for inspecting existing artifacts"""
        return CommandResponse.success(message=message, data=data, meta=meta)
