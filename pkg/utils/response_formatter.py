"""Helpers for formatting API responses consistently."""

import math
from typing import Any, Dict, Optional

import numpy as np
from flask import jsonify


def to_json_safe(value: Any) -> Any:
    """
    Convert numpy scalars and arrays to plain Python and replace non-finite
    floats (an infinite Rician factor, say) with their string names so the
    body stays valid JSON.
    """
    if isinstance(value, dict):
        return {str(k): to_json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return {"re": to_json_safe(value.real), "im": to_json_safe(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def success_response(
    data: Optional[Any] = None,
    message: Optional[str] = None,
    status_code: int = 200
) -> tuple:
    """
    Format a success response.

    Args:
        data: Optional data to include in the response
        message: Optional success message
        status_code: HTTP status code (default: 200)

    Returns:
        Tuple of (JSON response, status code)
    """
    response: Dict[str, Any] = {
        "status": "success"
    }

    if data is not None:
        response["data"] = to_json_safe(data)

    if message:
        response["message"] = message

    return jsonify(response), status_code


def error_response(
    message: str,
    status_code: int = 400,
    data: Optional[Any] = None
) -> tuple:
    """
    Format an error response.

    Args:
        message: Error message to include
        status_code: HTTP status code (default: 400)
        data: Optional additional error data

    Returns:
        Tuple of (JSON response, status code)
    """
    response: Dict[str, Any] = {
        "status": "error",
        "message": message
    }

    if data is not None:
        response["data"] = to_json_safe(data)

    return jsonify(response), status_code
