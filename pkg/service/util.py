"""Utility functions for the service module."""

import hashlib
import json

from pydantic import BaseModel, JsonValue


def safe_ratio(numerator: float, denominator: float) -> float:
    """Divide two numbers, returning 0.0 when the denominator is zero.

    Args:
        numerator (float): The dividend.
        denominator (float): The divisor.

    Returns:
        float: The ratio or 0.0.

    """
    if denominator == 0:
        return 0.0
    return numerator / denominator


def canonical_json(data: JsonValue | BaseModel) -> str:
    """Serialize data to JSON with sorted keys so equal inputs give equal bytes."""
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def config_hash(data: JsonValue | BaseModel) -> str:
    """Return the sha256 hex digest of the canonical JSON form of data."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()
