"""Stable fingerprints for configurations written next to results."""

import hashlib
import json
from typing import Any

from pydantic import BaseModel


def fingerprint(model: BaseModel | dict[str, Any], length: int = 12) -> str:
    """Short sha256 of the canonical JSON form of a config."""
    payload = model.model_dump(mode="json") if isinstance(model, BaseModel) else model
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:length]
