"""Canonical JSON encoding and content digests.

Every artifact the pipeline writes goes through :func:`dumps` so that equal
content always yields equal bytes: keys sorted, no insignificant whitespace,
integral floats written as integers, non-finite numbers rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

_SAFE_INT = 2**53


def normalize(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite number {obj!r} cannot be encoded")
        if obj.is_integer() and abs(obj) < _SAFE_INT:
            return int(obj)
        return obj
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any) -> bytes:
    text = json.dumps(
        normalize(obj),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )
    return text.encode("utf-8") + b"\n"


def dumps_line(obj: Any) -> str:
    return dumps(obj).decode("utf-8").rstrip("\n")


def digest(data: bytes | Any, length: int = 16) -> str:
    """Hex SHA-256 prefix of raw bytes, or of the canonical encoding of ``data``."""
    if not isinstance(data, (bytes, bytearray)):
        data = dumps(data)
    return hashlib.sha256(data).hexdigest()[:length]
