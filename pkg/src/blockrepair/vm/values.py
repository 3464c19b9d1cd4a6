"""Scratch-style value coercion.

Values are Python ``int``, ``float``, ``str`` or ``bool``. Arithmetic on
non-numeric strings treats them as 0 and never fails; comparisons fall back to
case-insensitive string ordering when either side is not numeric.
"""

from __future__ import annotations

import math
import re
from typing import Any

_NUMERIC = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_HEX = re.compile(r"0[xX][0-9a-fA-F]+")
_INTEGER = re.compile(r"[+-]?\d+")
_SAFE_INT = 2**53


def tidy(n: int | float) -> int | float:
    """Keep integers as ``int`` while they are exactly representable."""
    if isinstance(n, int):
        if abs(n) < _SAFE_INT:
            return n
        try:
            return float(n)
        except OverflowError:
            return math.inf if n > 0 else -math.inf
    if n.is_integer() and abs(n) < _SAFE_INT:
        return int(n)
    return n


def parse_number(s: str) -> int | float | None:
    s = s.strip()
    if not s:
        return None
    if _INTEGER.fullmatch(s):
        return tidy(int(s))
    if _NUMERIC.fullmatch(s):
        return tidy(float(s))
    if _HEX.fullmatch(s):
        return tidy(int(s, 16))
    if s in ("Infinity", "+Infinity"):
        return math.inf
    if s == "-Infinity":
        return -math.inf
    return None


def is_numeric(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, float)):
        return not (isinstance(v, float) and math.isnan(v))
    return isinstance(v, str) and parse_number(v) is not None


def to_number(v: Any) -> int | float:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return 0 if math.isnan(v) else v
    if isinstance(v, str):
        n = parse_number(v)
        return 0 if n is None else n
    return 0


def to_bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return v != 0 and not (isinstance(v, float) and math.isnan(v))
    if isinstance(v, str):
        return v not in ("", "0") and v.lower() != "false"
    return False


def to_str(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        if v.is_integer() and abs(v) < 1e21:
            return str(int(v))
        return repr(v)
    return str(v)


def compare(a: Any, b: Any) -> int:
    """Three-way comparison with Scratch's numeric/string fallback."""
    if is_numeric(a) and is_numeric(b):
        x, y = to_number(a), to_number(b)
    else:
        x, y = to_str(a).lower(), to_str(b).lower()
    return (x > y) - (x < y)


def add(a: Any, b: Any) -> int | float:
    return _finish(to_number(a) + to_number(b))


def subtract(a: Any, b: Any) -> int | float:
    return _finish(to_number(a) - to_number(b))


def multiply(a: Any, b: Any) -> int | float:
    x, y = to_number(a), to_number(b)
    if (x == 0 and math.isinf(y)) or (y == 0 and math.isinf(x)):
        return math.nan
    return _finish(x * y)


def divide(a: Any, b: Any) -> int | float:
    x, y = to_number(a), to_number(b)
    if y == 0:
        if x == 0:
            return math.nan
        return math.inf if x > 0 else -math.inf
    if math.isinf(x) and math.isinf(y):
        return math.nan
    if isinstance(x, int) and isinstance(y, int) and x % y == 0:
        return tidy(x // y)
    return _finish(x / y)


def _finish(n: int | float) -> int | float:
    if isinstance(n, float) and math.isnan(n):
        return n
    return tidy(n)


def snapshot_value(v: Any) -> Any:
    """Encode a runtime value for a trace snapshot (JSON-safe, canonical)."""
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return tidy(v)
    return v
