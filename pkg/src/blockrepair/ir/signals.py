"""Names of the VM-observable state signals.

A signal key is a short string such as ``"var:score_id"`` or ``"x:Bird"``.
The VM writes snapshots keyed this way; assertions, drift, and reference
semantics records all refer to signals by these keys.
"""

from __future__ import annotations

from .model import ProjectIR

SPRITE_SIGNALS = ("x", "y", "direction", "size", "costume", "visible", "clones")
BROADCASTS = "broadcasts"
BACKDROP = "backdrop"

# Signals compared as categories rather than magnitudes.
CATEGORICAL_PREFIXES = ("costume", "visible", "backdrop", "list")


def var_key(var_id: str) -> str:
    return f"var:{var_id}"


def list_key(list_id: str) -> str:
    return f"list:{list_id}"


def sprite_key(attr: str, target_id: str) -> str:
    return f"{attr}:{target_id}"


def signal_kind(key: str) -> str:
    return key.split(":", 1)[0]


def project_signals(p: ProjectIR) -> list[str]:
    """Every signal a snapshot of ``p`` contains, in a fixed order."""
    keys: list[str] = []
    for t in p.targets:
        keys.extend(var_key(v) for v in t.variables)
        keys.extend(list_key(lid) for lid in t.lists)
    for t in p.sprites:
        keys.extend(sprite_key(a, t.id) for a in SPRITE_SIGNALS)
    keys.append(BACKDROP)
    keys.append(BROADCASTS)
    return keys
