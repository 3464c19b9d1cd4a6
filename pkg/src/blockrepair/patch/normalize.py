"""Order-independent edit sets and the symmetric-difference edit distance."""

from __future__ import annotations

from typing import Any

from .. import canonical
from .model import AtomicEdit, Patch

EditKey = tuple


def structural_hash(blocks: dict[str, dict], root: str) -> str:
    """Digest of a block fragment that ignores the ids chosen for its blocks.

    Opcodes, field values, mutations, literal inputs, and the shape of nested
    blocks all count; references to blocks inside the fragment are replaced by
    the referenced block's own hash.
    """
    memo: dict[str, Any] = {}

    def shape(bid: str) -> Any:
        if bid in memo:
            return memo[bid]
        memo[bid] = None  # guards against malformed cyclic payloads
        rec = blocks[bid]
        inputs = {}
        for name, enc in sorted((rec.get("inputs") or {}).items()):
            if isinstance(enc, list) and len(enc) > 1 and enc[0] == 2 and enc[1] in blocks:
                inputs[name] = ["block", shape(enc[1])]
            else:
                inputs[name] = enc
        nxt = rec.get("next")
        out = {
            "opcode": rec.get("opcode"),
            "fields": {k: v for k, v in sorted((rec.get("fields") or {}).items())},
            "inputs": inputs,
            "mutation": rec.get("mutation"),
            "next": shape(nxt) if nxt in blocks and nxt != root else None,
        }
        memo[bid] = out
        return out

    return canonical.digest(shape(root), length=32)


def edit_key(e: AtomicEdit) -> EditKey:
    if e.kind == "modify":
        return ("modify", e.sprite_id, e.block_id, e.path, canonical.dumps_line(e.new_value))
    if e.kind == "remove":
        return ("remove", e.sprite_id, e.block_id)
    return ("add", e.sprite_id, structural_hash(e.blocks or {}, e.block_id), e.parent, e.input)


def normalize(patch: Patch) -> frozenset[EditKey]:
    return frozenset(edit_key(e) for e in patch.edits)


def edit_distance(gold: frozenset, model: frozenset) -> int:
    return len(gold ^ model)
