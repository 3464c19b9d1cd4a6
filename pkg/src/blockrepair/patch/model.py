"""Patch data model and schema validation.

A patch is an ordered list of atomic edits against one project:

* ``modify`` replaces one addressed part of a block (``opcode``,
  ``field:NAME`` or ``input:NAME``). ``old_value`` must echo what is being
  replaced; ``null`` as a value means "absent".
* ``remove`` deletes a block together with everything nested in its inputs
  and reconnects its neighbours. Removing a hat removes its whole script.
  The removed ``blocks`` and their linkage may be recorded for inversion.
* ``add`` inserts a fragment of blocks whose root is ``block_id`` at the
  declared linkage: ``parent`` (or ``null`` for a top-level stack),
  ``input`` (the parent's slot, or ``null`` to follow the parent in its
  stack), and ``next`` (the block that will follow the root).

Field values are encoded ``[value, ref]`` and input values use the same
encoding as the project file (``[1, [4, n]]``, ``[2, block_id]``, ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any

import jsonschema

from .. import canonical
from ..errors import DuplicateTarget, SchemaInvalid


@dataclass(frozen=True)
class AtomicEdit:
    kind: str
    sprite_id: str
    block_id: str
    path: str | None = None
    old_value: Any = None
    new_value: Any = None
    blocks: dict | None = None
    parent: str | None = None
    input: str | None = None
    next: str | None = None
    has_old: bool = True
    has_linkage: bool = True

    @property
    def target_path(self) -> str:
        return self.path if self.kind == "modify" else "block"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "sprite_id": self.sprite_id, "block_id": self.block_id}
        if self.kind == "modify":
            out.update(path=self.path, old_value=self.old_value, new_value=self.new_value)
            return out
        if self.blocks is not None:
            out["blocks"] = self.blocks
        if self.has_linkage:
            out.update(parent=self.parent, input=self.input, next=self.next)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> AtomicEdit:
        if d["kind"] == "modify":
            return cls(
                "modify",
                d["sprite_id"],
                d["block_id"],
                path=d["path"],
                old_value=d["old_value"],
                new_value=d["new_value"],
            )
        return cls(
            d["kind"],
            d["sprite_id"],
            d["block_id"],
            blocks=d.get("blocks"),
            parent=d.get("parent"),
            input=d.get("input"),
            next=d.get("next"),
            has_linkage=any(k in d for k in ("parent", "input", "next")),
        )


@dataclass(frozen=True)
class Patch:
    edits: tuple[AtomicEdit, ...] = ()
    source: str = "model"
    config_digest: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"edits": [e.to_dict() for e in self.edits], "source": self.source}
        if self.config_digest is not None:
            out["config_digest"] = self.config_digest
        return out

    def dumps(self) -> bytes:
        return canonical.dumps(self.to_dict())

    def touched_blocks(self) -> set[str]:
        """Every block id this patch names, including ids inside add/remove fragments."""
        ids: set[str] = set()
        for e in self.edits:
            ids.add(e.block_id)
            if e.blocks:
                ids.update(e.blocks)
        return ids


@lru_cache(maxsize=1)
def patch_schema() -> dict:
    text = resources.files("blockrepair").joinpath("schemas/patch.schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def _validator() -> jsonschema.Draft202012Validator:
    return jsonschema.Draft202012Validator(patch_schema())


def patch_from_obj(doc: Any) -> Patch:
    errors = sorted(_validator().iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise SchemaInvalid(f"{where}: {first.message}")
    if isinstance(doc, list):
        raw_edits, source, digest = doc, "model", None
    else:
        raw_edits, source, digest = doc["edits"], doc.get("source", "model"), doc.get("config_digest")
    edits = tuple(AtomicEdit.from_dict(d) for d in raw_edits)
    seen: set[tuple[str, str]] = set()
    for i, e in enumerate(edits):
        if e.kind == "modify" and canonical.dumps(e.old_value) == canonical.dumps(e.new_value):
            raise SchemaInvalid(f"{i}: modify must change the value")
        if e.kind == "add" and e.block_id not in (e.blocks or {}):
            raise SchemaInvalid(f"{i}: add fragment does not contain its root {e.block_id!r}")
        key = (e.block_id, e.target_path)
        if key in seen:
            raise DuplicateTarget(*key)
        seen.add(key)
    return Patch(edits, source, digest)


def validate_patch(data: bytes | str) -> Patch:
    """Parse and schema-check patch bytes."""
    try:
        doc = json.loads(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaInvalid(f"not JSON: {exc}") from None
    return patch_from_obj(doc)
