"""Applying, constructing, and inverting patches."""

from __future__ import annotations

from dataclasses import replace
from typing import Any

from .. import canonical
from ..errors import MalformedJson, NonInvertibleEdit, NotApplicable, ProjectError, ResultInvalid
from ..ir.checks import check_invariants
from ..ir.codec import block_from_json, block_to_json, decode_field, decode_input, encode_field, encode_input
from ..ir.model import Block, BlockRef, ProjectIR
from .model import AtomicEdit, Patch


def fragment_ids(blocks: dict[str, Block], root: str) -> list[str]:
    """The root plus every block nested in its inputs; a hat also takes its whole script."""
    out: list[str] = []
    stack = [root]
    include_next = blocks[root].is_hat
    while stack:
        bid = stack.pop()
        out.append(bid)
        b = blocks[bid]
        stack.extend(cid for _, cid in b.child_refs())
        if b.next is not None and (bid != root or include_next):
            stack.append(b.next)
    return out


def _linkage(blocks: dict[str, Block], bid: str) -> tuple[str | None, str | None, str | None]:
    b = blocks[bid]
    nxt = None if b.is_hat else b.next
    if b.parent is None:
        return None, None, nxt
    par = blocks[b.parent]
    if par.next == bid:
        return par.id, None, nxt
    for name, cid in par.child_refs():
        if cid == bid:
            return par.id, name, nxt
    raise NotApplicable(-1, f"block {bid!r} is not linked from its parent")


def _fragment_json(blocks: dict[str, Block], bid: str) -> dict[str, dict]:
    ids = fragment_ids(blocks, bid)
    out = {}
    for i in ids:
        rec = block_to_json(blocks[i])
        if i == bid:
            rec["parent"] = None
            rec["topLevel"] = blocks[i].is_hat
            if not blocks[i].is_hat:
                rec["next"] = None
        out[i] = rec
    return out


# --- constructors (used by the forge) ----------------------------------------------


def make_remove(p: ProjectIR, sprite_id: str, block_id: str) -> AtomicEdit:
    blocks = p.target(sprite_id).blocks
    parent, slot, nxt = _linkage(blocks, block_id)
    return AtomicEdit(
        "remove",
        sprite_id,
        block_id,
        blocks=_fragment_json(blocks, block_id),
        parent=parent,
        input=slot,
        next=nxt,
    )


def make_modify(p: ProjectIR, sprite_id: str, block_id: str, path: str, new_value: Any) -> AtomicEdit:
    b = p.target(sprite_id).blocks[block_id]
    return AtomicEdit("modify", sprite_id, block_id, path=path, old_value=read_path(b, path), new_value=new_value)


def read_path(b: Block, path: str) -> Any:
    """Encoded value at ``path`` (``None`` when absent)."""
    if path == "opcode":
        return b.opcode
    kind, _, name = path.partition(":")
    if kind == "field":
        f = b.fields.get(name)
        return None if f is None else encode_field(f)
    if kind == "input":
        v = b.inputs.get(name)
        return None if v is None else encode_input(v)
    raise ValueError(f"bad path {path!r}")


# --- application -------------------------------------------------------------------


class _Work:
    """Copy-on-write view of the project's per-target block maps."""

    def __init__(self, p: ProjectIR):
        self.p = p
        self.ids = {t.id for t in p.targets}
        self.blocks: dict[str, dict[str, Block]] = {}
        self.all_ids = {b.id for _, b in p.iter_blocks()}

    def target_blocks(self, tid: str, index: int) -> dict[str, Block]:
        if tid not in self.ids:
            raise NotApplicable(index, f"unknown target {tid!r}")
        if tid not in self.blocks:
            self.blocks[tid] = dict(self.p.target(tid).blocks)
        return self.blocks[tid]

    def result(self) -> ProjectIR:
        targets = tuple(
            replace(t, blocks=self.blocks[t.id]) if t.id in self.blocks else t for t in self.p.targets
        )
        return replace(self.p, targets=targets)


def _set(blocks: dict[str, Block], bid: str, **changes: Any) -> None:
    blocks[bid] = replace(blocks[bid], **changes)


def _with_input(b: Block, name: str, value) -> dict:
    inputs = dict(b.inputs)
    if value is None:
        inputs.pop(name, None)
    else:
        inputs[name] = value
    return inputs


def _apply_remove(w: _Work, i: int, e: AtomicEdit) -> None:
    blocks = w.target_blocks(e.sprite_id, i)
    if e.block_id not in blocks:
        raise NotApplicable(i, f"unknown block {e.block_id!r}")
    parent, slot, nxt = _linkage(blocks, e.block_id)
    if e.has_linkage and (e.parent, e.input, e.next) != (parent, slot, nxt):
        raise NotApplicable(i, "recorded linkage does not match the project")
    if e.blocks is not None and canonical.dumps(e.blocks) != canonical.dumps(_fragment_json(blocks, e.block_id)):
        raise NotApplicable(i, "recorded blocks do not match the project")

    for bid in fragment_ids(blocks, e.block_id):
        del blocks[bid]
        w.all_ids.discard(bid)
    if parent is None:
        if nxt is not None:
            _set(blocks, nxt, parent=None, top_level=True)
        return
    par = blocks[parent]
    if slot is None:
        _set(blocks, parent, next=nxt)
    else:
        _set(blocks, parent, inputs=_with_input(par, slot, BlockRef(nxt) if nxt else None))
    if nxt is not None:
        _set(blocks, nxt, parent=parent)


def _apply_add(w: _Work, i: int, e: AtomicEdit) -> None:
    blocks = w.target_blocks(e.sprite_id, i)
    try:
        frag = {bid: block_from_json(bid, rec) for bid, rec in (e.blocks or {}).items()}
    except (MalformedJson, KeyError, TypeError) as exc:
        raise NotApplicable(i, f"bad block payload: {exc}") from None
    for bid in frag:
        if bid in w.all_ids:
            raise NotApplicable(i, f"block id {bid!r} already exists")
    root = frag[e.block_id]
    if e.next is not None and root.next is not None:
        raise NotApplicable(i, "root declares next twice")
    if e.next is not None and e.next not in blocks:
        raise NotApplicable(i, f"unknown next block {e.next!r}")

    if e.parent is None:
        if e.input is not None:
            raise NotApplicable(i, "an input slot needs a parent")
        if e.next is not None:
            n = blocks[e.next]
            if not n.top_level or n.is_hat:
                raise NotApplicable(i, f"{e.next!r} is not the head of a detached stack")
        root = replace(root, parent=None, top_level=True)
    else:
        if e.parent not in blocks:
            raise NotApplicable(i, f"unknown parent block {e.parent!r}")
        par = blocks[e.parent]
        if e.input is None:
            if par.next != e.next:
                raise NotApplicable(i, f"parent's next is {par.next!r}, not {e.next!r}")
            _set(blocks, e.parent, next=e.block_id)
        else:
            cur = par.inputs.get(e.input)
            occupant = cur.block_id if isinstance(cur, BlockRef) else None
            if occupant != e.next:
                raise NotApplicable(i, f"slot {e.input} holds {occupant!r}, not {e.next!r}")
            _set(blocks, e.parent, inputs=_with_input(par, e.input, BlockRef(e.block_id)))
        root = replace(root, parent=e.parent, top_level=False)
    if e.next is not None:
        root = replace(root, next=e.next)
        _set(blocks, e.next, parent=e.block_id, top_level=False)
    frag[e.block_id] = root
    blocks.update(frag)
    w.all_ids.update(frag)


def _apply_modify(w: _Work, i: int, e: AtomicEdit) -> None:
    blocks = w.target_blocks(e.sprite_id, i)
    b = blocks.get(e.block_id)
    if b is None:
        raise NotApplicable(i, f"unknown block {e.block_id!r}")
    path = str(e.path)
    try:
        current = read_path(b, path)
    except ValueError as exc:
        raise NotApplicable(i, str(exc)) from None
    if canonical.dumps(current) != canonical.dumps(e.old_value):
        raise NotApplicable(i, f"{path} is {current!r}, not {e.old_value!r}")
    new = e.new_value
    try:
        if path == "opcode":
            if not isinstance(new, str):
                raise NotApplicable(i, "opcode must be a string")
            blocks[e.block_id] = replace(b, opcode=new)
            return
        kind, _, name = path.partition(":")
        if kind == "field":
            fields = dict(b.fields)
            if new is None:
                fields.pop(name, None)
            else:
                fields[name] = decode_field(new, f"edit #{i}")
            blocks[e.block_id] = replace(b, fields=fields)
        else:
            value = None if new is None else decode_input(new, f"edit #{i}")
            blocks[e.block_id] = replace(b, inputs=_with_input(b, name, value))
    except MalformedJson as exc:
        raise NotApplicable(i, exc.detail) from None


def apply_patch(p: ProjectIR, patch: Patch) -> ProjectIR:
    """Apply every edit in order; any failure aborts the whole patch."""
    w = _Work(p)
    for i, e in enumerate(patch.edits):
        if e.kind == "remove":
            _apply_remove(w, i, e)
        elif e.kind == "add":
            _apply_add(w, i, e)
        else:
            _apply_modify(w, i, e)
    result = w.result()
    try:
        check_invariants(result)
    except ProjectError as exc:
        raise ResultInvalid(str(exc)) from None
    return result


# --- inversion ---------------------------------------------------------------------


def invert_edit(e: AtomicEdit, index: int = 0) -> AtomicEdit:
    if e.kind == "modify":
        if not e.has_old:
            raise NonInvertibleEdit(index, "modify lacks its prior value")
        return replace(e, old_value=e.new_value, new_value=e.old_value)
    if e.blocks is None or not e.has_linkage:
        raise NonInvertibleEdit(index, f"{e.kind} lacks recorded blocks and linkage")
    return replace(e, kind="add" if e.kind == "remove" else "remove")


def inverse_patch(forward: Patch) -> Patch:
    n = len(forward.edits)
    edits = tuple(invert_edit(forward.edits[i], i) for i in range(n - 1, -1, -1))
    return replace(forward, edits=edits)
