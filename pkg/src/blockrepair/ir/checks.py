"""Structural invariants every :class:`ProjectIR` must satisfy.

The parser and the patch engine both funnel through :func:`check_invariants`,
so a project that exists in memory has globally unique identifiers,
bidirectional parent/next links, no cycles, and resolvable references.
"""

from __future__ import annotations

from ..errors import (
    DanglingReference,
    DuplicateIdentifier,
    LinkInconsistency,
    MalformedJson,
    UnknownOpcode,
)
from .catalog import OPCODES
from .model import Block, ListRef, ProjectIR, Target, VarRef


def _check_unique_ids(p: ProjectIR) -> None:
    seen: set[str] = set()

    def claim(ident: str) -> None:
        if ident in seen:
            raise DuplicateIdentifier(ident)
        seen.add(ident)

    target_ids: set[str] = set()
    for t in p.targets:
        if t.id in target_ids:
            raise DuplicateIdentifier(t.id)
        target_ids.add(t.id)
    for t in p.targets:
        for bid in t.blocks:
            claim(bid)
        for vid in t.variables:
            claim(vid)
        for lid in t.lists:
            claim(lid)
    for mid in p.broadcasts:
        claim(mid)


def _check_links(t: Target) -> None:
    blocks = t.blocks
    for b in blocks.values():
        if b.next is not None:
            nxt = blocks.get(b.next)
            if nxt is None:
                raise LinkInconsistency(b.id, f"next {b.next!r} does not exist")
            if nxt.parent != b.id:
                raise LinkInconsistency(nxt.id, f"{b.id!r}.next points here but parent is {nxt.parent!r}")
        for name, cid in b.child_refs():
            child = blocks.get(cid)
            if child is None:
                raise LinkInconsistency(b.id, f"input {name} references missing block {cid!r}")
            if child.parent != b.id:
                raise LinkInconsistency(cid, f"input {name} of {b.id!r} points here but parent is {child.parent!r}")

    for b in blocks.values():
        if b.parent is None:
            if not b.top_level:
                raise LinkInconsistency(b.id, "parentless block must be top-level")
            continue
        if b.top_level:
            raise LinkInconsistency(b.id, "top-level block has a parent")
        if b.is_hat:
            raise LinkInconsistency(b.id, "hat blocks cannot have a parent")
        par = blocks.get(b.parent)
        if par is None:
            raise LinkInconsistency(b.id, f"parent {b.parent!r} does not exist")
        if par.next != b.id and b.id not in {cid for _, cid in par.child_refs()}:
            raise LinkInconsistency(b.id, f"parent {b.parent!r} does not link back")

    # With consistent single-parent links, anything unreachable from a root
    # sits on a cycle.
    reached: set[str] = set()
    stack = [b.id for b in blocks.values() if b.parent is None]
    while stack:
        bid = stack.pop()
        if bid in reached:
            continue
        reached.add(bid)
        b = blocks[bid]
        if b.next is not None:
            stack.append(b.next)
        stack.extend(cid for _, cid in b.child_refs())
    for bid in blocks:
        if bid not in reached:
            raise LinkInconsistency(bid, "block lies on a cycle")


def _check_refs(p: ProjectIR, t: Target) -> None:
    stage = p.stage
    variables = set(t.variables) | set(stage.variables)
    lists = set(t.lists) | set(stage.lists)
    for b in t.blocks.values():
        _check_block_refs(b, variables, lists, p.broadcasts)


def _check_block_refs(b: Block, variables: set[str], lists: set[str], broadcasts: dict) -> None:
    f = b.fields.get("VARIABLE")
    if f is not None and f.ref not in variables:
        raise DanglingReference("variable", str(f.ref))
    f = b.fields.get("LIST")
    if f is not None and f.ref not in lists:
        raise DanglingReference("list", str(f.ref))
    f = b.fields.get("BROADCAST_OPTION")
    if f is not None and f.ref is not None and f.ref not in broadcasts:
        raise DanglingReference("broadcast", f.ref)
    for value in b.inputs.values():
        if isinstance(value, VarRef) and value.var_id not in variables:
            raise DanglingReference("variable", value.var_id)
        if isinstance(value, ListRef) and value.list_id not in lists:
            raise DanglingReference("list", value.list_id)


def _check_target_state(t: Target) -> None:
    for c in t.costumes:
        if c.width <= 0 or c.height <= 0:
            raise MalformedJson(f"target {t.name!r}: costume {c.name!r} has empty size")
    for s in t.sounds:
        if s.duration < 0:
            raise MalformedJson(f"target {t.name!r}: sound {s.name!r} has negative duration")
    if t.costumes and not 0 <= t.current_costume < len(t.costumes):
        raise MalformedJson(f"target {t.name!r}: costume index {t.current_costume} out of range")


def check_invariants(p: ProjectIR) -> None:
    """Raise the first violated invariant as a typed :class:`ProjectError`."""
    if not p.targets or not p.targets[0].is_stage:
        raise MalformedJson("the first target must be the stage")
    if any(t.is_stage for t in p.targets[1:]):
        raise MalformedJson("only one stage target is allowed")
    _check_unique_ids(p)
    for t in p.targets:
        for b in t.blocks.values():
            if b.opcode not in OPCODES:
                raise UnknownOpcode(b.opcode, b.id)
    for t in p.targets:
        _check_links(t)
    for t in p.targets:
        _check_refs(p, t)
        _check_target_state(t)
