"""The eight fault patterns: where each may be injected and what it edits.

Every operator is a short list of atomic edits touching at most three blocks
of a single target, and each edit records enough to be inverted exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from ..errors import IneligibleSite
from ..ir.catalog import SIGNAL_WRITERS
from ..ir.codec import encode_input
from ..ir.model import Block, BlockRef, Literal, ProjectIR, Target
from ..patch.apply import fragment_ids, make_modify, make_remove
from ..patch.model import AtomicEdit
from ..vm import values as val

CATALOG = (
    "missing_init",
    "desync_missing_wait",
    "untriggered_event",
    "nonterminating_loop",
    "incorrect_conditional",
    "sprite_state_mismatch",
    "clone_mgmt_error",
    "handler_conflict",
)

MAX_TOUCHED_BLOCKS = 3
SHORT_WAIT_SECONDS = 1
THRESHOLD_SHIFT = 1000


@dataclass(frozen=True)
class Site:
    pattern: str
    target_id: str
    block_id: str
    variant: str
    # How the site ranks: (hat-reachable, downstream writes, script length).
    rank: tuple[int, int, int] = field(default=(0, 0, 0), compare=False)

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "target": self.target_id, "block": self.block_id, "variant": self.variant}


@dataclass(frozen=True)
class BugPattern:
    tag: str
    operator: str
    failure_mode: str
    find: Callable[[ProjectIR], list[Site]]
    build: Callable[[ProjectIR, Site], list[AtomicEdit]]


# --- script structure ---------------------------------------------------------------


class ScriptIndex:
    """Which script each block belongs to and where it sits in that script."""

    def __init__(self, t: Target):
        self.t = t
        self.root: dict[str, str] = {}
        self.order: dict[str, int] = {}
        self.scripts: dict[str, list[str]] = {}
        for top in sorted(t.top_blocks(), key=lambda b: b.id):
            seq: list[str] = []
            self._walk(top.id, seq)
            self.scripts[top.id] = seq
            for i, bid in enumerate(seq):
                self.root[bid] = top.id
                self.order[bid] = i

    def _walk(self, bid: str | None, seq: list[str]) -> None:
        while bid is not None:
            b = self.t.blocks[bid]
            seq.append(bid)
            for _, cid in b.child_refs():
                self._walk(cid, seq)
            bid = b.next

    def hat_reachable(self, bid: str) -> bool:
        return self.t.blocks[self.root[bid]].is_hat

    def hat(self, bid: str) -> Block:
        return self.t.blocks[self.root[bid]]

    def rank(self, bid: str) -> tuple[int, int, int]:
        seq = self.scripts[self.root[bid]]
        pos = self.order[bid]
        writes = sum(1 for x in seq[pos:] if self.t.blocks[x].opcode in SIGNAL_WRITERS)
        return (int(self.hat_reachable(bid)), writes, len(seq))


def _site(pattern: str, idx: ScriptIndex, b: Block, variant: str) -> Site:
    return Site(pattern, idx.t.id, b.id, variant, idx.rank(b.id))


def _scan(p: ProjectIR, pattern: str, pick: Callable[[ProjectIR, ScriptIndex, Block], list[str]]) -> list[Site]:
    out: list[Site] = []
    for t in p.targets:
        idx = ScriptIndex(t)
        for bid in sorted(t.blocks):
            b = t.blocks[bid]
            if bid not in idx.root:
                continue
            for variant in pick(p, idx, b):
                out.append(_site(pattern, idx, b, variant))
    return out


def _removable(t: Target, bid: str) -> bool:
    return len(fragment_ids(t.blocks, bid)) <= MAX_TOUCHED_BLOCKS


def _literal(b: Block, name: str) -> Literal | None:
    v = b.inputs.get(name)
    return v if isinstance(v, Literal) else None


def _numeric_literal(b: Block, name: str) -> Literal | None:
    lit = _literal(b, name)
    return lit if lit is not None and val.is_numeric(lit.value) else None


def _perturbed(value) -> object:
    if val.is_numeric(value):
        return val.add(value, 1)
    return f"{value}_stale"


# --- missing_init -----------------------------------------------------------------


def _find_missing_init(p: ProjectIR) -> list[Site]:
    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if b.opcode != "data_setvariableto" or not idx.hat_reachable(b.id):
            return []
        if _literal(b, "VALUE") is None:
            return []
        return ["remove", "perturb"] if _removable(idx.t, b.id) else ["perturb"]

    return _scan(p, "missing_init", pick)


def _build_missing_init(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    if s.variant == "remove":
        return [make_remove(p, s.target_id, s.block_id)]
    b = p.target(s.target_id).blocks[s.block_id]
    wrong = _perturbed(_literal(b, "VALUE").value)
    return [make_modify(p, s.target_id, s.block_id, "input:VALUE", encode_input(Literal(wrong)))]


# --- desync_missing_wait ----------------------------------------------------------


def _find_desync(p: ProjectIR) -> list[Site]:
    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if b.opcode == "event_broadcastandwait":
            return ["drop_barrier"]
        if b.opcode == "control_wait" and _removable(idx.t, b.id):
            lit = _numeric_literal(b, "DURATION")
            if lit is not None and 0 < val.to_number(lit.value) <= SHORT_WAIT_SECONDS:
                return ["remove_wait"]
        return []

    return _scan(p, "desync_missing_wait", pick)


def _build_desync(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    if s.variant == "drop_barrier":
        return [make_modify(p, s.target_id, s.block_id, "opcode", "event_broadcast")]
    return [make_remove(p, s.target_id, s.block_id)]


# --- untriggered_event --------------------------------------------------------------


def _receivers(p: ProjectIR) -> set[str]:
    out = set()
    for _, b in p.iter_blocks():
        if b.opcode == "event_whenbroadcastreceived" and "BROADCAST_OPTION" in b.fields:
            out.add(str(b.fields["BROADCAST_OPTION"].value))
    return out


def fresh_message(p: ProjectIR, base: str) -> str:
    taken = p.message_names()
    name = f"{base}_unheard"
    n = 2
    while name in taken:
        name = f"{base}_unheard{n}"
        n += 1
    return name


def _find_untriggered(p: ProjectIR) -> list[Site]:
    heard = _receivers(p)

    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if b.opcode not in ("event_broadcast", "event_broadcastandwait"):
            return []
        f = b.fields.get("BROADCAST_OPTION")
        return ["rename"] if f is not None and str(f.value) in heard else []

    return _scan(p, "untriggered_event", pick)


def _build_untriggered(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    b = p.target(s.target_id).blocks[s.block_id]
    fresh = fresh_message(p, str(b.fields["BROADCAST_OPTION"].value))
    return [make_modify(p, s.target_id, s.block_id, "field:BROADCAST_OPTION", [fresh, None])]


# --- nonterminating_loop --------------------------------------------------------------


def _threshold_operand(t: Target, loop: Block) -> tuple[Block, str, int] | None:
    """The comparison under ``loop``'s condition with a numeric literal, and which way to push it."""
    cond = loop.inputs.get("CONDITION")
    if not isinstance(cond, BlockRef):
        return None
    c = t.blocks[cond.block_id]
    if c.opcode not in ("operator_gt", "operator_lt", "operator_equals"):
        return None
    for name in ("OPERAND2", "OPERAND1"):
        if _numeric_literal(c, name) is None:
            continue
        if c.opcode == "operator_equals":
            return c, name, 1
        # Push the literal away from the side that makes the condition true.
        grows = (c.opcode == "operator_gt") == (name == "OPERAND2")
        return c, name, 1 if grows else -1
    return None


def _find_nonterminating(p: ProjectIR) -> list[Site]:
    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if b.opcode not in ("control_repeat_until", "control_wait_until"):
            return []
        out = ["threshold"] if _threshold_operand(idx.t, b) is not None else []
        if b.opcode == "control_repeat_until":
            out.append("forever")
        return out

    return _scan(p, "nonterminating_loop", pick)


def _build_nonterminating(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    t = p.target(s.target_id)
    loop = t.blocks[s.block_id]
    if s.variant == "forever":
        return [make_modify(p, s.target_id, s.block_id, "opcode", "control_forever")]
    c, name, direction = _threshold_operand(t, loop)
    lit = _numeric_literal(c, name)
    shifted = val.add(lit.value, direction * THRESHOLD_SHIFT)
    return [make_modify(p, s.target_id, c.id, f"input:{name}", encode_input(Literal(shifted)))]


# --- incorrect_conditional --------------------------------------------------------------

_FLIPS = {
    "operator_lt": "operator_gt",
    "operator_gt": "operator_lt",
    "operator_and": "operator_or",
    "operator_or": "operator_and",
}


def _condition_blocks(t: Target) -> set[str]:
    """Reporter blocks inside the condition of an if / if-else."""
    out: set[str] = set()
    for b in t.blocks.values():
        if b.opcode not in ("control_if", "control_if_else"):
            continue
        cond = b.inputs.get("CONDITION")
        stack = [cond.block_id] if isinstance(cond, BlockRef) else []
        while stack:
            bid = stack.pop()
            out.add(bid)
            stack.extend(cid for _, cid in t.blocks[bid].child_refs())
    return out


def _find_conditional(p: ProjectIR) -> list[Site]:
    cache: dict[str, set[str]] = {}

    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        conds = cache.setdefault(idx.t.id, _condition_blocks(idx.t))
        if b.id not in conds or b.opcode not in _FLIPS:
            return []
        out = ["flip"]
        if b.opcode in ("operator_lt", "operator_gt"):
            a, c = b.inputs.get("OPERAND1"), b.inputs.get("OPERAND2")
            if a != c:
                out.append("swap")
        return out

    return _scan(p, "incorrect_conditional", pick)


def _build_conditional(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    b = p.target(s.target_id).blocks[s.block_id]
    if s.variant == "flip":
        return [make_modify(p, s.target_id, s.block_id, "opcode", _FLIPS[b.opcode])]
    a, c = b.inputs.get("OPERAND1"), b.inputs.get("OPERAND2")
    enc = lambda v: None if v is None else encode_input(v)  # noqa: E731
    return [
        make_modify(p, s.target_id, s.block_id, "input:OPERAND1", enc(c)),
        make_modify(p, s.target_id, s.block_id, "input:OPERAND2", enc(a)),
    ]


# --- sprite_state_mismatch ------------------------------------------------------------


def _retarget(t: Target, value) -> object | None:
    """A different costume name for a literal costume selector, or None."""
    if len(t.costumes) < 2:
        return None
    names = [c.name for c in t.costumes]
    if isinstance(value, str) and value in names:
        i = names.index(value)
    elif val.is_numeric(value):
        i = (round(val.to_number(value)) - 1) % len(names)
    else:
        return None
    return names[(i + 1) % len(names)]


def _find_state(p: ProjectIR) -> list[Site]:
    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if not idx.hat_reachable(b.id):
            return []
        if b.opcode in ("looks_show", "looks_hide"):
            return ["remove"]
        if b.opcode == "looks_switchcostumeto":
            lit = _literal(b, "COSTUME")
            return ["retarget"] if lit is not None and _retarget(idx.t, lit.value) is not None else []
        if b.opcode == "looks_switchbackdropto":
            lit = _literal(b, "BACKDROP")
            return ["retarget"] if lit is not None and _retarget(p.stage, lit.value) is not None else []
        return []

    return _scan(p, "sprite_state_mismatch", pick)


def _build_state(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    if s.variant == "remove":
        return [make_remove(p, s.target_id, s.block_id)]
    b = p.target(s.target_id).blocks[s.block_id]
    slot, owner = ("COSTUME", p.target(s.target_id)) if b.opcode == "looks_switchcostumeto" else ("BACKDROP", p.stage)
    new = _retarget(owner, _literal(b, slot).value)
    return [make_modify(p, s.target_id, s.block_id, f"input:{slot}", encode_input(Literal(new)))]


# --- clone_mgmt_error -----------------------------------------------------------------

_CLONE_INIT = SIGNAL_WRITERS - {"control_create_clone_of", "control_delete_this_clone"}


def _find_clone(p: ProjectIR) -> list[Site]:
    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if not _removable(idx.t, b.id):
            return []
        if b.opcode == "control_delete_this_clone":
            return ["remove_delete"]
        hat = idx.hat(b.id)
        if hat.opcode == "control_start_as_clone" and b.opcode in _CLONE_INIT and hat.next == b.id:
            return ["remove_init"]
        return []

    return _scan(p, "clone_mgmt_error", pick)


def _build_clone(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    return [make_remove(p, s.target_id, s.block_id)]


# --- handler_conflict -----------------------------------------------------------------


def _find_handler(p: ProjectIR) -> list[Site]:
    def pick(p: ProjectIR, idx: ScriptIndex, b: Block) -> list[str]:
        if b.opcode != "event_whenkeypressed" or not b.top_level:
            return []
        return ["duplicate"] if len(idx.scripts[b.id]) <= MAX_TOUCHED_BLOCKS else []

    return _scan(p, "handler_conflict", pick)


def _build_handler(p: ProjectIR, s: Site) -> list[AtomicEdit]:
    t = p.target(s.target_id)
    taken = {b.id for _, b in p.iter_blocks()} | {v for tt in p.targets for v in (*tt.variables, *tt.lists)}
    taken |= set(p.broadcasts)
    ids = fragment_ids(t.blocks, s.block_id)
    suffix = "_dup"
    while any(f"{i}{suffix}" in taken for i in ids):
        suffix += "_"
    rename = {i: f"{i}{suffix}" for i in ids}
    remove = make_remove(p, s.target_id, s.block_id)
    blocks = {}
    for old, rec in remove.blocks.items():
        rec = dict(rec)
        rec["parent"] = rename.get(rec["parent"], rec["parent"])
        rec["next"] = rename.get(rec["next"], rec["next"])
        rec["inputs"] = {
            k: ([2, rename.get(v[1], v[1])] if v[0] == 2 else v) for k, v in rec["inputs"].items()
        }
        blocks[rename[old]] = rec
    return [AtomicEdit("add", s.target_id, rename[s.block_id], blocks=blocks, parent=None, input=None, next=None)]


PATTERNS: dict[str, BugPattern] = {
    "missing_init": BugPattern(
        "missing_init",
        "remove or corrupt a variable initialization",
        "state carries a stale or wrong starting value",
        _find_missing_init,
        _build_missing_init,
    ),
    "desync_missing_wait": BugPattern(
        "desync_missing_wait",
        "turn broadcast-and-wait into broadcast, or drop a short wait",
        "a sprite proceeds before another has finished",
        _find_desync,
        _build_desync,
    ),
    "untriggered_event": BugPattern(
        "untriggered_event",
        "send a message nobody listens to",
        "a handler never runs",
        _find_untriggered,
        _build_untriggered,
    ),
    "nonterminating_loop": BugPattern(
        "nonterminating_loop",
        "make a loop exit condition unreachable",
        "a script never finishes, so later steps never happen",
        _find_nonterminating,
        _build_nonterminating,
    ),
    "incorrect_conditional": BugPattern(
        "incorrect_conditional",
        "flip a comparator or logical operator, or swap operands",
        "a branch is taken under the wrong condition",
        _find_conditional,
        _build_conditional,
    ),
    "sprite_state_mismatch": BugPattern(
        "sprite_state_mismatch",
        "drop a show/hide or switch to the wrong costume",
        "a sprite looks wrong or is in the wrong visibility state",
        _find_state,
        _build_state,
    ),
    "clone_mgmt_error": BugPattern(
        "clone_mgmt_error",
        "drop a clone deletion or a clone's initialization",
        "clones pile up or start in the wrong state",
        _find_clone,
        _build_clone,
    ),
    "handler_conflict": BugPattern(
        "handler_conflict",
        "duplicate a key handler",
        "one key press triggers competing handlers",
        _find_handler,
        _build_handler,
    ),
}


def get_pattern(tag: str) -> BugPattern:
    try:
        return PATTERNS[tag]
    except KeyError:
        raise ValueError(f"unknown bug pattern {tag!r}") from None


def select_pattern(catalog: tuple[str, ...] | list[str], coverage: dict[str, int]) -> BugPattern:
    """A least-covered pattern; ties go to the earliest in ``catalog``."""
    if not catalog:
        raise ValueError("catalog is empty")
    best = min(range(len(catalog)), key=lambda i: (coverage.get(catalog[i], 0), i))
    return get_pattern(catalog[best])


def pattern_order(catalog: tuple[str, ...] | list[str], coverage: dict[str, int]) -> list[str]:
    return sorted(catalog, key=lambda tag: (coverage.get(tag, 0), list(catalog).index(tag)))


def rank_sites(p: ProjectIR, pattern: BugPattern, rng: random.Random) -> list[Site]:
    """Eligible sites, best first; ties resolved by a shuffle drawn from ``rng``."""
    sites = pattern.find(p)
    rng.shuffle(sites)
    sites.sort(key=lambda s: s.rank, reverse=True)
    return sites


def select_site(p: ProjectIR, pattern: BugPattern, rng: random.Random) -> Site | None:
    sites = rank_sites(p, pattern, rng)
    return sites[0] if sites else None


def operator_edits(p: ProjectIR, pattern: BugPattern, site: Site) -> list[AtomicEdit]:
    if site.pattern != pattern.tag or site not in pattern.find(p):
        raise IneligibleSite(f"{site.block_id!r} is not an eligible {pattern.tag} site")
    edits = pattern.build(p, site)
    touched = set()
    for e in edits:
        touched.add(e.block_id)
        touched.update(e.blocks or ())
    if len(touched) > MAX_TOUCHED_BLOCKS or len({e.sprite_id for e in edits}) != 1:
        raise IneligibleSite(f"edit at {site.block_id!r} is not local")
    return edits
