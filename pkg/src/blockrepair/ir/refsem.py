"""Reference semantics records and the canonical trigger vocabulary.

A reference semantics record describes what a project is meant to do: a goal
sentence, one role line per sprite, and a list of hooks (trigger token,
involved sprites, expected outcome predicates). Trigger tokens follow a small
grammar::

    green_flag | key:<key> | click:<sprite-name> | broadcast:<message> | clone_start

Arguments are lowercased with runs of whitespace replaced by ``_`` so that
``"up arrow"`` becomes ``key:up_arrow``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .model import Block, ProjectIR, Target
from .signals import project_signals

TRIGGER_KINDS = ("green_flag", "key", "click", "broadcast", "clone_start")
_NULLARY = {"green_flag", "clone_start"}


def slug(text: str) -> str:
    return "_".join(str(text).strip().lower().split())


def make_token(kind: str, arg: str | None = None) -> str:
    if kind in _NULLARY:
        return kind
    return f"{kind}:{slug(arg or '')}"


def parse_trigger(token: str) -> tuple[str, str | None] | None:
    """Split a canonical token into ``(kind, argument)``, or ``None`` if malformed."""
    if token in _NULLARY:
        return token, None
    kind, sep, arg = token.partition(":")
    if not sep or kind not in TRIGGER_KINDS or kind in _NULLARY:
        return None
    if not arg or arg != slug(arg):
        return None
    return kind, arg


def hat_trigger(t: Target, hat: Block) -> str | None:
    op = hat.opcode
    if op == "event_whenflagclicked":
        return "green_flag"
    if op == "event_whenkeypressed":
        f = hat.fields.get("KEY_OPTION")
        return make_token("key", str(f.value)) if f else None
    if op == "event_whenthisspriteclicked":
        return make_token("click", t.name)
    if op == "event_whenbroadcastreceived":
        f = hat.fields.get("BROADCAST_OPTION")
        return make_token("broadcast", str(f.value)) if f else None
    if op == "control_start_as_clone":
        return "clone_start"
    return None


def project_triggers(p: ProjectIR) -> dict[str, list[str]]:
    """Map every resolvable trigger token to the target ids that react to it."""
    out: dict[str, list[str]] = {}
    for t in p.targets:
        for hat in t.hats():
            token = hat_trigger(t, hat)
            if token is not None and t.id not in out.setdefault(token, []):
                out[token].append(t.id)
    for name in sorted(p.message_names()):
        out.setdefault(make_token("broadcast", name), [])
    return out


@dataclass(frozen=True)
class Hook:
    trigger: str
    sprites: tuple[str, ...] = ()
    outcome: tuple[dict, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"trigger": self.trigger, "sprites": list(self.sprites), "outcome": list(self.outcome)}

    @classmethod
    def from_dict(cls, d: dict) -> Hook:
        return cls(str(d["trigger"]), tuple(d.get("sprites", ())), tuple(d.get("outcome", ())))


@dataclass(frozen=True)
class ReferenceSemantics:
    project_goal: str
    roles: tuple[tuple[str, str], ...] = ()
    hooks: tuple[Hook, ...] = ()
    state_signals: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "project_goal": self.project_goal,
            "roles": [{"sprite": s, "role": r} for s, r in self.roles],
            "hooks": [h.to_dict() for h in self.hooks],
            "state_signals": list(self.state_signals),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ReferenceSemantics:
        return cls(
            project_goal=str(d.get("project_goal", "")),
            roles=tuple((str(r["sprite"]), str(r["role"])) for r in d.get("roles", ())),
            hooks=tuple(Hook.from_dict(h) for h in d.get("hooks", ())),
            state_signals=tuple(d.get("state_signals", ())),
        )

    @classmethod
    def loads(cls, data: bytes | str) -> ReferenceSemantics:
        return cls.from_dict(json.loads(data))


@dataclass(frozen=True)
class Violation:
    kind: str  # NonCanonicalTrigger | UnresolvableTrigger | UnknownSignal | UnknownTarget
    detail: str
    extra: dict = field(default_factory=dict)


def validate_reference_semantics(r: ReferenceSemantics, p: ProjectIR) -> list[Violation]:
    out: list[Violation] = []
    triggers = project_triggers(p)
    signals = set(project_signals(p))
    target_ids = {t.id for t in p.targets}

    for sid, _ in r.roles:
        if sid not in target_ids:
            out.append(Violation("UnknownTarget", sid))
    for hook in r.hooks:
        if parse_trigger(hook.trigger) is None:
            out.append(Violation("NonCanonicalTrigger", hook.trigger))
        elif hook.trigger not in triggers:
            out.append(Violation("UnresolvableTrigger", hook.trigger))
        for sid in hook.sprites:
            if sid not in target_ids:
                out.append(Violation("UnknownTarget", sid))
        for pred in hook.outcome:
            sig = pred.get("signal")
            if sig is not None and sig not in signals:
                out.append(Violation("UnknownSignal", str(sig)))
            tid = pred.get("target")
            if tid is not None and tid not in target_ids:
                out.append(Violation("UnknownTarget", str(tid)))
    for sig in r.state_signals:
        if sig not in signals:
            out.append(Violation("UnknownSignal", sig))
    return out
