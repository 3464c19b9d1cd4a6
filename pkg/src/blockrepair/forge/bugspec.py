"""Bug reports, ground-truth records, and generated reference semantics."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Iterable

from .. import canonical
from ..errors import MalformedJson
from ..ir import signals as sig
from ..ir.model import ProjectIR
from ..ir.refsem import Hook, ReferenceSemantics, hat_trigger, make_token, project_triggers
from ..oracle import TestSuite
from ..patch.model import Patch
from ..vm.assertions import Feature
from .patterns import BugPattern, ScriptIndex, Site

_SYMPTOMS = {
    "missing_init": "Some state does not start from the value it should.",
    "desync_missing_wait": "One part of the project moves on before another part has finished.",
    "untriggered_event": "A reaction that should happen never does.",
    "nonterminating_loop": "Something keeps running and the steps after it never happen.",
    "incorrect_conditional": "The project makes the wrong decision at some point.",
    "sprite_state_mismatch": "A sprite does not look the way it should.",
    "clone_mgmt_error": "Copies of a sprite do not behave as they should.",
    "handler_conflict": "A key press has a different effect than intended.",
}


@dataclass(frozen=True)
class BugSpec:
    model_facing: dict
    ground_truth: dict

    def to_dict(self) -> dict[str, Any]:
        return {"model_facing": self.model_facing, "ground_truth": self.ground_truth}

    @classmethod
    def from_dict(cls, d: dict) -> BugSpec:
        try:
            return cls(dict(d["model_facing"]), dict(d["ground_truth"]))
        except (KeyError, TypeError) as exc:
            raise MalformedJson(f"bad bug spec: {exc}") from None

    @classmethod
    def loads(cls, data: bytes | str) -> BugSpec:
        try:
            return cls.from_dict(json.loads(data))
        except ValueError as exc:
            raise MalformedJson(f"bug spec is not JSON: {exc}") from None


def mentions_any(text: str, ids: Iterable[str]) -> bool:
    """Whether any of ``ids`` occurs in ``text`` as a whole word."""
    return any(re.search(rf"(?<![\w]){re.escape(i)}(?![\w])", text) for i in ids)


# --- naming things for people ---------------------------------------------------


def _target_name(p: ProjectIR, tid: str) -> str:
    try:
        return p.target(tid).name
    except KeyError:
        return tid


def describe_signal(p: ProjectIR, key: str) -> str:
    kind, _, rest = key.partition(":")
    if key == sig.BACKDROP:
        return "the backdrop"
    if kind in ("var", "list"):
        for t in p.targets:
            table = t.variables if kind == "var" else t.lists
            if rest in table:
                return f"the {'variable' if kind == 'var' else 'list'} '{table[rest][0]}'"
        return f"the {kind} '{rest}'"
    labels = {
        "x": "x position",
        "y": "y position",
        "direction": "direction",
        "size": "size",
        "costume": "costume",
        "visible": "visibility",
        "clones": "number of clones",
    }
    return f"the {labels.get(kind, kind)} of '{_target_name(p, rest)}'"


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "shown" if v else "hidden"
    if isinstance(v, list) and len(v) == 2:
        return f"{v[0]} items"
    return json.dumps(v, ensure_ascii=False) if isinstance(v, str) else str(v)


def describe_feature(p: ProjectIR, f: Feature) -> str:
    k = f.kind
    if k == "broadcast_occurred":
        return f"the message '{f.message}' is sent"
    if k == "broadcast_absent":
        return f"the message '{f.message}' is never sent"
    what = describe_signal(p, str(f.signal_key()))
    if k == "checkpoint_equals":
        return f"{what} is {_fmt(f.value)} at tick {f.tick}"
    if k == "reaches_threshold":
        word = "at least" if f.cmp == ">=" else "at most"
        return f"{what} reaches {word} {_fmt(f.value)} by tick {f.by_tick}"
    if k == "final_visibility":
        return f"'{_target_name(p, str(f.target))}' ends up {_fmt(f.value)}"
    return f"{what} ends at {_fmt(f.value)}"


def describe_scenario(p: ProjectIR, sid: str) -> str:
    name, _, arg = sid.partition(":")
    if name == "idle":
        return "clicking the green flag and waiting"
    if name == "tap":
        return f"clicking the green flag, then tapping the {arg} key"
    if name == "hold":
        return f"clicking the green flag, then holding the {arg} key"
    if name == "press-seq":
        return f"clicking the green flag, then tapping the {arg} key five times"
    if name == "click":
        return f"clicking the green flag, then clicking '{_target_name(p, arg)}'"
    if name == "inject":
        return f"clicking the green flag, then sending the message '{arg}'"
    if name == "combo":
        key, _, msg = arg.partition("+")
        return f"clicking the green flag, tapping the {key} key, then sending the message '{msg}'"
    return f"running scenario {sid}"


def scenario_trigger(p: ProjectIR, sid: str) -> str:
    """The trigger token a scenario exercises beyond the green flag."""
    name, _, arg = sid.partition(":")
    if name in ("tap", "hold", "press-seq"):
        return make_token("key", arg)
    if name == "combo":
        return make_token("key", arg.partition("+")[0])
    if name == "click":
        return make_token("click", _target_name(p, arg))
    if name == "inject":
        return make_token("broadcast", arg)
    return "green_flag"


# --- records ---------------------------------------------------------------------


def _site_trigger(p: ProjectIR, site: Site) -> str | None:
    t = p.target(site.target_id)
    idx = ScriptIndex(t)
    if site.block_id not in idx.root:
        return None
    return hat_trigger(t, idx.hat(site.block_id))


def make_bugspec(
    gold: ProjectIR,
    pattern: BugPattern,
    site: Site,
    forward: Patch,
    inverse: Patch,
    suite: TestSuite,
) -> BugSpec:
    trigger = _site_trigger(gold, site)
    sids = [s.id for s in suite.scenarios]
    # Reproduce with the first scenario that exercises the faulty script's trigger.
    matching = [s for s in sids if trigger is not None and scenario_trigger(gold, s) == trigger]
    reproduce = (matching or sids)[0]
    if trigger is None:
        trigger = scenario_trigger(gold, reproduce)
    outcome = suite.assertions_for(reproduce)[0].feature
    expected = describe_feature(gold, outcome)
    model_facing = {
        "symptom": f"{_SYMPTOMS[pattern.tag]} After {describe_scenario(gold, reproduce)}, "
        f"it is not the case that {expected}.",
        "expected": f"After {describe_scenario(gold, reproduce)}, {expected}.",
        "reproduce": reproduce,
    }
    ids = forward.touched_blocks() | inverse.touched_blocks()
    if mentions_any(canonical.dumps(model_facing).decode(), ids | {pattern.tag}):
        raise ValueError("bug report leaks injection details")
    ground_truth = {
        "mechanism": pattern.tag,
        "site": {"target": site.target_id, "blocks": sorted(forward.touched_blocks())},
        "trigger": trigger,
        "outcome": outcome.to_dict(),
        "inverse_digest": canonical.digest(inverse.dumps()),
    }
    return BugSpec(model_facing, ground_truth)


def make_refsem(gold: ProjectIR, suite: TestSuite) -> ReferenceSemantics:
    """A reference semantics record built from the project's hooks and the suite's gold facts."""
    triggers = {tok: tids for tok, tids in project_triggers(gold).items() if tids}
    by_token: dict[str, list[dict]] = {}
    signals: set[str] = set()
    for a in suite.assertions:
        tok = scenario_trigger(gold, a.scenario_id)
        d = a.feature.to_dict()
        if tok in triggers and d not in by_token.setdefault(tok, []):
            by_token[tok].append(d)
        key = a.feature.signal_key()
        if key is not None:
            signals.add(key)
    hooks = tuple(Hook(tok, tuple(triggers[tok]), tuple(by_token.get(tok, ()))) for tok in sorted(triggers))
    roles = []
    for t in gold.sprites:
        toks = sorted({tok for tok, tids in triggers.items() if t.id in tids})
        roles.append((t.id, f"{t.name} reacts to {', '.join(toks)}" if toks else f"{t.name} has no scripts of its own"))
    names = ", ".join(t.name for t in gold.sprites) or "no sprites"
    goal = f"A project with {len(gold.sprites)} sprite(s) ({names}) driven by {', '.join(sorted(triggers)) or 'nothing'}."
    return ReferenceSemantics(goal, tuple(roles), hooks, tuple(sorted(signals)))
