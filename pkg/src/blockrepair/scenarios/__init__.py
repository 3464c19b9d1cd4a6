"""Interaction metadata extraction and template-based scenario instantiation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import product
from typing import Any

from ..ir.model import ProjectIR
from ..vm.scenario import Scenario, SeedPolicy, event_from_dict

DEFAULT_KEY = "space"


@dataclass(frozen=True)
class InteractionMetadata:
    keys: frozenset[str] = frozenset()
    clickable_sprites: frozenset[str] = frozenset()
    messages: frozenset[str] = frozenset()
    has_green_flag: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "keys": sorted(self.keys),
            "clickable_sprites": sorted(self.clickable_sprites),
            "messages": sorted(self.messages),
            "has_green_flag": self.has_green_flag,
        }


@dataclass(frozen=True)
class ScenarioTemplate:
    name: str
    slot: str | None
    events: tuple[dict, ...] = field(default=())

    def slots(self) -> tuple[str, ...]:
        return tuple(self.slot.split("+")) if self.slot else ()


def extract_metadata(p: ProjectIR) -> InteractionMetadata:
    keys: set[str] = set()
    clickable: set[str] = set()
    messages: set[str] = set()
    flag = False
    any_key = False
    for t in p.targets:
        for b in t.blocks.values():
            op = b.opcode
            if op == "event_whenflagclicked":
                flag = True
            elif op == "event_whenkeypressed":
                k = str(b.fields["KEY_OPTION"].value) if "KEY_OPTION" in b.fields else ""
                if k == "any":
                    any_key = True
                elif k:
                    keys.add(k)
            elif op == "event_whenthisspriteclicked" and not t.is_stage:
                clickable.add(t.id)
            f = b.fields.get("BROADCAST_OPTION")
            if f is not None:
                messages.add(str(f.value))
    if any_key and not keys:
        # A lone "any key" hat still needs some key to be pressed.
        keys.add(DEFAULT_KEY)
    return InteractionMetadata(frozenset(keys), frozenset(clickable), frozenset(messages), flag)


def load_templates(path: str | None = None) -> list[ScenarioTemplate]:
    """Load a template library (the bundled one by default)."""
    if path is None:
        text = resources.files(__package__).joinpath("templates.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    return [ScenarioTemplate(t["name"], t.get("slot"), tuple(t["events"])) for t in doc["templates"]]


def _fill(event: dict, binding: dict[str, str]) -> dict:
    out = {}
    for k, v in event.items():
        if isinstance(v, str) and v.startswith("$"):
            v = binding[v[1:]]
        out[k] = v
    return out


def instantiate(
    templates: list[ScenarioTemplate],
    m: InteractionMetadata,
    H: int = 2000,
    checkpoint_interval: int = 10,
    seed_policy: SeedPolicy = SeedPolicy(),
) -> list[Scenario]:
    """Expand every template over all parameter combinations, dropping duplicates."""
    pools = {
        "key": sorted(m.keys),
        "sprite": sorted(m.clickable_sprites),
        "message": sorted(m.messages),
    }
    out: list[Scenario] = []
    seen: set[str] = set()
    for tpl in templates:
        slots = tpl.slots()
        for combo in product(*(pools[s] for s in slots)):
            binding = dict(zip(slots, combo))
            events = [_fill(e, binding) for e in tpl.events]
            if any(e["tick"] > H for e in events):
                continue
            sig = json.dumps(events, sort_keys=True)
            if sig in seen:
                continue
            seen.add(sig)
            sid = tpl.name if not combo else f"{tpl.name}:{'+'.join(combo)}"
            out.append(
                Scenario(
                    id=sid,
                    events=tuple((int(e["tick"]), event_from_dict(e)) for e in events),
                    tick_budget=H,
                    checkpoint_interval=checkpoint_interval,
                    seed_policy=seed_policy,
                )
            )
    return out


def dedupe(scenarios: list[Scenario]) -> list[Scenario]:
    seen: set[tuple] = set()
    out = []
    for s in scenarios:
        if s.events not in seen:
            seen.add(s.events)
            out.append(s)
    return out
