"""Interaction scenarios: tick-stamped input events plus a seed policy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from ..errors import MalformedJson
from ..ir.catalog import KEY_NAMES


@dataclass(frozen=True)
class GreenFlag:
    type = "green_flag"


@dataclass(frozen=True)
class KeyDown:
    key: str
    type = "key_down"


@dataclass(frozen=True)
class KeyUp:
    key: str
    type = "key_up"


@dataclass(frozen=True)
class SpriteClick:
    target_id: str
    type = "sprite_click"


@dataclass(frozen=True)
class InjectBroadcast:
    message: str
    type = "broadcast"


InputEvent = Union[GreenFlag, KeyDown, KeyUp, SpriteClick, InjectBroadcast]


def event_to_dict(e: InputEvent) -> dict[str, Any]:
    out: dict[str, Any] = {"type": e.type}
    if isinstance(e, (KeyDown, KeyUp)):
        out["key"] = e.key
    elif isinstance(e, SpriteClick):
        out["target"] = e.target_id
    elif isinstance(e, InjectBroadcast):
        out["message"] = e.message
    return out


def event_from_dict(d: dict) -> InputEvent:
    kind = d.get("type")
    try:
        if kind == "green_flag":
            return GreenFlag()
        if kind == "key_down":
            return KeyDown(str(d["key"]))
        if kind == "key_up":
            return KeyUp(str(d["key"]))
        if kind == "sprite_click":
            return SpriteClick(str(d["target"]))
        if kind == "broadcast":
            return InjectBroadcast(str(d["message"]))
    except KeyError as exc:
        raise MalformedJson(f"event {d!r} lacks {exc}") from None
    raise MalformedJson(f"unknown event type {kind!r}")


@dataclass(frozen=True)
class SeedPolicy:
    """``per_rerun`` uses seed ``seed + r`` for rerun ``r``; ``fixed`` uses one seed throughout."""

    kind: str = "per_rerun"
    seed: int = 0

    def seed_for(self, rerun: int) -> int:
        return self.seed if self.kind == "fixed" else self.seed + rerun

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "seed": self.seed}


@dataclass(frozen=True)
class Scenario:
    id: str
    events: tuple[tuple[int, InputEvent], ...]
    tick_budget: int = 2000
    checkpoint_interval: int = 10
    seed_policy: SeedPolicy = SeedPolicy()

    def __post_init__(self) -> None:
        if self.tick_budget <= 0:
            raise ValueError("tick budget must be positive")
        if self.checkpoint_interval <= 0:
            raise ValueError("checkpoint interval must be positive")
        last = 0
        for tick, ev in self.events:
            if not 0 <= tick <= self.tick_budget:
                raise ValueError(f"event tick {tick} outside [0, {self.tick_budget}]")
            if tick < last:
                raise ValueError("events must be sorted by tick")
            last = tick
            if isinstance(ev, (KeyDown, KeyUp)) and ev.key not in KEY_NAMES:
                raise ValueError(f"unknown key name {ev.key!r}")
        if self.seed_policy.kind not in ("per_rerun", "fixed"):
            raise ValueError(f"unknown seed policy {self.seed_policy.kind!r}")

    def checkpoint_ticks(self) -> list[int]:
        ticks = list(range(0, self.tick_budget + 1, self.checkpoint_interval))
        if ticks[-1] != self.tick_budget:
            ticks.append(self.tick_budget)
        return ticks

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "events": [{"tick": t, **event_to_dict(e)} for t, e in self.events],
            "tick_budget": self.tick_budget,
            "checkpoint_interval": self.checkpoint_interval,
            "seed_policy": self.seed_policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        try:
            sp = d.get("seed_policy") or {}
            return cls(
                id=str(d["id"]),
                events=tuple((int(e["tick"]), event_from_dict(e)) for e in d.get("events", ())),
                tick_budget=int(d.get("tick_budget", 2000)),
                checkpoint_interval=int(d.get("checkpoint_interval", 10)),
                seed_policy=SeedPolicy(sp.get("kind", "per_rerun"), int(sp.get("seed", 0))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedJson(f"bad scenario: {exc}") from None
