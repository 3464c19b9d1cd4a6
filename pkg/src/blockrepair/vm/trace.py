"""Execution traces and their JSON Lines encoding."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .. import canonical
from ..errors import MalformedJson

Snapshot = dict[str, Any]


@dataclass(frozen=True)
class Trace:
    scenario_id: str
    seed: int
    checkpoints: tuple[tuple[int, Snapshot], ...]
    terminal: str = "completed"  # completed | crashed
    crash_reason: str | None = None
    events_log: tuple[tuple[int, str], ...] = field(default=())

    @property
    def crashed(self) -> bool:
        return self.terminal == "crashed"

    @property
    def final(self) -> Snapshot:
        return self.checkpoints[-1][1]

    def at(self, tick: int) -> Snapshot | None:
        for t, snap in self.checkpoints:
            if t == tick:
                return snap
        return None

    def relabel(self, seed: int) -> Trace:
        return Trace(self.scenario_id, seed, self.checkpoints, self.terminal, self.crash_reason, self.events_log)

    def header(self, config_digest: str = "") -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "config_digest": config_digest,
            "terminal": self.terminal,
            "crash_reason": self.crash_reason,
            "events_log": [list(e) for e in self.events_log],
        }

    def to_jsonl(self, config_digest: str = "") -> str:
        lines = [canonical.dumps_line(self.header(config_digest))]
        lines.extend(canonical.dumps_line({"tick": t, "signals": s}) for t, s in self.checkpoints)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Trace:
        try:
            rows = [json.loads(line) for line in text.splitlines() if line.strip()]
            head, body = rows[0], rows[1:]
            return cls(
                scenario_id=head["scenario_id"],
                seed=head["seed"],
                checkpoints=tuple((r["tick"], r["signals"]) for r in body),
                terminal=head["terminal"],
                crash_reason=head.get("crash_reason"),
                events_log=tuple((t, m) for t, m in head.get("events_log", ())),
            )
        except (IndexError, KeyError, ValueError, TypeError) as exc:
            raise MalformedJson(f"bad trace file: {exc}") from None
