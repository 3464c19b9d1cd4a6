"""Trace predicates used as test oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import MalformedJson, UnknownSignal
from ..ir import signals as sig
from .trace import Trace

FLOAT_TOLERANCE = 1e-9

# Fixed order; also the tie-break order when ranking candidates.
FEATURE_KINDS = (
    "final_equals",
    "checkpoint_equals",
    "broadcast_occurred",
    "broadcast_absent",
    "reaches_threshold",
    "final_clone_count",
    "final_visibility",
    "final_costume",
    "final_backdrop",
)

_PARAMS = {
    "final_equals": ("signal", "value"),
    "checkpoint_equals": ("signal", "tick", "value"),
    "broadcast_occurred": ("message",),
    "broadcast_absent": ("message",),
    "reaches_threshold": ("signal", "cmp", "value", "by_tick"),
    "final_clone_count": ("target", "value"),
    "final_visibility": ("target", "value"),
    "final_costume": ("target", "value"),
    "final_backdrop": ("value",),
}


@dataclass(frozen=True)
class Feature:
    kind: str
    signal: str | None = None
    value: Any = None
    tick: int | None = None
    message: str | None = None
    cmp: str | None = None
    by_tick: int | None = None
    target: str | None = None
    provenance: dict | None = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.kind not in _PARAMS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "reaches_threshold" and self.cmp not in ("<=", ">="):
            raise ValueError("threshold comparator must be '<=' or '>='")

    def signal_key(self) -> str | None:
        """The snapshot key this feature reads, if it reads one."""
        if self.signal is not None:
            return self.signal
        if self.kind == "final_clone_count":
            return sig.sprite_key("clones", str(self.target))
        if self.kind == "final_visibility":
            return sig.sprite_key("visible", str(self.target))
        if self.kind == "final_costume":
            return sig.sprite_key("costume", str(self.target))
        if self.kind == "final_backdrop":
            return sig.BACKDROP
        return None

    def to_dict(self, with_provenance: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for name in _PARAMS[self.kind]:
            out[name] = getattr(self, name)
        if with_provenance and self.provenance is not None:
            out["provenance"] = self.provenance
        return out

    @classmethod
    def from_dict(cls, d: dict) -> Feature:
        kind = d.get("kind")
        if kind not in _PARAMS:
            raise MalformedJson(f"unknown feature kind {kind!r}")
        try:
            params = {name: d[name] for name in _PARAMS[kind]}
        except KeyError as exc:
            raise MalformedJson(f"feature {kind} lacks {exc}") from None
        return cls(kind=kind, provenance=d.get("provenance"), **params)


@dataclass(frozen=True)
class Assertion:
    feature: Feature
    scenario_id: str

    def to_dict(self) -> dict[str, Any]:
        return {"scenario_id": self.scenario_id, "feature": self.feature.to_dict(with_provenance=True)}

    @classmethod
    def from_dict(cls, d: dict) -> Assertion:
        try:
            return cls(Feature.from_dict(d["feature"]), str(d["scenario_id"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedJson(f"bad assertion: {exc}") from None


def values_equal(a: Any, b: Any) -> bool:
    """Integers compare exactly, floats within 1e-9, everything else by type and value."""
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return abs(a - b) <= FLOAT_TOLERANCE
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return type(a) is type(b) and a == b


def _lookup(snapshot: dict, key: str) -> Any:
    try:
        return snapshot[key]
    except KeyError:
        raise UnknownSignal(key) from None


def _number(v: Any) -> float | None:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        return None
    return v


def check_signals(f: Feature, t: Trace) -> None:
    key = f.signal_key()
    if key is not None and t.checkpoints and key not in t.checkpoints[0][1]:
        raise UnknownSignal(key)


def evaluate(f: Feature, t: Trace) -> bool:
    """Whether ``f`` holds on ``t``. A crashed trace fails every feature."""
    check_signals(f, t)
    if t.crashed:
        return False
    kind = f.kind
    if kind == "broadcast_occurred":
        return any(m == f.message for _, m in t.events_log)
    if kind == "broadcast_absent":
        return all(m != f.message for _, m in t.events_log)
    if kind == "checkpoint_equals":
        snap = t.at(int(f.tick))
        return snap is not None and values_equal(_lookup(snap, str(f.signal)), f.value)
    if kind == "reaches_threshold":
        for tick, snap in t.checkpoints:
            if tick > f.by_tick:
                break
            n = _number(_lookup(snap, str(f.signal)))
            if n is not None and (n >= f.value if f.cmp == ">=" else n <= f.value):
                return True
        return False
    key = f.signal_key()
    return values_equal(_lookup(t.final, str(key)), f.value)


def evaluate_assertion(a: Assertion, t: Trace) -> bool:
    return evaluate(a.feature, t)
