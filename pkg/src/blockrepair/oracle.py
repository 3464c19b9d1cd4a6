"""Differential oracle synthesis.

Gold and buggy projects are each run ``R`` times per scenario. Candidate
features are read off the gold traces, restricted to signals that differ from
the buggy run in at least one rerun pair, and kept only if they hold on
enough gold reruns and on few enough buggy reruns. Threshold checks use exact
fractions so that, for example, 4.5/5 never rounds its way across a boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from . import canonical
from .errors import MalformedJson, NoDiscriminatingAssertion
from .ir import signals as sig
from .ir.codec import project_digest
from .ir.model import ProjectIR
from .vm.assertions import FEATURE_KINDS, Assertion, Feature, evaluate, values_equal
from .vm.interpreter import run_reruns
from .vm.scenario import Scenario
from .vm.trace import Trace

MAX_ASSERTIONS_PER_SCENARIO = 5


@dataclass(frozen=True)
class SynthConfig:
    R: int = 5
    theta_pass: float = 0.9
    theta_fail: float = 0.1
    H: int = 2000
    checkpoint_interval: int = 10

    def __post_init__(self) -> None:
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if not 0 <= self.theta_fail < self.theta_pass <= 1:
            raise ValueError("thresholds must satisfy 0 <= theta_fail < theta_pass <= 1")
        if self.H <= 0 or self.checkpoint_interval <= 0:
            raise ValueError("tick budget and checkpoint interval must be positive")

    @property
    def pass_bound(self) -> Fraction:
        return Fraction(str(self.theta_pass))

    @property
    def fail_bound(self) -> Fraction:
        return Fraction(str(self.theta_fail))

    def to_dict(self) -> dict[str, Any]:
        return {
            "R": self.R,
            "theta_pass": self.theta_pass,
            "theta_fail": self.theta_fail,
            "H": self.H,
            "checkpoint_interval": self.checkpoint_interval,
        }

    def digest(self) -> str:
        return canonical.digest(self.to_dict())


@dataclass(frozen=True)
class TestSuite:
    scenarios: tuple[Scenario, ...]
    assertions: tuple[Assertion, ...]
    config: dict = field(default_factory=dict)
    config_digest: str = ""

    __test__ = False  # not a pytest class

    def scenario(self, sid: str) -> Scenario:
        for s in self.scenarios:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def assertions_for(self, sid: str) -> list[Assertion]:
        return [a for a in self.assertions if a.scenario_id == sid]

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenarios": [s.to_dict() for s in self.scenarios],
            "assertions": [a.to_dict() for a in self.assertions],
            "synthesis_config": self.config,
            "config_digest": self.config_digest,
        }

    def dumps(self) -> bytes:
        return canonical.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> TestSuite:
        try:
            suite = cls(
                scenarios=tuple(Scenario.from_dict(s) for s in d["scenarios"]),
                assertions=tuple(Assertion.from_dict(a) for a in d["assertions"]),
                config=dict(d.get("synthesis_config", {})),
                config_digest=str(d.get("config_digest", "")),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedJson(f"bad test suite: {exc}") from None
        ids = {s.id for s in suite.scenarios}
        for a in suite.assertions:
            if a.scenario_id not in ids:
                raise MalformedJson(f"assertion refers to unknown scenario {a.scenario_id!r}")
        return suite

    @classmethod
    def loads(cls, data: bytes | str) -> TestSuite:
        try:
            return cls.from_dict(json.loads(data))
        except ValueError as exc:
            raise MalformedJson(f"test suite is not JSON: {exc}") from None


class TraceCache:
    """Memoizes rerun batches by (project content, scenario)."""

    def __init__(self) -> None:
        self._digests: dict[int, tuple[ProjectIR, str]] = {}
        self._runs: dict[tuple[str, bytes, int], list[Trace]] = {}

    def _digest(self, p: ProjectIR) -> str:
        hit = self._digests.get(id(p))
        if hit is None or hit[0] is not p:
            hit = (p, project_digest(p))
            self._digests[id(p)] = hit
        return hit[1]

    def reruns(self, p: ProjectIR, s: Scenario, R: int) -> list[Trace]:
        key = (self._digest(p), canonical.dumps(s.to_dict()), R)
        hit = self._runs.get(key)
        if hit is None:
            hit = run_reruns(p, s, R)
            self._runs[key] = hit
        return hit


def _run(p: ProjectIR, s: Scenario, R: int, cache: TraceCache | None) -> list[Trace]:
    return cache.reruns(p, s, R) if cache is not None else run_reruns(p, s, R)


# --- feature extraction ---------------------------------------------------------


def _first_difference(g: Trace, b: Trace, key: str) -> int | None:
    """Tick of the first checkpoint where ``key`` differs, counting a missing buggy checkpoint as different."""
    other = dict(b.checkpoints)
    for tick, snap in g.checkpoints:
        bs = other.get(tick)
        if bs is None or key not in bs or not values_equal(snap.get(key), bs[key]):
            return tick
    return None


def _final_feature(key: str, value: Any, scenario_id: str | None, rerun: int) -> Feature:
    kind, _, rest = key.partition(":")
    prov = {"scenario": scenario_id, "rerun": rerun, "at": "final"}
    special = {
        "clones": "final_clone_count",
        "visible": "final_visibility",
        "costume": "final_costume",
    }
    if kind in special:
        return Feature(special[kind], target=rest, value=value, provenance=prov)
    if key == sig.BACKDROP:
        return Feature("final_backdrop", value=value, provenance=prov)
    return Feature("final_equals", signal=key, value=value, provenance=prov)


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _series(t: Trace, key: str) -> list[tuple[int, Any]]:
    return [(tick, snap.get(key)) for tick, snap in t.checkpoints]


def extract_features(
    gold_traces: Sequence[Trace],
    buggy_traces: Sequence[Trace],
    scenario_id: str | None = None,
) -> list[Feature]:
    """Candidate features drawn from gold traces on signals that differ from buggy."""
    if not gold_traces:
        return []
    pairs = list(zip(gold_traces, buggy_traces))
    out: list[Feature] = []
    seen: set[bytes] = set()

    def emit(f: Feature) -> None:
        k = canonical.dumps(f.to_dict())
        if k not in seen:
            seen.add(k)
            out.append(f)

    keys = [k for k in gold_traces[0].checkpoints[0][1] if k != sig.BROADCASTS]
    for key in sorted(keys):
        diffs = [(r, _first_difference(g, b, key)) for r, (g, b) in enumerate(pairs, 1)]
        diffs = [(r, t) for r, t in diffs if t is not None]
        if not diffs:
            continue
        for r, g in enumerate(gold_traces, 1):
            if not g.crashed:
                emit(_final_feature(key, g.final.get(key), scenario_id, r))
        r0, tick = min(diffs, key=lambda d: (d[1], d[0]))
        for r, g in enumerate(gold_traces, 1):
            snap = g.at(tick)
            if snap is not None and key in snap:
                emit(
                    Feature(
                        "checkpoint_equals",
                        signal=key,
                        tick=tick,
                        value=snap[key],
                        provenance={"scenario": scenario_id, "rerun": r, "at": tick},
                    )
                )
        # Thresholds only for signals whose gold series is identical across
        # reruns, so the extreme value is not an artifact of one seed.
        series = [_series(g, key) for g in gold_traces]
        if any(g.crashed for g in gold_traces) or any(s != series[0] for s in series[1:]):
            continue
        nums = [(t, v) for t, v in series[0] if _is_number(v)]
        if not nums:
            continue
        hi = max(v for _, v in nums)
        lo = min(v for _, v in nums)
        hi_tick = next(t for t, v in nums if v == hi)
        lo_tick = next(t for t, v in nums if v == lo)
        prov = {"scenario": scenario_id, "rerun": 1}
        emit(Feature("reaches_threshold", signal=key, cmp=">=", value=hi, by_tick=hi_tick, provenance={**prov, "at": hi_tick}))
        emit(Feature("reaches_threshold", signal=key, cmp="<=", value=lo, by_tick=lo_tick, provenance={**prov, "at": lo_tick}))

    messages: set[str] = set()
    for g, b in pairs:
        messages.update(m for _, m in g.events_log)
        messages.update(m for _, m in b.events_log)
    for m in sorted(messages):
        g_occ = [any(x == m for _, x in g.events_log) for g in gold_traces]
        b_occ = [any(x == m for _, x in b.events_log) for b in buggy_traces]
        if all(go == bo for go, bo in zip(g_occ, b_occ)):
            continue
        prov = {"scenario": scenario_id, "at": "events"}
        if any(g_occ):
            emit(Feature("broadcast_occurred", message=m, provenance=prov))
        if not all(g_occ):
            emit(Feature("broadcast_absent", message=m, provenance=prov))
    return out


def hold_prob(f: Feature, traces: Sequence[Trace]) -> Fraction:
    if not traces:
        raise ValueError("hold_prob needs at least one trace")
    return Fraction(sum(1 for t in traces if evaluate(f, t)), len(traces))


def _rank_key(item: tuple[Feature, Fraction, Fraction]) -> tuple:
    f, pg, pb = item
    return (-(pg - pb), FEATURE_KINDS.index(f.kind), canonical.dumps(f.to_dict()))


def select_assertions(
    candidates: Iterable[Feature],
    gold_traces: Sequence[Trace],
    buggy_traces: Sequence[Trace],
    cfg: SynthConfig,
    cap: int = MAX_ASSERTIONS_PER_SCENARIO,
) -> list[Feature]:
    accepted = []
    for f in candidates:
        pg = hold_prob(f, gold_traces)
        pb = hold_prob(f, buggy_traces)
        if pg >= cfg.pass_bound and pb <= cfg.fail_bound:
            accepted.append((f, pg, pb))
    accepted.sort(key=_rank_key)
    return [f for f, _, _ in accepted[:cap]]


def synthesize(
    gold: ProjectIR,
    buggy: ProjectIR,
    scenarios: Sequence[Scenario],
    cfg: SynthConfig = SynthConfig(),
    cache: TraceCache | None = None,
    config_digest: str | None = None,
) -> TestSuite:
    """Build a rerun-stabilized differential test suite, or raise NoDiscriminatingAssertion."""
    kept: list[Scenario] = []
    assertions: list[Assertion] = []
    for s in scenarios:
        g = _run(gold, s, cfg.R, cache)
        b = _run(buggy, s, cfg.R, cache)
        chosen = select_assertions(extract_features(g, b, s.id), g, b, cfg)
        if chosen:
            kept.append(s)
            assertions.extend(Assertion(f, s.id) for f in chosen)
    if not assertions:
        raise NoDiscriminatingAssertion("no candidate separates the gold and buggy runs")
    return TestSuite(
        scenarios=tuple(kept),
        assertions=tuple(assertions),
        config=cfg.to_dict(),
        config_digest=config_digest if config_digest is not None else cfg.digest(),
    )


def rerun_outcomes(
    p: ProjectIR, suite: TestSuite, R: int, cache: TraceCache | None = None
) -> tuple[list[bool], dict[str, list[Trace]]]:
    """Per-rerun pass/fail over the whole suite, plus the traces produced."""
    ok = [True] * R
    traces: dict[str, list[Trace]] = {}
    for s in suite.scenarios:
        ts = _run(p, s, R, cache)
        traces[s.id] = ts
        for a in suite.assertions_for(s.id):
            for r, t in enumerate(ts):
                if ok[r] and not evaluate(a.feature, t):
                    ok[r] = False
    return ok, traces


def pass_rate(p: ProjectIR, suite: TestSuite, R: int, cache: TraceCache | None = None) -> Fraction:
    """Fraction of reruns in which every assertion of every scenario holds."""
    ok, _ = rerun_outcomes(p, suite, R, cache)
    return Fraction(sum(ok), R)
