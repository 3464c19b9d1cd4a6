"""Repair scoring: does a patch fix the bug, how far is it from the gold fix, and how much else did it change."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

from ..errors import DuplicateTarget, MisalignedTraces, NotApplicable, ResultInvalid, SchemaInvalid
from ..forge.engine import BugInstance
from ..ir import signals as sig
from ..oracle import TraceCache, rerun_outcomes
from ..patch.apply import apply_patch
from ..patch.model import Patch, validate_patch
from ..patch.normalize import edit_distance, normalize
from ..vm.assertions import values_equal
from ..vm.trace import Trace

FAILURE_REASONS = ("schema", "not_applicable", "crash", "assertion_failed")


@dataclass(frozen=True)
class RepairScore:
    functional_success: bool
    pass_rate: Fraction
    d_edit: int | None
    drift: float | None
    failure_reason: str | None = None
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "repair",
            "functional_success": self.functional_success,
            "pass_rate": float(self.pass_rate),
            "d_edit": self.d_edit,
            "drift": self.drift,
            "failure_reason": self.failure_reason,
            "detail": self.detail,
        }


# --- drift -------------------------------------------------------------------------------


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _scales(*trace_sets: Mapping[str, Sequence[Trace]]) -> dict[str, float]:
    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    for ts in trace_sets:
        for traces in ts.values():
            for t in traces:
                for _, snap in t.checkpoints:
                    for k, v in snap.items():
                        if _is_number(v):
                            lo[k] = min(lo.get(k, v), v)
                            hi[k] = max(hi.get(k, v), v)
    return {k: max(hi[k] - lo[k], 1.0) for k in lo}


def discrepancy(key: str, a: Any, b: Any, scale: float = 1.0) -> float:
    """Per-signal distance in [0, 1] between two snapshot values."""
    if key == sig.BROADCASTS:
        sa, sb = set(a or ()), set(b or ())
        union = sa | sb
        return 0.0 if not union else 1.0 - len(sa & sb) / len(union)
    if sig.signal_kind(key) in sig.CATEGORICAL_PREFIXES:
        return 0.0 if values_equal(a, b) else 1.0
    if _is_number(a) and _is_number(b):
        return min(abs(a - b) / scale, 1.0)
    return 0.0 if values_equal(a, b) else 1.0


def _check_grid(t: Trace, mine: dict, other: dict) -> None:
    """Every tick the other trace has must exist here, unless this trace crashed before it."""
    end = t.checkpoints[-1][0] if t.checkpoints else -1
    for tick in other:
        if tick not in mine and not (t.crashed and tick > end):
            raise MisalignedTraces(f"{t.scenario_id}: no checkpoint at tick {tick}")


def _pair_terms(a: Trace, b: Trace, scales: dict[str, float]) -> tuple[float, int]:
    sa, sb = dict(a.checkpoints), dict(b.checkpoints)
    _check_grid(a, sa, sb)
    _check_grid(b, sb, sa)
    crash_ticks = [t.checkpoints[-1][0] for t in (a, b) if t.crashed and t.checkpoints]
    crash_at = min(crash_ticks) if crash_ticks else None
    total, count = 0.0, 0
    for tick in sorted(set(sa) | set(sb)):
        va, vb = sa.get(tick), sb.get(tick)
        for key in set(va or ()) | set(vb or ()):
            count += 1
            if (crash_at is not None and tick >= crash_at) or va is None or vb is None or key not in va or key not in vb:
                total += 1.0
            else:
                total += discrepancy(key, va[key], vb[key], scales.get(key, 1.0))
    return total, count


def semantic_drift(
    patched: Mapping[str, Sequence[Trace]],
    gold: Mapping[str, Sequence[Trace]],
) -> float:
    """Flat mean of per-signal discrepancies over scenarios, reruns, checkpoints, and signals.

    Traces are paired by scenario id and rerun position; paired traces must
    share a seed. A crash in either trace counts as full discrepancy from the
    crash checkpoint onward.
    """
    if set(patched) != set(gold):
        raise MisalignedTraces("scenario sets differ")
    scales = _scales(patched, gold)
    total, count = 0.0, 0
    for sid in sorted(gold):
        ps, gs = patched[sid], gold[sid]
        if len(ps) != len(gs):
            raise MisalignedTraces(f"{sid}: {len(ps)} patched runs vs {len(gs)} gold runs")
        for p, g in zip(ps, gs):
            if p.seed != g.seed:
                raise MisalignedTraces(f"{sid}: seed {p.seed} vs {g.seed}")
            t, c = _pair_terms(p, g, scales)
            total += t
            count += c
    return 0.0 if count == 0 else total / count


# --- scoring -----------------------------------------------------------------------------


def _suite_params(bug: BugInstance, R: int | None) -> tuple[int, Fraction]:
    cfg = bug.testsuite.config
    reruns = int(R if R is not None else cfg.get("R", 5))
    return reruns, Fraction(str(cfg.get("theta_pass", 0.9)))


def score_patch(bug: BugInstance, patch: Patch, R: int | None = None, cache: TraceCache | None = None) -> RepairScore:
    """Score an already-parsed patch against ``bug``."""
    cache = TraceCache() if cache is None else cache
    reruns, theta = _suite_params(bug, R)
    d_edit = edit_distance(normalize(bug.inverse), normalize(patch))
    try:
        patched = apply_patch(bug.buggy, patch)
    except (NotApplicable, ResultInvalid) as exc:
        return RepairScore(False, Fraction(0), d_edit, None, "not_applicable", str(exc))
    ok, traces = rerun_outcomes(patched, bug.testsuite, reruns, cache)
    _, gold_traces = rerun_outcomes(bug.gold, bug.testsuite, reruns, cache)
    rate = Fraction(sum(ok), reruns)
    drift = semantic_drift(traces, gold_traces)
    if rate >= theta:
        return RepairScore(True, rate, d_edit, drift)
    crashed = any(t.crashed for ts in traces.values() for t in ts)
    return RepairScore(False, rate, d_edit, drift, "crash" if crashed else "assertion_failed")


def score_repair(bug: BugInstance, patch_bytes: bytes | str, R: int | None = None, cache: TraceCache | None = None) -> RepairScore:
    """Validate, apply to the buggy project, rerun the suite, and compare with gold. Never raises on bad patches."""
    try:
        patch = validate_patch(patch_bytes)
    except (SchemaInvalid, DuplicateTarget) as exc:
        return RepairScore(False, Fraction(0), None, None, "schema", str(exc))
    return score_patch(bug, patch, R, cache)
