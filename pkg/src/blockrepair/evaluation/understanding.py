"""Scoring trigger-mechanism-outcome explanations and global summaries."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .. import canonical
from ..errors import MalformedJson
from ..ir.catalog import KEY_NAMES
from ..ir.refsem import ReferenceSemantics, make_token, parse_trigger, slug
from ..vm.assertions import Feature, values_equal

# --- trigger canonicalization ------------------------------------------------------

_GREEN_FLAG = re.compile(
    r"green[\s_-]*flag|\bflag\b[^.]*\bclick|\bclick\w*\b[^.]*\bflag\b"
    r"|\b(?:game|project|program)\s+(?:starts|begins|is started|launches)\b|\bon start\b"
)
_CLONE = re.compile(r"\bclones?\b[^.]*\b(?:starts?|created|begins?)\b|\bstart\w*\s+as\s+an?\s+clone\b")
_MESSAGE_QUOTED = re.compile(
    r"\b(?:message|broadcast|signal|receiv\w*)\s*:?\s*(?:called\s+|named\s+)?[\"'“‘](?P<m>[^\"'”’]+)[\"'”’]"
)
_MESSAGE_BARE = re.compile(
    r"\b(?:message|broadcast|receives?|receiving)\s*:?\s+(?:called\s+|named\s+|the\s+message\s+)?(?P<m>[\w-]+)"
)
_CLICK_AFTER = re.compile(r"\bclick(?:s|ed|ing)?\s+(?:on\s+)?(?:the\s+)?(?P<s>[\w-]+)")
_CLICK_BEFORE = re.compile(r"\b(?P<s>[\w-]+)\s+(?:sprite\s+)?(?:is\s+|gets\s+)?clicked\b")
_NOT_SPRITES = {"the", "a", "an", "this", "that", "it", "green", "flag", "is", "sprite", "mouse", "on", "when", "gets"}
_NOT_MESSAGES = {"the", "a", "an", "is", "and", "or", "to", "message", "called", "named"}
_PRESS = r"(?:press\w*|tap\w*|hold\w*|hit\w*)"


def _key_candidates(text: str) -> set[str]:
    out: set[str] = set()
    for name in sorted(KEY_NAMES, key=len, reverse=True):
        n = re.escape(name)
        forms = [rf"\b{n}\s+key\b", rf"\bkey\s*:?\s*{n}(?=$|[\s.,;!?])"]
        if len(name) > 1:
            forms += [rf"\b{_PRESS}\s+(?:the\s+)?{n}\b", rf"\b{n}\s+(?:is\s+|gets\s+)?(?:pressed|tapped|held|hit)\b"]
        else:
            forms += [rf"\b{_PRESS}\s+(?:the\s+)?{n}(?=$|[.,;!?]|\s+(?:key|to|and|or)\b)"]
        if any(re.search(f, text) for f in forms):
            out.add(make_token("key", name))
            text = re.sub(rf"\b{n}\b", " ", text)  # "up arrow" must not also count as "up"
    return out


def _rule_candidates(text: str) -> set[str]:
    out = _key_candidates(text)
    if _GREEN_FLAG.search(text):
        out.add("green_flag")
    if _CLONE.search(text):
        out.add("clone_start")
    quoted = [m.group("m") for m in _MESSAGE_QUOTED.finditer(text)]
    bare = [m.group("m") for m in _MESSAGE_BARE.finditer(text)] if not quoted else []
    for msg in quoted + bare:
        if msg.strip() and msg not in _NOT_MESSAGES:
            out.add(make_token("broadcast", msg))
    for rx in (_CLICK_AFTER, _CLICK_BEFORE):
        for m in rx.finditer(text):
            if m.group("s") not in _NOT_SPRITES:
                out.add(make_token("click", m.group("s")))
    return out


def _direct(text: str) -> str | None:
    """``text`` already in token form, allowing case and spacing differences."""
    if slug(text) in ("green_flag", "clone_start"):
        return slug(text)
    kind, sep, arg = text.partition(":")
    if not sep or not arg.strip():
        return None
    tok = make_token(kind.strip(), arg.strip())
    return tok if parse_trigger(tok) is not None else None


def _words(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", text))


def _fuzzy(text: str, known: Iterable[str]) -> str | None:
    words = _words(text)
    hits = []
    for tok in sorted(set(known)):
        kind, arg = parse_trigger(tok) or (None, None)
        if kind is None:
            continue
        need = {"flag"} if kind == "green_flag" else {"clone"} if kind == "clone_start" else set(arg.split("_"))
        if need and need <= words:
            hits.append(tok)
    return hits[0] if len(hits) == 1 else None


def canonicalize_trigger(text: str, known: Iterable[str] = ()) -> str | None:
    """Map a free-text event description to a canonical token, or None when ambiguous or unknown.

    Synonym rules run first; if none fire, a case- and punctuation-insensitive
    word match against ``known`` tokens is accepted only when exactly one matches.
    """
    low = " ".join(str(text).lower().split())
    if not low:
        return None
    tok = _direct(low)
    if tok is not None:
        return tok
    cands = _rule_candidates(low)
    if len(cands) == 1:
        return cands.pop()
    if cands:
        return None
    return _fuzzy(low, known)


# --- judge seam ----------------------------------------------------------------------


@dataclass(frozen=True)
class JudgeVerdict:
    correct: bool
    score: int | None = None  # 1-5 rubric score when the judge gives one
    needs_judge: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {"correct": self.correct, "score": self.score, "needs_judge": self.needs_judge}

    @classmethod
    def from_dict(cls, d: dict) -> JudgeVerdict:
        score = d.get("score")
        if score is not None and not (isinstance(score, int) and 1 <= score <= 5):
            raise MalformedJson(f"judge score must be an integer 1-5, got {score!r}")
        return cls(bool(d["correct"]), score, bool(d.get("needs_judge", False)))


# A judge compares a candidate text with a reference text.
Judge = Callable[[str, str], JudgeVerdict]


def judge_request(candidate: str, reference: str) -> dict[str, str]:
    """The JSON request body a judge receives."""
    return {"candidate": candidate, "reference": reference}


def null_judge(candidate: str, reference: str) -> JudgeVerdict:
    """Defers every free-text comparison."""
    return JudgeVerdict(False, None, True)


# --- TMO answers -----------------------------------------------------------------------


@dataclass(frozen=True)
class TmoAnswer:
    trigger: str
    mechanism: str
    outcome: str = ""
    predicate: dict | None = None

    @classmethod
    def from_dict(cls, d: dict) -> TmoAnswer:
        try:
            return cls(str(d["trigger"]), str(d["mechanism"]), str(d.get("outcome", "")), d.get("predicate"))
        except (KeyError, TypeError) as exc:
            raise MalformedJson(f"bad answer: {exc}") from None


@dataclass(frozen=True)
class GlobalScore:
    fields: dict[str, bool]
    needs_judge: dict[str, bool]

    @property
    def g_acc(self) -> bool:
        return bool(self.fields) and all(self.fields.values())

    def to_dict(self) -> dict[str, Any]:
        return {"fields": self.fields, "needs_judge": self.needs_judge, "g_acc": self.g_acc}


@dataclass(frozen=True)
class UnderstandingScore:
    trigger_correct: bool
    mechanism_correct: bool
    outcome_correct: bool
    predicted_trigger: str | None
    truth_trigger: str
    needs_judge: bool = False
    global_score: GlobalScore | None = None
    g_acc_fields: dict[str, bool] = field(default_factory=dict)

    @property
    def u_acc_joint(self) -> bool:
        return self.trigger_correct and self.mechanism_correct and self.outcome_correct

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "understanding",
            "trigger_correct": self.trigger_correct,
            "mechanism_correct": self.mechanism_correct,
            "outcome_correct": self.outcome_correct,
            "u_acc_joint": self.u_acc_joint,
            "needs_judge": self.needs_judge,
            "predicted_trigger": self.predicted_trigger,
            "truth_trigger": self.truth_trigger,
            "g_acc_fields": self.g_acc_fields,
            "g_acc": None if self.global_score is None else self.global_score.g_acc,
        }


def predicates_equal(a: dict, b: dict) -> bool:
    try:
        fa, fb = Feature.from_dict(a), Feature.from_dict(b)
    except (MalformedJson, ValueError, TypeError):
        return False
    da, db = fa.to_dict(), fb.to_dict()
    va, vb = da.pop("value", None), db.pop("value", None)
    return da == db and values_equal(va, vb)


def score_global(
    ans_fields: dict | None,
    refsem: ReferenceSemantics,
    judge: Judge = null_judge,
    known: Iterable[str] = (),
) -> GlobalScore:
    """Per-field agreement of a global summary with the reference record.

    Roles match on the exact set of sprite ids (role wording is left to the
    judge and only flagged); hooks match on the exact set of canonical trigger
    tokens; the goal sentence is judged.
    """
    ans = ans_fields or {}
    known = set(known) | {h.trigger for h in refsem.hooks}
    goal = str(ans.get("goal", "") or "")
    if goal:
        v = judge(goal, refsem.project_goal)
        goal_ok, goal_judge = v.correct, v.needs_judge
    else:
        goal_ok, goal_judge = False, False

    roles = [r for r in ans.get("roles", ()) if isinstance(r, dict)]
    ids = {str(r.get("sprite")) for r in roles}
    roles_ok = bool(ids) and ids == {s for s, _ in refsem.roles}

    hook_tokens = {canonicalize_trigger(str(h.get("trigger", "")), known) for h in ans.get("hooks", ()) if isinstance(h, dict)}
    hooks_ok = bool(hook_tokens) and None not in hook_tokens and hook_tokens == {h.trigger for h in refsem.hooks}
    return GlobalScore(
        fields={"goal": goal_ok, "roles": roles_ok, "hooks": hooks_ok},
        needs_judge={"goal": goal_judge, "roles": bool(roles), "hooks": False},
    )


def score_understanding(
    ans: TmoAnswer,
    truth: dict,
    refsem: ReferenceSemantics | None = None,
    judge: Judge = null_judge,
    global_fields: dict | None = None,
) -> UnderstandingScore:
    """Compare a TMO answer with a bug's ground truth; every field must match for joint credit."""
    known = {h.trigger for h in refsem.hooks} if refsem is not None else set()
    pred = canonicalize_trigger(ans.trigger, known)
    trigger_ok = pred is not None and pred == truth["trigger"]
    mechanism_ok = ans.mechanism.strip() == truth["mechanism"]
    needs = False
    if ans.predicate is not None:
        outcome_ok = predicates_equal(ans.predicate, truth["outcome"])
    else:
        v = judge(ans.outcome, canonical.dumps_line(truth["outcome"]))
        outcome_ok, needs = v.correct, v.needs_judge
    g = None
    if global_fields is not None and refsem is not None:
        g = score_global(global_fields, refsem, judge, known)
    return UnderstandingScore(
        trigger_ok,
        mechanism_ok,
        outcome_ok,
        pred,
        truth["trigger"],
        needs,
        g,
        dict(g.fields) if g else {},
    )


def trigger_f1(per_instance: Sequence[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Micro-averaged F1 over token multisets."""
    matched = predicted = actual = 0
    for pred, truth in per_instance:
        cp, ct = Counter(pred), Counter(truth)
        matched += sum((cp & ct).values())
        predicted += sum(cp.values())
        actual += sum(ct.values())
    p = matched / predicted if predicted else 0.0
    r = matched / actual if actual else 0.0
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)
