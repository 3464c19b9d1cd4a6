"""Repair and understanding scoring, paired statistics, and reports."""

from .repair import FAILURE_REASONS, RepairScore, discrepancy, score_patch, score_repair, semantic_drift
from .report import COLUMNS, aggregate, render_table
from .stats import PairedOutcomes, mcnemar_exact
from .understanding import (
    GlobalScore,
    Judge,
    JudgeVerdict,
    TmoAnswer,
    UnderstandingScore,
    canonicalize_trigger,
    judge_request,
    null_judge,
    predicates_equal,
    score_global,
    score_understanding,
    trigger_f1,
)

__all__ = [
    "COLUMNS",
    "FAILURE_REASONS",
    "GlobalScore",
    "Judge",
    "JudgeVerdict",
    "PairedOutcomes",
    "RepairScore",
    "TmoAnswer",
    "UnderstandingScore",
    "aggregate",
    "canonicalize_trigger",
    "discrepancy",
    "judge_request",
    "mcnemar_exact",
    "null_judge",
    "predicates_equal",
    "render_table",
    "score_global",
    "score_patch",
    "score_repair",
    "score_understanding",
    "semantic_drift",
    "trigger_f1",
]
