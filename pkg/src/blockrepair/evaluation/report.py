"""Aggregate per-instance score records into one summary row."""

from __future__ import annotations

from typing import Any, Iterable

from .understanding import trigger_f1

COLUMNS = ("N", "Success", "d_edit", "Drift", "T-F1", "M-Acc", "U-Acc", "G-Acc")


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def aggregate(records: Iterable[dict[str, Any]]) -> dict[str, Any]:
    """Summary over repair and understanding score records (each a ``to_dict`` output)."""
    recs = list(records)
    repair = [r for r in recs if r.get("kind") == "repair"]
    under = [r for r in recs if r.get("kind") == "understanding"]
    out: dict[str, Any] = {"n_repair": len(repair), "n_understanding": len(under)}
    if repair:
        out["success_rate"] = sum(bool(r["functional_success"]) for r in repair) / len(repair)
        out["mean_d_edit"] = _mean([r["d_edit"] for r in repair if r.get("d_edit") is not None])
        out["mean_drift"] = _mean([r["drift"] for r in repair if r.get("drift") is not None])
    if under:
        pairs = [([r["predicted_trigger"]] if r.get("predicted_trigger") else [], [r["truth_trigger"]]) for r in under]
        out["T-F1"] = trigger_f1(pairs)
        out["M-Acc"] = _mean([float(bool(r["mechanism_correct"])) for r in under])
        out["U-Acc"] = _mean([float(bool(r["u_acc_joint"])) for r in under])
        out["G-Acc"] = _mean([float(bool(r["g_acc"])) for r in under if r.get("g_acc") is not None])
    return out


def _pct(v: float | None) -> str:
    return "-" if v is None else f"{100 * v:.0f}%"


def _num(v: float | None, digits: int = 2) -> str:
    return "-" if v is None else f"{v:.{digits}f}"


def render_table(summary: dict[str, Any]) -> str:
    row = [
        str(summary.get("n_repair", 0) + summary.get("n_understanding", 0)),
        _pct(summary.get("success_rate")),
        _num(summary.get("mean_d_edit")),
        _num(summary.get("mean_drift")),
        _num(summary.get("T-F1")),
        _pct(summary.get("M-Acc")),
        _pct(summary.get("U-Acc")),
        _pct(summary.get("G-Acc")),
    ]
    widths = [max(len(c), len(v)) for c, v in zip(COLUMNS, row)]
    fmt = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))  # noqa: E731
    return fmt(COLUMNS) + "\n" + fmt(row) + "\n"
