"""Project representation: data model, codec, invariant checks, and metrics."""

from __future__ import annotations

from .checks import check_invariants
from .codec import parse_project, project_digest, serialize_project
from .metrics import ComplexityReport, complexity_metrics
from .model import AssetMeta, Block, BlockRef, Field, ListRef, Literal, ProjectIR, Target, VarRef
from .refsem import ReferenceSemantics, validate_reference_semantics

__all__ = [
    "AssetMeta",
    "Block",
    "BlockRef",
    "ComplexityReport",
    "Field",
    "ListRef",
    "Literal",
    "ProjectIR",
    "ReferenceSemantics",
    "Target",
    "VarRef",
    "check_invariants",
    "complexity_metrics",
    "parse_project",
    "project_digest",
    "serialize_project",
    "validate_reference_semantics",
]
