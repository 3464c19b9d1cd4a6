"""Patch validation, application, inversion, and normalization."""

from __future__ import annotations

from .apply import apply_patch, fragment_ids, inverse_patch, make_modify, make_remove, read_path
from .model import AtomicEdit, Patch, patch_from_obj, validate_patch
from .normalize import edit_distance, normalize, structural_hash

__all__ = [
    "AtomicEdit",
    "Patch",
    "apply_patch",
    "edit_distance",
    "fragment_ids",
    "inverse_patch",
    "make_modify",
    "make_remove",
    "normalize",
    "patch_from_obj",
    "read_path",
    "structural_hash",
    "validate_patch",
]
