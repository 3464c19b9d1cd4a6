"""Bundled sample projects.

Each ``*_min`` project is the smallest program exhibiting one fault pattern's
eligible site; ``flappy_min`` and ``arcade_full`` are larger games.
"""

from __future__ import annotations

from importlib import resources

from ..ir.codec import parse_project
from ..ir.model import ProjectIR

# Sample name -> the fault pattern it is built to exercise.
PATTERN_SAMPLES = {
    "init_min": "missing_init",
    "race_min": "desync_missing_wait",
    "message_min": "untriggered_event",
    "loop_min": "nonterminating_loop",
    "cond_min": "incorrect_conditional",
    "state_min": "sprite_state_mismatch",
    "clone_min": "clone_mgmt_error",
    "stutter_min": "handler_conflict",
}


def sample_names() -> list[str]:
    root = resources.files(__package__)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def sample_bytes(name: str) -> bytes:
    return resources.files(__package__).joinpath(f"{name}.json").read_bytes()


def sample_path(name: str):
    return resources.files(__package__).joinpath(f"{name}.json")


def load_sample(name: str) -> ProjectIR:
    return parse_project(sample_bytes(name))
