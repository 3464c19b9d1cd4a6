"""Deterministic interpreter, scenarios, traces, and trace predicates."""

from __future__ import annotations

from .assertions import Assertion, Feature, evaluate, evaluate_assertion
from .interpreter import run, run_reruns, uses_random
from .scenario import GreenFlag, InjectBroadcast, KeyDown, KeyUp, Scenario, SeedPolicy, SpriteClick
from .trace import Trace

__all__ = [
    "Assertion",
    "Feature",
    "GreenFlag",
    "InjectBroadcast",
    "KeyDown",
    "KeyUp",
    "Scenario",
    "SeedPolicy",
    "SpriteClick",
    "Trace",
    "evaluate",
    "evaluate_assertion",
    "run",
    "run_reruns",
    "uses_random",
]
