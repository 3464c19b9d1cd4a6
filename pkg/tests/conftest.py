from __future__ import annotations

import pytest

from blockrepair.forge import ForgeConfig, forge
from blockrepair.ir.builder import ProjectBuilder, change_var, flag, set_var
from blockrepair.oracle import TraceCache
from blockrepair.samples import PATTERN_SAMPLES, load_sample
from blockrepair.vm import GreenFlag, Scenario


def score_project():
    """One green-flag script: set score to 0, change score by 7."""
    pb = ProjectBuilder()
    pb.stage.var("score", 0)
    pb.sprite("Player").script(flag(), set_var("score", 0), change_var("score", 7))
    return pb.build()


def flag_scenario(sid: str = "idle", H: int = 20, interval: int = 10) -> Scenario:
    return Scenario(sid, ((0, GreenFlag()),), tick_budget=H, checkpoint_interval=interval)


@pytest.fixture(scope="session")
def cache() -> TraceCache:
    return TraceCache()


@pytest.fixture(scope="session")
def forged(cache):
    """Every pattern sample forged with its own pattern under default settings."""
    return {
        name: forge(load_sample(name), ForgeConfig(), catalog=(pattern,), cache=cache)
        for name, pattern in PATTERN_SAMPLES.items()
    }
