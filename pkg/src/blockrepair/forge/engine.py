"""The inject-and-validate loop."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .. import canonical
from ..errors import ForgeExhausted, NoDiscriminatingAssertion, PatchError
from ..ir.codec import serialize_project
from ..ir.model import ProjectIR
from ..ir.refsem import ReferenceSemantics
from ..oracle import SynthConfig, TestSuite, TraceCache, pass_rate, synthesize
from ..patch.apply import apply_patch, inverse_patch
from ..patch.model import Patch
from ..scenarios import ScenarioTemplate, extract_metadata, instantiate, load_templates
from ..vm.scenario import Scenario
from .bugspec import BugSpec, make_bugspec, make_refsem, mentions_any
from .patterns import CATALOG, BugPattern, Site, get_pattern, operator_edits, pattern_order, rank_sites


@dataclass(frozen=True)
class ForgeConfig:
    R: int = 5
    theta_pass: float = 0.9
    theta_fail: float = 0.1
    K: int = 20
    seed: int = 0
    H: int = 2000
    checkpoint_interval: int = 10

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be at least 1")
        self.synth  # validates the shared fields

    @property
    def synth(self) -> SynthConfig:
        return SynthConfig(self.R, self.theta_pass, self.theta_fail, self.H, self.checkpoint_interval)

    def to_dict(self) -> dict[str, Any]:
        return {**self.synth.to_dict(), "K": self.K, "seed": self.seed}

    def digest(self) -> str:
        return canonical.digest(self.to_dict())


def substream(seed: int, name: str) -> random.Random:
    """An independent generator for one named consumer of the master seed."""
    h = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


@dataclass(frozen=True)
class Trial:
    pattern: str
    site: Site
    outcome: str  # accepted | no_assertion | gold_unstable | buggy_passes | invalid
    gold_rate: Fraction | None = None
    buggy_rate: Fraction | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.site.to_dict(),
            "outcome": self.outcome,
            "gold_rate": None if self.gold_rate is None else str(self.gold_rate),
            "buggy_rate": None if self.buggy_rate is None else str(self.buggy_rate),
        }


@dataclass(frozen=True)
class BugInstance:
    gold: ProjectIR
    buggy: ProjectIR
    forward: Patch
    inverse: Patch
    spec: BugSpec
    testsuite: TestSuite
    refsem: ReferenceSemantics
    trials: tuple[Trial, ...] = field(default=(), compare=False)

    @property
    def pattern(self) -> str:
        return self.spec.ground_truth["mechanism"]

    def files(self) -> dict[str, bytes]:
        """The bundle's files, keyed by name."""
        return {
            "gold.json": serialize_project(self.gold),
            "buggy.json": serialize_project(self.buggy),
            "forward.patch.json": self.forward.dumps(),
            "inverse.patch.json": self.inverse.dumps(),
            "bugspec.json": canonical.dumps(self.spec.to_dict()),
            "testsuite.json": self.testsuite.dumps(),
            "refsem.json": canonical.dumps(self.refsem.to_dict()),
        }

    def digest(self) -> str:
        return canonical.digest({k: canonical.digest(v) for k, v in self.files().items()})


def apply_operator(p: ProjectIR, pattern: BugPattern, site: Site, config_digest: str | None = None) -> tuple[ProjectIR, Patch]:
    """Inject ``pattern`` at ``site``; raises IneligibleSite when it does not fit."""
    forward = Patch(tuple(operator_edits(p, pattern, site)), source="forge", config_digest=config_digest)
    return apply_patch(p, forward), forward


def forge_scenarios(gold: ProjectIR, cfg: ForgeConfig, templates: Sequence[ScenarioTemplate]) -> list[Scenario]:
    return instantiate(list(templates), extract_metadata(gold), cfg.H, cfg.checkpoint_interval)


def _validate(
    gold: ProjectIR,
    buggy: ProjectIR,
    scenarios: Sequence[Scenario],
    cfg: ForgeConfig,
    cache: TraceCache,
    config_digest: str,
) -> tuple[str, TestSuite | None, Fraction | None, Fraction | None]:
    try:
        suite = synthesize(gold, buggy, scenarios, cfg.synth, cache, config_digest)
    except NoDiscriminatingAssertion:
        return "no_assertion", None, None, None
    pg = pass_rate(gold, suite, cfg.R, cache)
    pb = pass_rate(buggy, suite, cfg.R, cache)
    if pg < cfg.synth.pass_bound:
        return "gold_unstable", suite, pg, pb
    if pb > cfg.synth.fail_bound:
        return "buggy_passes", suite, pg, pb
    return "accepted", suite, pg, pb


def forge(
    gold: ProjectIR,
    cfg: ForgeConfig = ForgeConfig(),
    templates: Sequence[ScenarioTemplate] | None = None,
    catalog: Sequence[str] = CATALOG,
    coverage: dict[str, int] | None = None,
    refsem: ReferenceSemantics | None = None,
    cache: TraceCache | None = None,
) -> BugInstance:
    """Inject one validated fault into ``gold`` or raise ForgeExhausted after ``cfg.K`` trials.

    Patterns are tried least-covered first; within a pattern, sites are tried
    in rank order before moving on to the next pattern.
    """
    templates = load_templates() if templates is None else templates
    cache = TraceCache() if cache is None else cache
    config_digest = cfg.digest()
    scenarios = forge_scenarios(gold, cfg, templates)
    rng = substream(cfg.seed, "site-selection")
    trials: list[Trial] = []
    for tag in pattern_order(tuple(catalog), coverage or {}):
        pattern = get_pattern(tag)
        for site in rank_sites(gold, pattern, rng):
            if len(trials) >= cfg.K:
                raise ForgeExhausted([t.to_dict() for t in trials])
            try:
                buggy, forward = apply_operator(gold, pattern, site, config_digest)
            except PatchError:
                trials.append(Trial(tag, site, "invalid"))
                continue
            outcome, suite, pg, pb = _validate(gold, buggy, scenarios, cfg, cache, config_digest)
            trials.append(Trial(tag, site, outcome, pg, pb))
            if outcome != "accepted":
                continue
            inverse = inverse_patch(forward)
            spec = make_bugspec(gold, pattern, site, forward, inverse, suite)
            rs = refsem if refsem is not None else make_refsem(gold, suite)
            ids = forward.touched_blocks() | inverse.touched_blocks()
            if mentions_any(canonical.dumps(rs.to_dict()).decode(), ids):
                raise ValueError("reference semantics record names an injected block")
            return BugInstance(gold, buggy, forward, inverse, spec, suite, rs, tuple(trials))
    raise ForgeExhausted([t.to_dict() for t in trials])
