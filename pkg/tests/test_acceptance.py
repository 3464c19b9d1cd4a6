"""Acceptance suite: one test per primary criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers,
then asserts the criterion unchanged.
"""

from __future__ import annotations

import dataclasses
import random
import statistics
import time
from fractions import Fraction
from pathlib import Path

import pytest

from blockrepair import canonical
from blockrepair.cli import main
from blockrepair.errors import ForgeExhausted
from blockrepair.evaluation import mcnemar_exact, score_patch, score_repair
from blockrepair.forge import CATALOG, ForgeConfig, forge, pass_rate
from blockrepair.ir import serialize_project
from blockrepair.ir.builder import ProjectBuilder, costume, flag, set_var, set_x, show
from blockrepair.patch import Patch, apply_patch, make_modify
from blockrepair.samples import PATTERN_SAMPLES, load_sample, sample_path
from blockrepair.vm import GreenFlag, Scenario, SeedPolicy, evaluate, run_reruns
from randproj import random_project


def _report(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")


@pytest.fixture(scope="module")
def fresh_instances():
    """The eight pattern samples forged under default settings with no shared cache."""
    t0 = time.perf_counter()
    out = {}
    for name, pattern in PATTERN_SAMPLES.items():
        try:
            out[name] = forge(load_sample(name), ForgeConfig(), catalog=(pattern,))
        except ForgeExhausted:
            out[name] = None
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def random_instances():
    """Instances forged from seeded random projects, for the reversibility checks."""
    out = []
    for seed in range(60):
        try:
            out.append(forge(random_project(seed), ForgeConfig(seed=seed), catalog=(random.Random(seed).choice(CATALOG),)))
        except ForgeExhausted:
            pass
    return out


def test_threshold_reproduction(fresh_instances, capsys):
    instances, elapsed = fresh_instances
    cfg = ForgeConfig()
    assert (cfg.R, cfg.theta_pass, cfg.theta_fail, cfg.K, cfg.H, cfg.checkpoint_interval) == (5, 0.9, 0.1, 20, 2000, 10)
    t0 = time.perf_counter()
    rates = {}
    for name, inst in instances.items():
        if inst is not None:
            # No cache: every run is executed again from scratch.
            rates[name] = (pass_rate(inst.gold, inst.testsuite, cfg.R), pass_rate(inst.buggy, inst.testsuite, cfg.R))
    elapsed += time.perf_counter() - t0
    forged = [n for n, i in instances.items() if i is not None]
    patterns = {instances[n].pattern for n in forged}
    ok = (
        len(forged) == len(PATTERN_SAMPLES) >= 8
        and patterns == set(CATALOG)
        and all(g >= Fraction(9, 10) and b <= Fraction(1, 10) for g, b in rates.values())
        and elapsed < 300
    )
    worst = (min(g for g, _ in rates.values()), max(b for _, b in rates.values())) if rates else (None, None)
    _report(capsys, "threshold reproduction", ok, f"{len(forged)}/{len(PATTERN_SAMPLES)} forged, {len(patterns)} patterns, min gold {worst[0]}, max buggy {worst[1]}, {elapsed:.1f}s")
    assert ok


def test_reversibility(fresh_instances, random_instances, capsys):
    instances = [i for i in fresh_instances[0].values() if i is not None] + random_instances
    bad = [i.digest() for i in instances if serialize_project(apply_patch(i.buggy, i.inverse)) != serialize_project(i.gold)]
    ok = not bad and len(instances) >= 8
    _report(capsys, "reversibility", ok, f"{len(instances) - len(bad)}/{len(instances)} byte-identical")
    assert ok


def test_gold_fix_fixpoint(fresh_instances, random_instances, capsys):
    instances = [i for i in fresh_instances[0].values() if i is not None] + random_instances
    bad = []
    for inst in instances:
        s = score_repair(inst, inst.inverse.dumps())
        if not (s.functional_success and s.d_edit == 0 and s.drift == 0):
            bad.append((inst.pattern, s))
    ok = not bad and len(instances) >= 8
    _report(capsys, "gold-fix fixpoint", ok, f"{len(instances) - len(bad)}/{len(instances)} with success, d_edit 0, drift 0")
    assert ok


def _pipeline(root: Path, seed: int) -> dict[str, str]:
    root.mkdir()
    s = str(seed)
    golds = [str(sample_path(n)) for n in sorted(PATTERN_SAMPLES)]
    assert main(["forge", *golds, "--out", str(root / "bundles"), "--seed", s]) == 0
    scores = root / "scores"
    for name in sorted(PATTERN_SAMPLES):
        b = root / "bundles" / name
        assert main(["gen-scenarios", str(b / "gold.json"), "--out", str(root / f"{name}.scenarios.json"), "--seed", s]) == 0
        suite = root / f"{name}.suite.json"
        args = ["synth-tests", str(b / "gold.json"), str(b / "buggy.json"), "--scenarios", str(root / f"{name}.scenarios.json")]
        assert main([*args, "--out", str(suite), "--seed", s]) == 0
        main(["run", str(b / "buggy.json"), str(suite), "--traces", str(root / "traces" / name), "--out", str(root / f"{name}.run.json"), "--seed", s])
        fixed = root / f"{name}.fixed.json"
        assert main(["apply", str(b / "buggy.json"), str(b / "inverse.patch.json"), "--out", str(fixed)]) == 0
        assert main(["score", str(b), "--patch", str(b / "inverse.patch.json"), "--out", str(scores / f"{name}.json")]) == 0
    assert main(["report", str(scores), "--out", str(root / "summary.json")]) == 0
    return {str(p.relative_to(root)): canonical.digest(p.read_bytes()) for p in sorted(root.rglob("*")) if p.is_file()}


def test_pipeline_determinism(tmp_path, capsys):
    a = _pipeline(tmp_path / "a", 11)
    b = _pipeline(tmp_path / "b", 11)
    differing = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    ok = not differing and len(a) > 50
    _report(capsys, "pipeline determinism", ok, f"{len(a)} files, {len(differing)} differing")
    assert ok


def test_mcnemar_reproduction(capsys):
    p1, p2 = mcnemar_exact(6, 0), mcnemar_exact(3, 0)
    ok = p1 == Fraction(1, 32) and p2 == Fraction(1, 4) and float(p1) == 0.03125 and float(p2) == 0.25
    _report(capsys, "McNemar reproduction", ok, f"(6,0) -> {p1}, (3,0) -> {p2}")
    assert ok


def _barrier_violations(project) -> tuple[int, int]:
    violated = total = 0
    for base in (0, 5, 10, 15, 20):
        s = Scenario("idle", ((0, GreenFlag()),), 2000, 10, SeedPolicy("per_rerun", base))
        for t in run_reruns(project, s, 5):
            total += 1
            # The sender may only mark itself done once the receiver is ready.
            violated += any(snap["var:v_done"] == 1 and snap["var:v_ready"] != 1 for _, snap in t.checkpoints)
    return violated, total


def test_barrier_race(fresh_instances, capsys):
    inst = fresh_instances[0]["race_min"]
    gold_bad, gold_n = _barrier_violations(load_sample("race_min"))
    bug_bad, bug_n = _barrier_violations(inst.buggy)
    ok = inst.pattern == "desync_missing_wait" and gold_n == bug_n == 25 and gold_bad == 0 and bug_bad >= 0.9 * bug_n
    _report(capsys, "barrier/race", ok, f"gold violations {gold_bad}/{gold_n}, desync violations {bug_bad}/{bug_n}")
    assert ok


def test_suite_size(fresh_instances, capsys):
    sizes = [
        len(inst.testsuite.assertions_for(s.id))
        for inst in fresh_instances[0].values()
        if inst is not None
        for s in inst.testsuite.scenarios
    ]
    median = statistics.median(sizes)
    ok = bool(sizes) and all(1 <= n <= 5 for n in sizes) and 3 <= median <= 5
    _report(capsys, "suite size", ok, f"{len(sizes)} scenarios, sizes {min(sizes)}..{max(sizes)}, median {median}")
    assert ok


def _over_edit_instance():
    pb = ProjectBuilder()
    pb.stage.var("score", 5)
    pb.stage.var("lives", 3)
    a = pb.sprite("A", costumes=(("c0", 40, 40), ("c1", 40, 40)))
    a.script(flag(), set_var("score", 0), show(), set_x(0), costume("c0"), set_var("lives", 3))  # a_1 .. a_6
    return forge(pb.build(), ForgeConfig(), catalog=("missing_init",))


def test_over_edit_fixtures(capsys):
    inst = _over_edit_instance()
    b = inst.buggy
    hide = make_modify(b, "A", "a_3", "opcode", "looks_hide")
    move = make_modify(b, "A", "a_4", "input:X", [1, [4, 10]])
    lives = make_modify(b, "A", "a_6", "input:VALUE", [1, [4, 3.5]])
    skin = make_modify(b, "A", "a_5", "input:COSTUME", [1, [10, "c1"]])
    # Every edit takes effect at tick 0, so each checkpoint shows the same
    # discrepancies over 11 signals: visible 1, x 1 (range 10), lives 0.5
    # (range floored at 1), costume 1. All other signals match.
    fixtures = [
        (Patch((*inst.inverse.edits, hide, move, lives)), 3, 2.5 / 11),
        (Patch((*inst.inverse.edits, hide, move, lives, skin)), 4, 3.5 / 11),
    ]
    results = [(score_patch(inst, p), d, drift) for p, d, drift in fixtures]
    ok = len(inst.inverse.edits) == 1 and all(
        3 <= s.d_edit <= 4 and s.d_edit == d and s.drift > 0 and abs(s.drift - drift) <= 1e-9 for s, d, drift in results
    )
    detail = ", ".join(f"{len(p.edits)} edits -> d_edit {s.d_edit}, drift {s.drift:.6f} (expected {drift:.6f})" for (p, _, _), (s, _, drift) in zip(fixtures, results))
    _report(capsys, "over-edit fixtures", ok, detail)
    assert ok


def test_oracle_soundness(capsys):
    t0 = time.perf_counter()
    cfg = ForgeConfig()
    need_gold, allow_buggy = Fraction(9, 10), Fraction(1, 10)
    accepted = checked = 0
    unsound = []
    for seed in range(200):
        pattern = random.Random(seed).choice(CATALOG)
        try:
            inst = forge(random_project(seed), dataclasses.replace(cfg, seed=seed), catalog=(pattern,))
        except ForgeExhausted:
            continue
        accepted += 1
        for s in inst.testsuite.scenarios:
            # Seeds far away from the ones used during synthesis.
            fresh = dataclasses.replace(s, seed_policy=SeedPolicy("per_rerun", 1_000_000 + 97 * seed))
            gold, buggy = run_reruns(inst.gold, fresh, cfg.R), run_reruns(inst.buggy, fresh, cfg.R)
            for a in inst.testsuite.assertions_for(s.id):
                checked += 1
                g = Fraction(sum(evaluate(a.feature, t) for t in gold), cfg.R)
                bu = Fraction(sum(evaluate(a.feature, t) for t in buggy), cfg.R)
                if g < need_gold or bu > allow_buggy:
                    unsound.append((seed, pattern, s.id, a.feature.kind))
    elapsed = time.perf_counter() - t0
    ok = accepted > 0 and not unsound and elapsed < 600
    projects = len({u[0] for u in unsound})
    _report(
        capsys,
        "oracle soundness",
        ok,
        f"{accepted} instances, {checked} assertions, {len(unsound)} unsound on fresh seeds in {projects} projects, {elapsed:.1f}s",
    )
    assert ok
