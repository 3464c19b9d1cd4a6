from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockrepair.errors import TargetNotFound, UnknownSignal
from blockrepair.ir import parse_project, serialize_project
from blockrepair.ir.builder import (
    V,
    ProjectBuilder,
    arg,
    broadcast,
    broadcast_wait,
    call,
    change_var,
    create_clone,
    define,
    delete_clone,
    clone_start,
    flag,
    forever,
    gt,
    key,
    key_pressed,
    if_,
    rand,
    recv,
    repeat,
    set_var,
    touching,
    wait,
)
from blockrepair.vm import (
    Assertion,
    Feature,
    GreenFlag,
    InjectBroadcast,
    KeyDown,
    KeyUp,
    Scenario,
    SeedPolicy,
    SpriteClick,
    Trace,
    evaluate_assertion,
    run,
    run_reruns,
)
from blockrepair.vm.rng import SplitMix64
from conftest import flag_scenario, score_project
from randproj import random_project


def test_empty_project_checkpoints():
    t = run(ProjectBuilder().build(), flag_scenario(H=20, interval=10), 1)
    assert [tick for tick, _ in t.checkpoints] == [0, 10, 20]
    # Only the always-present stage signals: no variables, lists, or sprites.
    assert all(set(s) == {"backdrop", "broadcasts"} for _, s in t.checkpoints)
    assert all(s["broadcasts"] == [] for _, s in t.checkpoints)
    assert t.terminal == "completed"


def test_set_then_change_gives_seven():
    t = run(score_project(), flag_scenario(), 1)
    assert t.final["var:v_score"] == 7


def test_run_is_deterministic():
    p, s = score_project(), flag_scenario()
    assert run(p, s, 3).to_jsonl() == run(p, s, 3).to_jsonl()


def test_final_tick_is_checkpointed():
    t = run(score_project(), flag_scenario(H=25, interval=10), 1)
    assert [tick for tick, _ in t.checkpoints] == [0, 10, 20, 25]


def test_deterministic_reruns_identical():
    traces = run_reruns(score_project(), flag_scenario(), 5)
    assert len(traces) == 5
    assert [t.seed for t in traces] == [1, 2, 3, 4, 5]
    assert all(t.checkpoints == traces[0].checkpoints for t in traces)


def _random_project():
    pb = ProjectBuilder()
    pb.stage.var("roll", 0)
    pb.stage.var("fixed", 0)
    pb.sprite("Die").script(flag(), set_var("fixed", 4), set_var("roll", rand(1, 10)))
    return pb.build()


def test_random_reruns_differ_only_in_random_signals():
    traces = run_reruns(_random_project(), flag_scenario(), 5)
    rolls = [t.final["var:v_roll"] for t in traces]
    assert len(set(rolls)) > 1
    assert all(isinstance(r, int) and 1 <= r <= 10 for r in rolls)
    for t in traces:
        for (_, a), (_, b) in zip(t.checkpoints, traces[0].checkpoints):
            assert {k for k in a if a[k] != b[k]} <= {"var:v_roll"}


def test_fixed_seed_rerun_equals_run():
    s = Scenario("idle", flag_scenario().events, 20, 10, SeedPolicy("fixed", 42))
    (t,) = run_reruns(_random_project(), s, 1)
    assert t == run(_random_project(), s, 42)


def test_rng_stream_is_reproducible():
    a, b = SplitMix64(7), SplitMix64(7)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]


def test_final_equals_and_broadcast_assertions():
    t = run(score_project(), flag_scenario(), 1)
    assert evaluate_assertion(Assertion(Feature("final_equals", signal="var:v_score", value=7), "idle"), t)
    assert not evaluate_assertion(Assertion(Feature("broadcast_occurred", message="game_over"), "idle"), t)


def test_crashed_trace_fails_every_assertion():
    t = Trace("idle", 1, ((0, {"var:v_score": 7, "broadcasts": []}),), "crashed", "runaway")
    assert not evaluate_assertion(Assertion(Feature("final_equals", signal="var:v_score", value=7), "idle"), t)


def test_unknown_signal_raises():
    t = run(score_project(), flag_scenario(), 1)
    with pytest.raises(UnknownSignal):
        evaluate_assertion(Assertion(Feature("final_equals", signal="var:nope", value=7), "idle"), t)


def test_missing_click_target_raises():
    s = Scenario("click", ((0, SpriteClick("Ghost")),), 20, 10)
    with pytest.raises(TargetNotFound):
        run(score_project(), s, 1)


def test_wait_converts_seconds_to_ticks():
    pb = ProjectBuilder()
    pb.stage.var("x", 0)
    pb.sprite("A").script(flag(), wait(1), set_var("x", 1))
    t = run(pb.build(), flag_scenario(H=60, interval=10), 1)
    assert t.at(20)["var:v_x"] == 0
    assert t.at(30)["var:v_x"] == 1


def _barrier(wait_for_receiver: bool):
    pb = ProjectBuilder()
    pb.stage.var("done", 0)
    pb.stage.var("ready", 0)
    send = broadcast_wait if wait_for_receiver else broadcast
    pb.sprite("Sender").script(flag(), send("setup"), set_var("done", 1))
    pb.sprite("Receiver").script(recv("setup"), wait(0.2), set_var("ready", 1))
    return pb.build()


def _ordered(t: Trace) -> bool:
    return all(s["var:v_ready"] == 1 for _, s in t.checkpoints if s["var:v_done"] == 1)


def test_broadcast_and_wait_is_a_barrier():
    assert _ordered(run(_barrier(True), flag_scenario(H=40, interval=1), 1))


def test_plain_broadcast_races():
    assert not _ordered(run(_barrier(False), flag_scenario(H=40, interval=1), 1))


def test_broadcast_restarts_running_receiver():
    pb = ProjectBuilder()
    pb.stage.var("n", 0)
    s = pb.sprite("A")
    s.script(flag(), broadcast("go"), wait(0.1), broadcast("go"))
    s.script(recv("go"), set_var("n", 0), repeat(10, change_var("n", 1), wait(0.1)))
    t = run(pb.build(), flag_scenario(H=200, interval=10), 1)
    assert t.final["var:v_n"] == 10
    assert t.events_log == ((0, "go"), (3, "go"))


def test_clone_count_capped_and_non_negative():
    pb = ProjectBuilder()
    s = pb.sprite("Spawner")
    s.script(flag(), repeat(400, create_clone()))
    t = run(pb.build(), flag_scenario(H=500, interval=50), 1)
    counts = [snap["clones:Spawner"] for _, snap in t.checkpoints]
    assert max(counts) == 300
    assert min(counts) >= 0


def test_clone_conservation():
    pb = ProjectBuilder()
    s = pb.sprite("Spawner")
    s.script(flag(), repeat(3, create_clone(), wait(0.1)))
    s.script(clone_start(), wait(0.5), delete_clone())
    t = run(pb.build(), flag_scenario(H=60, interval=1), 1)
    counts = [snap["clones:Spawner"] for _, snap in t.checkpoints]
    assert max(counts) == 3
    assert counts[-1] == 0


def test_forever_loop_yields_each_iteration():
    pb = ProjectBuilder()
    pb.stage.var("n", 0)
    pb.sprite("A").script(flag(), forever(change_var("n", 1)))
    t = run(pb.build(), flag_scenario(H=20), 1)
    assert t.terminal == "completed"
    assert t.final["var:v_n"] == 21


def test_loop_without_refresh_is_a_runaway():
    pb = ProjectBuilder()
    pb.stage.var("n", 0)
    s = pb.sprite("A")
    s.script(define("spin", warp=True), forever(change_var("n", 1)))
    s.script(flag(), call("spin"))
    t = run(pb.build(), flag_scenario(H=20), 1)
    assert (t.terminal, t.crash_reason) == ("crashed", "runaway")
    assert t.checkpoints[-1][0] == 0


def test_unbounded_recursion_crashes():
    pb = ProjectBuilder()
    s = pb.sprite("A")
    s.script(define("boom", warp=True), call("boom"))
    s.script(flag(), call("boom"))
    t = run(pb.build(), flag_scenario(H=20), 1)
    assert (t.terminal, t.crash_reason) == ("crashed", "recursion")


def test_custom_block_argument():
    pb = ProjectBuilder()
    pb.stage.var("n", 0)
    s = pb.sprite("A")
    s.script(define("bump %s", ("by",)), change_var("n", arg("by")))
    s.script(flag(), call("bump %s", by=5), call("bump %s", by=2))
    assert run(pb.build(), flag_scenario(), 1).final["var:v_n"] == 7


def test_key_hat_fires_on_press_edge_only():
    pb = ProjectBuilder()
    pb.stage.var("presses", 0)
    pb.stage.var("held", 0)
    s = pb.sprite("A")
    s.script(key("space"), change_var("presses", 1))
    s.script(flag(), forever(if_(key_pressed("space"), set_var("held", 1))))
    ev = ((0, GreenFlag()), (5, KeyDown("space")), (50, KeyUp("space")))
    t = run(pb.build(), Scenario("hold", ev, 60, 10), 1)
    assert t.final["var:v_presses"] == 1
    assert t.final["var:v_held"] == 1


def test_inject_broadcast_reaches_receivers():
    pb = ProjectBuilder()
    pb.stage.var("hit", 0)
    s = pb.sprite("A")
    s.script(recv("ping"), set_var("hit", 1))
    s.script(flag(), set_var("hit", 0))
    t = run(pb.build(), Scenario("inject", ((5, InjectBroadcast("ping")),), 20, 10), 1)
    assert t.final["var:v_hit"] == 1
    assert t.at(0)["var:v_hit"] == 0


def test_touching_uses_bounding_boxes():
    pb = ProjectBuilder()
    pb.stage.var("hit", 0)
    pb.sprite("Wall", costumes=(("w", 20, 20),), x=30, y=0)
    b = pb.sprite("Ball", costumes=(("b", 20, 20),), x=0, y=0)
    b.script(flag(), if_(touching("Wall"), set_var("hit", 1)))
    assert run(pb.build(), flag_scenario(), 1).final["var:v_hit"] == 0
    pb2 = ProjectBuilder()
    pb2.stage.var("hit", 0)
    pb2.sprite("Wall", costumes=(("w", 20, 20),), x=15, y=0)
    b = pb2.sprite("Ball", costumes=(("b", 20, 20),), x=0, y=0)
    b.script(flag(), if_(touching("Wall"), set_var("hit", 1)))
    assert run(pb2.build(), flag_scenario(), 1).final["var:v_hit"] == 1


def test_renaming_a_variable_keeps_traces():
    p = score_project()
    data = serialize_project(p).replace(b'"score"', b'"points"')
    q = parse_project(data)
    assert q.stage.variables["v_score"][0] == "points"
    assert run(q, flag_scenario(), 1) == run(p, flag_scenario(), 1)


def test_non_numeric_arithmetic_does_not_crash():
    pb = ProjectBuilder()
    pb.stage.var("n", "apple")
    pb.sprite("A").script(flag(), change_var("n", 2), if_(gt(V("n"), 1), set_var("n", 9)))
    t = run(pb.build(), flag_scenario(), 1)
    assert t.terminal == "completed"
    assert t.final["var:v_n"] == 9


def test_trace_jsonl_round_trip():
    t = run(score_project(), flag_scenario(), 1)
    assert Trace.from_jsonl(t.to_jsonl("abc")) == t


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=0, max_value=2**32))
def test_determinism_and_monotone_checkpoints(seed, rng_seed):
    p = random_project(seed)
    s = Scenario("tap", ((0, GreenFlag()), (30, KeyDown("space")), (33, KeyUp("space"))), 120, 10)
    a, b = run(p, s, rng_seed), run(p, s, rng_seed)
    assert a.to_jsonl() == b.to_jsonl()
    ticks = [tick for tick, _ in a.checkpoints]
    assert ticks == sorted(set(ticks))
    for _, snap in a.checkpoints:
        for k, v in snap.items():
            if k.startswith("clones:"):
                assert 0 <= v <= 300
