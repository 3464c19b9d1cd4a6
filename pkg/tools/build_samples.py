"""Regenerate the bundled sample projects under src/blockrepair/samples/.

Run from the repository root:  python3 tools/build_samples.py
"""

from __future__ import annotations

import argparse
from pathlib import Path

from blockrepair.ir.builder import (
    V,
    ProjectBuilder,
    broadcast,
    broadcast_wait,
    call,
    change_var,
    change_x,
    change_y,
    click,
    clone_start,
    costume,
    create_clone,
    define,
    delete_clone,
    eq,
    flag,
    goto,
    gt,
    hide,
    if_,
    if_else,
    key,
    lt,
    mul,
    rand,
    recv,
    repeat,
    repeat_until,
    set_var,
    set_x,
    set_y,
    show,
    touching,
    wait,
)
from blockrepair.ir.codec import serialize_project
from blockrepair.ir.model import ProjectIR

OUT = Path(__file__).resolve().parent.parent / "src" / "blockrepair" / "samples"


def init_min() -> ProjectIR:
    """A score reset at the flag; the stored value is stale on purpose."""
    pb = ProjectBuilder()
    pb.stage.var("score", 5)
    p = pb.sprite("Player")
    p.script(flag(), set_var("score", 0), repeat(3, change_var("score", 1), wait(0.1)))
    p.script(key("space"), change_var("score", 10))
    return pb.build()


def race_min() -> ProjectIR:
    """A sender that must not finish before its receiver has set up."""
    pb = ProjectBuilder()
    pb.stage.var("done", 0)
    pb.stage.var("ready", 0)
    s = pb.sprite("Sender")
    s.script(flag(), set_var("done", 0), set_var("ready", 0), broadcast_wait("setup"), set_var("done", 1))
    r = pb.sprite("Receiver")
    r.script(recv("setup"), wait(rand(0.3, 0.6)), set_var("ready", 1))
    return pb.build()


def message_min() -> ProjectIR:
    """A level change that only happens when a message is heard."""
    pb = ProjectBuilder()
    pb.stage.var("level", 0)
    s = pb.sprite("Button")
    s.script(flag(), set_var("level", 0), wait(0.2), broadcast("start"))
    g = pb.sprite("Game", visible=False)
    g.script(recv("start"), set_var("level", 1), show())
    return pb.build()


def loop_min() -> ProjectIR:
    """A counting loop that must terminate for the finish flag to be raised."""
    pb = ProjectBuilder()
    pb.stage.var("count", 0)
    pb.stage.var("finished", 0)
    c = pb.sprite("Counter")
    c.script(
        flag(),
        set_var("count", 0),
        set_var("finished", 0),
        repeat_until(gt(V("count"), 9), change_var("count", 1)),
        set_var("finished", 1),
    )
    return pb.build()


def cond_min() -> ProjectIR:
    """Three guarded updates, each depending on one comparison."""
    pb = ProjectBuilder()
    for name, value in (("lives", 0), ("speed", 0), ("score", 0), ("status", ""), ("mode", ""), ("rank", "")):
        pb.stage.var(name, value)
    p = pb.sprite("Hero")
    p.script(
        flag(),
        set_var("lives", 3),
        set_var("speed", 2),
        set_var("score", 12),
        if_(gt(V("lives"), 0), set_var("status", "alive")),
        if_(lt(V("speed"), 5), set_var("mode", "slow")),
        if_else(gt(V("score"), 10), [set_var("rank", "gold")], [set_var("rank", "none")]),
    )
    return pb.build()


def state_min() -> ProjectIR:
    """A sprite that hides, changes costume, and reappears."""
    pb = ProjectBuilder()
    g = pb.sprite("Ghost", costumes=(("calm", 40, 40), ("angry", 40, 40)))
    g.script(flag(), hide(), costume("calm"), wait(0.5), costume("angry"), show())
    return pb.build()


def clone_min() -> ProjectIR:
    """A spawner whose clones must clean themselves up."""
    pb = ProjectBuilder()
    pb.stage.var("spawned", 0)
    s = pb.sprite("Spawner", visible=False)
    s.script(flag(), set_var("spawned", 0), repeat(3, create_clone(), wait(0.2)))
    s.script(clone_start(), change_var("spawned", 1), show(), wait(0.5), delete_clone())
    return pb.build()


def stutter_min() -> ProjectIR:
    """One key handler that moves a runner and counts steps."""
    pb = ProjectBuilder()
    pb.stage.var("steps", 0)
    r = pb.sprite("Runner")
    r.script(flag(), set_x(0), set_var("steps", 0))
    r.script(key("space"), change_x(10), change_var("steps", 1))
    return pb.build()


def flappy_min() -> ProjectIR:
    """A small flappy-bird style game: four sprites and sixteen scripts."""
    pb = ProjectBuilder(backdrops=(("sky", 480, 360), ("night", 480, 360)))
    pb.stage.var("score", 0)
    pb.stage.var("alive", 1)
    pb.stage.var("gravity", -2)
    st = pb.stage
    st.script(flag(), set_var("score", 0), set_var("alive", 1))
    st.script(recv("game over"), set_var("alive", 0))

    bird = pb.sprite("Bird", costumes=(("up", 34, 24), ("down", 34, 24)), x=-100, y=0)
    bird.var("vy", 0)
    bird.script(flag(), goto(-100, 0), set_var("vy", 0), show(), costume("up"))
    bird.script(
        flag(),
        repeat_until(
            eq(V("alive"), 0),
            change_var("vy", V("gravity")),
            change_y(V("vy")),
            if_(lt(V("vy"), -12), set_var("vy", -12)),
        ),
    )
    bird.script(key("space"), set_var("vy", 10), costume("down"))
    bird.script(key("up arrow"), set_var("vy", 6))
    bird.script(flag(), repeat_until(eq(V("alive"), 0), if_(lt(V("vy"), 0), costume("up")), wait(0.1)))
    bird.script(recv("game over"), hide())

    pipe = pb.sprite("Pipe", costumes=(("pipe", 52, 320),), x=240, y=0)
    pipe.script(flag(), show())
    pipe.var("px", 240)
    pipe.script(
        flag(),
        set_var("px", 240),
        repeat_until(
            eq(V("alive"), 0),
            change_var("px", -4),
            set_x(V("px")),
            if_(lt(V("px"), -240), set_var("px", 240)),
        ),
    )
    pipe.script(recv("passed"), change_var("score", 1))
    pipe.script(recv("game over"), hide())

    ground = pb.sprite("Ground", costumes=(("ground", 480, 40),), x=0, y=-170)
    ground.script(flag(), goto(0, -170), show())
    ground.script(
        flag(),
        wait(1),
        broadcast("passed"),
        wait(2),
        broadcast("passed"),
    )

    sb = pb.sprite("Scoreboard", costumes=(("digits", 60, 30),), x=0, y=150)
    sb.script(flag(), show(), goto(0, 150))
    sb.script(recv("passed"), if_(gt(V("score"), 2), broadcast("game over")))
    return pb.build()


def arcade_full() -> ProjectIR:
    """A five-sprite catch game large enough to pass the complexity filter."""
    pb = ProjectBuilder(backdrops=(("field", 480, 360), ("results", 480, 360)))
    st = pb.stage
    st.var("score", 0)
    st.var("lives", 3)
    st.var("phase", "menu")
    st.script(flag(), set_var("score", 0), set_var("lives", 3), set_var("phase", "menu"))
    st.script(recv("begin"), set_var("phase", "play"))
    st.script(recv("finish"), set_var("phase", "over"))

    pad = pb.sprite("Paddle", costumes=(("paddle", 80, 16),), x=0, y=-150)
    pad.script(flag(), goto(0, -150), show())
    pad.script(key("left arrow"), change_x(-20))
    pad.script(key("right arrow"), change_x(20))
    pad.script(recv("finish"), hide())

    ball = pb.sprite("Ball", costumes=(("ball", 16, 16),), x=0, y=160)
    ball.var("fall", 4)
    ball.script(flag(), goto(0, 160), set_var("fall", 4), hide())
    ball.script(recv("begin"), show(), call("drop"))
    ball.script(
        define("drop"),
        repeat_until(
            eq(V("phase"), "over"),
            change_y(mul(V("fall"), -1)),
            if_(touching("Paddle"), change_var("score", 1), set_y(160)),
        ),
    )
    ball.script(recv("finish"), hide())

    coin = pb.sprite("Coin", costumes=(("coin", 20, 20), ("shine", 20, 20)), x=100, y=100)
    coin.script(flag(), hide(), costume("coin"))
    coin.script(recv("begin"), show(), repeat(4, wait(0.25), costume("shine"), wait(0.25), costume("coin")))

    menu = pb.sprite("Menu", costumes=(("title", 200, 60),), x=0, y=0)
    menu.script(flag(), show(), wait(0.5), broadcast_wait("begin"), hide())
    menu.script(click(), broadcast("begin"))

    timer = pb.sprite("Timer", costumes=(("clock", 30, 30),), x=200, y=160)
    timer.var("left", 5)
    timer.script(flag(), set_var("left", 5))
    timer.script(recv("begin"), repeat_until(lt(V("left"), 1), wait(1), change_var("left", -1)), broadcast("finish"))
    timer.script(recv("finish"), hide())
    return pb.build()


SAMPLES = {
    "init_min": init_min,
    "race_min": race_min,
    "message_min": message_min,
    "loop_min": loop_min,
    "cond_min": cond_min,
    "state_min": state_min,
    "clone_min": clone_min,
    "stutter_min": stutter_min,
    "flappy_min": flappy_min,
    "arcade_full": arcade_full,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, make in SAMPLES.items():
        (args.out / f"{name}.json").write_bytes(serialize_project(make()))
        print(f"wrote {name}.json")


if __name__ == "__main__":
    main()
