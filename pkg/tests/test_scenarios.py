from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from blockrepair.ir.builder import ProjectBuilder, broadcast, click, flag, key, recv, show
from blockrepair.scenarios import InteractionMetadata, dedupe, extract_metadata, instantiate, load_templates
from blockrepair.vm import GreenFlag, KeyDown, KeyUp, Scenario
from randproj import random_project


def _project(*scripts, sprite="A"):
    pb = ProjectBuilder()
    s = pb.sprite(sprite)
    for script in scripts:
        s.script(*script)
    return pb.build()


def test_metadata_key_hat():
    m = extract_metadata(_project((key("space"), show())))
    assert m.keys == {"space"}


def test_metadata_unreceived_broadcast():
    m = extract_metadata(_project((flag(), broadcast("game_over"))))
    assert m.messages == {"game_over"}


def test_metadata_flag_only():
    m = extract_metadata(_project((flag(), show())))
    assert m == InteractionMetadata(frozenset(), frozenset(), frozenset(), True)


def test_metadata_click_and_receive():
    m = extract_metadata(_project((click(), show()), (recv("hello"), show()), sprite="Cat"))
    assert m.clickable_sprites == {"Cat"}
    assert m.messages == {"hello"}
    assert not m.has_green_flag


def test_template_library_order():
    names = [t.name for t in load_templates()]
    assert names == ["idle", "tap", "hold", "press-seq", "click", "inject", "combo"]


def test_space_key_scenarios():
    out = instantiate(load_templates(), InteractionMetadata(keys=frozenset({"space"})))
    assert [s.id for s in out] == ["idle", "tap:space", "hold:space", "press-seq:space"]
    tap = out[1]
    assert tap.events == ((0, GreenFlag()), (30, KeyDown("space")), (33, KeyUp("space")))
    hold = out[2]
    assert (30, KeyDown("space")) in hold.events and (230, KeyUp("space")) in hold.events
    seq = out[3]
    downs = [t for t, e in seq.events if isinstance(e, KeyDown)]
    assert downs == [30, 90, 150, 210, 270]


def test_empty_metadata_gives_idle_only():
    out = instantiate(load_templates(), InteractionMetadata(has_green_flag=True))
    assert [s.id for s in out] == ["idle"]


def test_two_keys_expand_separately():
    out = instantiate(load_templates(), InteractionMetadata(keys=frozenset({"a", "b"})))
    ids = [s.id for s in out]
    assert "tap:a" in ids and "tap:b" in ids
    assert ids.index("tap:a") < ids.index("tap:b")
    assert len({s.events for s in out}) == len(out) == 1 + 3 * 2


def test_click_inject_and_combo():
    m = InteractionMetadata(keys=frozenset({"space"}), clickable_sprites=frozenset({"Cat"}), messages=frozenset({"go"}))
    ids = [s.id for s in instantiate(load_templates(), m)]
    assert ids[-3:] == ["click:Cat", "inject:go", "combo:space+go"]


def test_short_budget_drops_late_templates():
    out = instantiate(load_templates(), InteractionMetadata(keys=frozenset({"space"})), H=100)
    assert [s.id for s in out] == ["idle", "tap:space"]


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_instantiate_is_valid_deterministic_and_deduplicated(seed):
    m = extract_metadata(random_project(seed))
    a = instantiate(load_templates(), m)
    b = instantiate(load_templates(), m)
    assert a == b
    assert dedupe(a) == a
    for s in a:
        assert Scenario.from_dict(s.to_dict()) == s
        ticks = [t for t, _ in s.events]
        assert ticks == sorted(ticks)
        assert all(0 <= t <= s.tick_budget for t in ticks)
