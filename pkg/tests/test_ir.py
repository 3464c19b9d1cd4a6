from __future__ import annotations

import io
import json
import zipfile

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockrepair.errors import DanglingReference, LinkInconsistency, MalformedJson, UnknownOpcode
from blockrepair.ir import (
    ReferenceSemantics,
    complexity_metrics,
    parse_project,
    project_digest,
    serialize_project,
    validate_reference_semantics,
)
from blockrepair.ir.builder import (
    V,
    ProjectBuilder,
    broadcast,
    broadcast_wait,
    call,
    change_var,
    define,
    flag,
    gt,
    if_,
    key,
    recv,
    set_var,
    show,
)
from blockrepair.ir.refsem import Hook
from blockrepair.samples import load_sample, sample_bytes, sample_names
from randproj import random_project

STAGE = {"isStage": True, "name": "Stage", "blocks": {}, "costumes": [{"name": "bg", "width": 480, "height": 360}]}


def doc(*sprites, stage=None):
    return json.dumps({"targets": [stage or STAGE, *sprites]})


def sprite(blocks, variables=None):
    return {
        "isStage": False,
        "name": "S",
        "id": "S",
        "variables": variables or {},
        "blocks": blocks,
        "costumes": [{"name": "c", "width": 10, "height": 10}],
    }


def test_minimal_project_parses_to_one_target():
    p = parse_project(doc())
    assert len(p.targets) == 1
    assert p.targets[0].is_stage


def test_next_without_matching_parent_is_link_inconsistency():
    blocks = {
        "b1": {"opcode": "looks_show", "next": "b2", "parent": None, "topLevel": True},
        "b2": {"opcode": "looks_hide", "next": None, "parent": None, "topLevel": True},
    }
    with pytest.raises(LinkInconsistency) as exc:
        parse_project(doc(sprite(blocks)))
    assert exc.value.block_id == "b2"


def test_unknown_opcode_is_named():
    blocks = {"b1": {"opcode": "pen_clear", "next": None, "parent": None, "topLevel": True}}
    with pytest.raises(UnknownOpcode) as exc:
        parse_project(doc(sprite(blocks)))
    assert (exc.value.opcode, exc.value.block_id) == ("pen_clear", "b1")


def test_undeclared_variable_is_dangling():
    blocks = {
        "b1": {
            "opcode": "data_setvariableto",
            "next": None,
            "parent": None,
            "topLevel": True,
            "inputs": {"VALUE": [1, [10, "0"]]},
            "fields": {"VARIABLE": ["score", "nope"]},
        }
    }
    with pytest.raises(DanglingReference) as exc:
        parse_project(doc(sprite(blocks)))
    assert exc.value.ref_id == "nope"


@pytest.mark.parametrize("data", [b"{", b"[]", b'{"targets": []}', b"\xff\xfe"])
def test_malformed_input(data):
    with pytest.raises(MalformedJson):
        parse_project(data)


def test_zip_container_accepted():
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("project.json", sample_bytes("init_min"))
    assert parse_project(buf.getvalue()) == load_sample("init_min")


def test_zip_without_project_json_rejected():
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("other.json", "{}")
    with pytest.raises(MalformedJson):
        parse_project(buf.getvalue())


def test_flappy_sample_counts():
    p = load_sample("flappy_min")
    assert len(p.targets) == 5
    assert complexity_metrics(p).scripts == 16


def test_round_trip_minimal_and_canonical():
    p = parse_project(doc())
    assert parse_project(serialize_project(p)) == p
    assert serialize_project(p) == serialize_project(parse_project(doc()))


@pytest.mark.parametrize("name", sample_names())
def test_samples_round_trip_byte_stable(name):
    p = load_sample(name)
    once = serialize_project(p)
    assert parse_project(once) == p
    assert serialize_project(parse_project(once)) == once
    assert project_digest(p) == project_digest(parse_project(once))
    # The bundled files are stored in canonical form.
    assert sample_bytes(name) == once


@pytest.mark.parametrize("name", sample_names())
def test_samples_match_project_schema(name):
    from importlib import resources

    schema = json.loads(resources.files("blockrepair").joinpath("schemas/project.schema.json").read_text())
    jsonschema.Draft202012Validator(schema).validate(json.loads(sample_bytes(name)))


def _sized(n_sprites, n_scripts, n_broadcasts, n_custom):
    pb = ProjectBuilder()
    sprites = [pb.sprite(f"S{i}") for i in range(n_sprites)] or [pb.stage]
    hats = 0
    for i in range(n_broadcasts):
        sprites[0].script(flag(), broadcast(f"m{i}"))
        hats += 1
    for i in range(n_custom):
        sprites[0].script(define(f"proc{i}"), show())
        hats += 1
    while hats < n_scripts:
        sprites[hats % len(sprites)].script(flag(), show())
        hats += 1
    return pb.build()


def test_complexity_threshold_met_exactly():
    r = complexity_metrics(_sized(5, 15, 3, 1))
    assert (r.sprites, r.scripts, r.broadcast_uses, r.custom_blocks) == (5, 15, 3, 1)
    assert r.passes


def test_complexity_empty_project():
    r = complexity_metrics(parse_project(doc()))
    assert (r.sprites, r.scripts, r.broadcast_uses, r.custom_blocks, r.passes) == (0, 0, 0, 0, False)


def test_complexity_four_sprites_fails():
    r = complexity_metrics(_sized(4, 20, 5, 2))
    assert (r.sprites, r.scripts, r.broadcast_uses, r.custom_blocks) == (4, 20, 5, 2)
    assert not r.passes


def test_complexity_counts_receivers_and_waits():
    pb = ProjectBuilder()
    s = pb.sprite("A")
    s.script(flag(), broadcast_wait("go"))
    s.script(recv("go"), show())
    s.loose(show())  # orphaned stacks are not scripts
    r = complexity_metrics(pb.build())
    assert (r.scripts, r.broadcast_uses) == (2, 2)


def test_complexity_arcade_passes():
    assert complexity_metrics(load_sample("arcade_full")).passes


def _refsem_project():
    pb = ProjectBuilder()
    pb.stage.var("score", 0)
    pb.sprite("A").script(flag(), set_var("score", 1))
    return pb.build()


def test_refsem_valid_record():
    r = ReferenceSemantics("g", hooks=(Hook("green_flag", ("A",), ({"kind": "final_equals", "signal": "var:v_score", "value": 1},)),))
    assert validate_reference_semantics(r, _refsem_project()) == []


def test_refsem_unresolvable_trigger():
    r = ReferenceSemantics("g", hooks=(Hook("key:warp"),))
    assert [v.kind for v in validate_reference_semantics(r, _refsem_project())] == ["UnresolvableTrigger"]


def test_refsem_unknown_signal():
    r = ReferenceSemantics("g", state_signals=("var:missing",))
    assert [v.kind for v in validate_reference_semantics(r, _refsem_project())] == ["UnknownSignal"]


def test_refsem_non_canonical_trigger():
    r = ReferenceSemantics("g", hooks=(Hook("Green Flag"),))
    assert [v.kind for v in validate_reference_semantics(r, _refsem_project())] == ["NonCanonicalTrigger"]


def test_custom_block_call_round_trips():
    pb = ProjectBuilder()
    pb.stage.var("n", 0)
    s = pb.sprite("A")
    s.script(define("bump"), change_var("n", 1))
    s.script(flag(), call("bump"), if_(gt(V("n"), 0), show()))
    s.script(key("space"), call("bump"))
    p = pb.build()
    assert parse_project(serialize_project(p)) == p


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_round_trip_property(seed):
    p = random_project(seed)
    data = serialize_project(p)
    q = parse_project(data)
    assert q == p
    assert serialize_project(q) == data
    assert complexity_metrics(q) == complexity_metrics(p)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_identifier_closure_property(seed):
    p = parse_project(serialize_project(random_project(seed)))
    declared = set(p.broadcasts)
    for t in p.targets:
        declared |= set(t.variables) | set(t.lists) | set(t.blocks)
    for _, b in p.iter_blocks():
        for f in b.fields.values():
            if f.ref is not None:
                assert f.ref in declared
        for v in b.inputs.values():
            ref = getattr(v, "block_id", None) or getattr(v, "var_id", None) or getattr(v, "list_id", None)
            if ref is not None:
                assert ref in declared
