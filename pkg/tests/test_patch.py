from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockrepair.errors import DuplicateTarget, NonInvertibleEdit, NotApplicable, ResultInvalid, SchemaInvalid
from blockrepair.ir import serialize_project
from blockrepair.ir.builder import ProjectBuilder, flag, hide, set_var, show
from blockrepair.patch import (
    AtomicEdit,
    Patch,
    apply_patch,
    edit_distance,
    inverse_patch,
    make_modify,
    make_remove,
    normalize,
    validate_patch,
)


def _project():
    pb = ProjectBuilder()
    pb.stage.var("score", 0)
    pb.sprite("A").script(flag(), set_var("score", 0), show(), hide())  # a_1 .. a_4
    return pb.build()


def _modify(block="a_3", old="looks_show", new="looks_hide", sprite="A"):
    return {"kind": "modify", "sprite_id": sprite, "block_id": block, "path": "opcode", "old_value": old, "new_value": new}


def _add(block_id: str, parent="a_3", next_=None, opcode="looks_show"):
    return {
        "kind": "add",
        "sprite_id": "A",
        "block_id": block_id,
        "blocks": {block_id: {"opcode": opcode, "next": None, "parent": None, "inputs": {}, "fields": {}, "topLevel": False}},
        "parent": parent,
        "input": None,
        "next": next_,
    }


def _patch(*edits) -> Patch:
    return validate_patch(json.dumps({"edits": list(edits)}))


def test_single_modify_validates():
    p = _patch(_modify())
    assert len(p.edits) == 1
    assert p.edits[0].kind == "modify"


def test_bare_list_form_validates():
    assert len(validate_patch(json.dumps([_modify()])).edits) == 1


def test_missing_sprite_id_is_schema_invalid():
    e = _modify()
    del e["sprite_id"]
    with pytest.raises(SchemaInvalid):
        _patch(e)


@pytest.mark.parametrize("data", ["not json", '{"edits": [{"kind": "rename"}]}', "42"])
def test_other_schema_failures(data):
    with pytest.raises(SchemaInvalid):
        validate_patch(data)


def test_no_op_modify_rejected():
    with pytest.raises(SchemaInvalid):
        _patch(_modify(new="looks_show"))


def test_two_modifies_of_one_opcode_are_duplicates():
    with pytest.raises(DuplicateTarget) as exc:
        _patch(_modify(), _modify(old="looks_hide", new="looks_show"))
    assert (exc.value.block_id, exc.value.path) == ("a_3", "opcode")


def test_remove_reconnects_neighbours():
    p = _project()
    out = apply_patch(p, _patch({"kind": "remove", "sprite_id": "A", "block_id": "a_3"}))
    blocks = out.target("A").blocks
    assert "a_3" not in blocks
    assert blocks["a_2"].next == "a_4"
    assert blocks["a_4"].parent == "a_2"


def test_remove_of_hat_takes_script():
    out = apply_patch(_project(), _patch({"kind": "remove", "sprite_id": "A", "block_id": "a_1"}))
    assert out.target("A").blocks == {}


def test_add_splices_after_parent():
    out = apply_patch(_project(), _patch(_add("new1", parent="a_3", next_="a_4")))
    blocks = out.target("A").blocks
    assert blocks["a_3"].next == "new1"
    assert blocks["new1"].next == "a_4"
    assert blocks["a_4"].parent == "new1"


def test_add_under_missing_parent_not_applicable():
    with pytest.raises(NotApplicable):
        apply_patch(_project(), _patch(_add("new1", parent="ghost")))


def test_add_with_wrong_next_not_applicable():
    with pytest.raises(NotApplicable):
        apply_patch(_project(), _patch(_add("new1", parent="a_3", next_=None)))


def test_modify_checks_old_value():
    with pytest.raises(NotApplicable):
        apply_patch(_project(), _patch(_modify(old="looks_hide", new="looks_show")))


def test_unknown_target_not_applicable():
    with pytest.raises(NotApplicable):
        apply_patch(_project(), _patch(_modify(sprite="Nobody")))


def test_unsupported_opcode_result_invalid():
    with pytest.raises(ResultInvalid):
        apply_patch(_project(), _patch(_modify(new="pen_clear")))


def test_failed_edit_aborts_whole_patch():
    p = _project()
    before = serialize_project(p)
    with pytest.raises(NotApplicable):
        apply_patch(p, _patch(_modify(), {"kind": "remove", "sprite_id": "A", "block_id": "ghost"}))
    assert serialize_project(p) == before


def test_modify_inverse_swaps_values():
    inv = inverse_patch(_patch(_modify()))
    assert inv.edits[0].old_value == "looks_hide"
    assert inv.edits[0].new_value == "looks_show"


def test_remove_inverse_is_add_with_linkage():
    p = _project()
    fwd = Patch((make_remove(p, "A", "a_3"),), source="forge")
    inv = inverse_patch(fwd)
    (e,) = inv.edits
    assert (e.kind, e.block_id, e.parent, e.input, e.next) == ("add", "a_3", "a_2", None, "a_4")
    assert serialize_project(apply_patch(apply_patch(p, fwd), inv)) == serialize_project(p)


def test_inverse_is_an_involution():
    p = _project()
    fwd = Patch((make_remove(p, "A", "a_3"), make_modify(p, "A", "a_4", "opcode", "looks_show")), source="forge")
    assert inverse_patch(inverse_patch(fwd)) == fwd
    assert serialize_project(apply_patch(apply_patch(p, fwd), inverse_patch(fwd))) == serialize_project(p)


def test_modify_without_prior_value_is_not_invertible():
    e = AtomicEdit("modify", "A", "a_3", path="opcode", new_value="looks_hide", has_old=False)
    with pytest.raises(NonInvertibleEdit):
        inverse_patch(Patch((e,)))


def test_remove_without_record_is_not_invertible():
    with pytest.raises(NonInvertibleEdit):
        inverse_patch(_patch({"kind": "remove", "sprite_id": "A", "block_id": "a_3"}))


def test_field_and_input_modify():
    p = _project()
    e1 = make_modify(p, "A", "a_2", "input:VALUE", [1, [10, "5"]])
    out = apply_patch(p, Patch((e1,)))
    assert out.target("A").blocks["a_2"].inputs["VALUE"].value == "5"


def test_normalize_ignores_order():
    a = _modify()
    b = {"kind": "remove", "sprite_id": "A", "block_id": "a_4"}
    assert normalize(_patch(a, b)) == normalize(_patch(b, a))


def test_normalize_ignores_fresh_ids():
    assert normalize(_patch(_add("x1"))) == normalize(_patch(_add("zz9")))
    assert normalize(_patch(_add("x1"))) != normalize(_patch(_add("x1", opcode="looks_hide")))


def test_normalize_empty():
    assert normalize(Patch()) == frozenset()


def test_edit_distance_examples():
    e1, e2, e3, e4 = (("modify", "A", f"b{i}", "opcode", "x") for i in range(4))
    assert edit_distance(frozenset({e1}), frozenset({e1})) == 0
    assert edit_distance(frozenset({e1}), frozenset({e1, e2, e3, e4})) == 3
    assert edit_distance(frozenset({e1}), frozenset({e2})) == 2


def test_edit_distance_on_real_patches():
    gold = normalize(_patch(_modify()))
    model = normalize(_patch(_modify(), {"kind": "remove", "sprite_id": "A", "block_id": "a_4"}, _add("n1", parent="a_2", next_="a_3")))
    assert edit_distance(gold, model) == 2


small_sets = st.frozensets(st.integers(min_value=0, max_value=8), max_size=6)


@given(small_sets, small_sets, small_sets)
def test_edit_distance_is_a_metric(x, y, z):
    assert edit_distance(x, x) == 0
    assert edit_distance(x, y) == edit_distance(y, x)
    assert edit_distance(x, z) <= edit_distance(x, y) + edit_distance(y, z)
    assert (edit_distance(x, y) == 0) == (x == y)
