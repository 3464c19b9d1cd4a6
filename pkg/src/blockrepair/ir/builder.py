"""A small Python DSL for writing projects by hand.

Used by the sample generator and the tests::

    pb = ProjectBuilder()
    pb.stage.var("score", 0)
    bird = pb.sprite("Bird", costumes=[("bird", 40, 30)])
    bird.script(flag(), set_var("score", 0), change_var("score", 7))
    project = pb.build()

Identifiers are deterministic: variables become ``v_<name>`` (stage) or
``v_<sprite>_<name>`` (local), blocks ``<sprite>_<n>``, messages ``m_<name>``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Union

from .checks import check_invariants
from .model import (
    AssetMeta,
    Block,
    BlockRef,
    Field,
    InputValue,
    ListRef,
    Literal,
    ProjectIR,
    Target,
    VarRef,
)
from .refsem import slug


@dataclass(frozen=True)
class V:
    """Variable read placed in an input slot."""

    name: str


@dataclass(frozen=True)
class L:
    """List read placed in an input slot."""

    name: str


@dataclass
class Node:
    opcode: str
    inputs: dict[str, Any] = field(default_factory=dict)
    fields: dict[str, Any] = field(default_factory=dict)
    stacks: dict[str, list] = field(default_factory=dict)
    mutation: dict | None = None


Arg = Union[Node, V, L, int, float, str]


def blk(opcode: str, inputs: dict | None = None, fields: dict | None = None, **stacks: list) -> Node:
    return Node(opcode, dict(inputs or {}), dict(fields or {}), dict(stacks))


# --- hats -------------------------------------------------------------------


def flag() -> Node:
    return blk("event_whenflagclicked")


def key(k: str) -> Node:
    return blk("event_whenkeypressed", fields={"KEY_OPTION": k})


def click() -> Node:
    return blk("event_whenthisspriteclicked")


def recv(msg: str) -> Node:
    return blk("event_whenbroadcastreceived", fields={"BROADCAST_OPTION": ("msg", msg)})


def clone_start() -> Node:
    return blk("control_start_as_clone")


def define(proccode: str, args: tuple[str, ...] = (), warp: bool = False) -> Node:
    n = blk("procedures_definition")
    n.mutation = {
        "proccode": proccode,
        "argumentids": [f"arg_{slug(a)}" for a in args],
        "argumentnames": list(args),
        "argumentdefaults": ["" for _ in args],
        "warp": warp,
    }
    return n


# --- statements ---------------------------------------------------------------


def set_var(name: str, value: Arg) -> Node:
    return blk("data_setvariableto", {"VALUE": value}, {"VARIABLE": ("var", name)})


def change_var(name: str, by: Arg) -> Node:
    return blk("data_changevariableby", {"VALUE": by}, {"VARIABLE": ("var", name)})


def add_to_list(name: str, item: Arg) -> Node:
    return blk("data_addtolist", {"ITEM": item}, {"LIST": ("list", name)})


def clear_list(name: str) -> Node:
    return blk("data_deletealloflist", fields={"LIST": ("list", name)})


def delete_of_list(name: str, index: Arg) -> Node:
    return blk("data_deleteoflist", {"INDEX": index}, {"LIST": ("list", name)})


def broadcast(msg: str) -> Node:
    return blk("event_broadcast", fields={"BROADCAST_OPTION": ("msg", msg)})


def broadcast_wait(msg: str) -> Node:
    return blk("event_broadcastandwait", fields={"BROADCAST_OPTION": ("msg", msg)})


def wait(secs: Arg) -> Node:
    return blk("control_wait", {"DURATION": secs})


def repeat(times: Arg, *body: Node) -> Node:
    return blk("control_repeat", {"TIMES": times}, SUBSTACK=list(body))


def forever(*body: Node) -> Node:
    return blk("control_forever", SUBSTACK=list(body))


def if_(cond: Node, *body: Node) -> Node:
    return blk("control_if", {"CONDITION": cond}, SUBSTACK=list(body))


def if_else(cond: Node, then: list[Node], otherwise: list[Node]) -> Node:
    return blk("control_if_else", {"CONDITION": cond}, SUBSTACK=then, SUBSTACK2=otherwise)


def repeat_until(cond: Node, *body: Node) -> Node:
    return blk("control_repeat_until", {"CONDITION": cond}, SUBSTACK=list(body))


def wait_until(cond: Node) -> Node:
    return blk("control_wait_until", {"CONDITION": cond})


def stop(option: str = "this script") -> Node:
    return blk("control_stop", fields={"STOP_OPTION": option})


def create_clone(of: str = "_myself_") -> Node:
    return blk("control_create_clone_of", {"CLONE_OPTION": of})


def delete_clone() -> Node:
    return blk("control_delete_this_clone")


def goto(x: Arg, y: Arg) -> Node:
    return blk("motion_gotoxy", {"X": x, "Y": y})


def change_x(dx: Arg) -> Node:
    return blk("motion_changexby", {"DX": dx})


def change_y(dy: Arg) -> Node:
    return blk("motion_changeyby", {"DY": dy})


def set_x(x: Arg) -> Node:
    return blk("motion_setx", {"X": x})


def set_y(y: Arg) -> Node:
    return blk("motion_sety", {"Y": y})


def point(direction: Arg) -> Node:
    return blk("motion_pointindirection", {"DIRECTION": direction})


def show() -> Node:
    return blk("looks_show")


def hide() -> Node:
    return blk("looks_hide")


def costume(name: Arg) -> Node:
    return blk("looks_switchcostumeto", {"COSTUME": name})


def next_costume() -> Node:
    return blk("looks_nextcostume")


def backdrop(name: Arg) -> Node:
    return blk("looks_switchbackdropto", {"BACKDROP": name})


def call(proccode: str, **args: Arg) -> Node:
    n = blk("procedures_call", {f"arg_{slug(k)}": v for k, v in args.items()})
    n.mutation = {"proccode": proccode, "argumentids": [f"arg_{slug(k)}" for k in args]}
    return n


# --- reporters ------------------------------------------------------------------


def _binop(opcode: str, a: Arg, b: Arg, names: tuple[str, str] = ("NUM1", "NUM2")) -> Node:
    return blk(opcode, {names[0]: a, names[1]: b})


def add(a: Arg, b: Arg) -> Node:
    return _binop("operator_add", a, b)


def sub(a: Arg, b: Arg) -> Node:
    return _binop("operator_subtract", a, b)


def mul(a: Arg, b: Arg) -> Node:
    return _binop("operator_multiply", a, b)


def div(a: Arg, b: Arg) -> Node:
    return _binop("operator_divide", a, b)


def rand(a: Arg, b: Arg) -> Node:
    return blk("operator_random", {"FROM": a, "TO": b})


def gt(a: Arg, b: Arg) -> Node:
    return _binop("operator_gt", a, b, ("OPERAND1", "OPERAND2"))


def lt(a: Arg, b: Arg) -> Node:
    return _binop("operator_lt", a, b, ("OPERAND1", "OPERAND2"))


def eq(a: Arg, b: Arg) -> Node:
    return _binop("operator_equals", a, b, ("OPERAND1", "OPERAND2"))


def and_(a: Node, b: Node) -> Node:
    return _binop("operator_and", a, b, ("OPERAND1", "OPERAND2"))


def or_(a: Node, b: Node) -> Node:
    return _binop("operator_or", a, b, ("OPERAND1", "OPERAND2"))


def not_(a: Node) -> Node:
    return blk("operator_not", {"OPERAND": a})


def join(a: Arg, b: Arg) -> Node:
    return _binop("operator_join", a, b, ("STRING1", "STRING2"))


def item(index: Arg, name: str) -> Node:
    return blk("data_itemoflist", {"INDEX": index}, {"LIST": ("list", name)})


def length(name: str) -> Node:
    return blk("data_lengthoflist", fields={"LIST": ("list", name)})


def key_pressed(k: str) -> Node:
    return blk("sensing_keypressed", {"KEY_OPTION": k})


def touching(obj: str) -> Node:
    return blk("sensing_touchingobject", {"TOUCHINGOBJECTMENU": obj})


def arg(name: str) -> Node:
    return blk("argument_reporter_string_number", fields={"VALUE": name})


# --- builders -------------------------------------------------------------------


def _asset(name: str, kind: str, **dims: float) -> AssetMeta:
    digest = hashlib.sha256(f"{kind}:{name}".encode()).hexdigest()
    return AssetMeta(asset_id=digest[:32], name=name, kind=kind, payload_digest=digest, **dims)


class TargetBuilder:
    def __init__(self, owner: ProjectBuilder, name: str, is_stage: bool, **state: Any):
        self.owner = owner
        self.name = name
        self.is_stage = is_stage
        self.state = state
        self.variables: dict[str, tuple[str, Any]] = {}
        self.lists: dict[str, tuple[str, tuple]] = {}
        self.blocks: dict[str, dict] = {}
        self._prefix = "stage" if is_stage else slug(name)
        self._counter = 0

    # declarations

    def var(self, name: str, value: Any = 0) -> str:
        vid = f"v_{name}" if self.is_stage else f"v_{self._prefix}_{name}"
        self.variables[vid] = (name, value)
        return vid

    def list(self, name: str, items: tuple = ()) -> str:
        lid = f"l_{name}" if self.is_stage else f"l_{self._prefix}_{name}"
        self.lists[lid] = (name, tuple(items))
        return lid

    def _lookup(self, table: str, name: str) -> str:
        for tb in (self, self.owner.stage):
            for ident, (n, _) in getattr(tb, table).items():
                if n == name:
                    return ident
        raise KeyError(f"{self.name}: no {table[:-1]} named {name!r}")

    # scripts

    def script(self, hat: Node, *body: Node, x: int = 0, y: int = 0) -> str:
        """Add a hat-rooted script and return the hat's block id."""
        return self._emit_stack([hat, *body], None)

    def loose(self, *body: Node) -> str:
        """Add a detached (non-hat) stack."""
        return self._emit_stack(list(body), None)

    def _new_id(self) -> str:
        self._counter += 1
        return f"{self._prefix}_{self._counter}"

    def _emit_stack(self, nodes: list[Node], parent: str | None) -> str:
        ids = [self._new_id() for _ in nodes]
        for i, node in enumerate(nodes):
            self._emit(
                node,
                ids[i],
                parent=parent if i == 0 else ids[i - 1],
                next_id=ids[i + 1] if i + 1 < len(ids) else None,
                top=(i == 0 and parent is None),
            )
        return ids[0]

    def _value(self, v: Any, parent: str) -> InputValue:
        if isinstance(v, Node):
            cid = self._new_id()
            self._emit(v, cid, parent=parent, next_id=None, top=False)
            return BlockRef(cid)
        if isinstance(v, V):
            return VarRef(v.name, self._lookup("variables", v.name))
        if isinstance(v, L):
            return ListRef(v.name, self._lookup("lists", v.name))
        return Literal(v)

    def _field(self, v: Any) -> Field:
        if isinstance(v, tuple) and len(v) == 2 and v[0] in ("var", "list", "msg"):
            kind, name = v
            if kind == "var":
                return Field(name, self._lookup("variables", name))
            if kind == "list":
                return Field(name, self._lookup("lists", name))
            return Field(name, self.owner.message(name))
        return Field(v)

    def _emit(self, node: Node, bid: str, parent: str | None, next_id: str | None, top: bool) -> None:
        record: dict[str, Any] = {"opcode": node.opcode, "parent": parent, "next": next_id, "top": top}
        self.blocks[bid] = record  # reserve position so ids stay in emission order
        inputs: dict[str, InputValue] = {}
        for name, v in node.inputs.items():
            inputs[name] = self._value(v, bid)
        for name, stack in node.stacks.items():
            if stack:
                inputs[name] = BlockRef(self._emit_stack(stack, bid))
        record["inputs"] = inputs
        record["fields"] = {n: self._field(v) for n, v in node.fields.items()}
        record["mutation"] = node.mutation

    def build(self) -> Target:
        blocks = {
            bid: Block(
                id=bid,
                opcode=r["opcode"],
                parent=r["parent"],
                next=r["next"],
                inputs=r["inputs"],
                fields=r["fields"],
                top_level=r["top"],
                mutation=r["mutation"],
            )
            for bid, r in self.blocks.items()
        }
        state = dict(self.state)
        costumes = tuple(_asset(n, "image", width=w, height=h) for n, w, h in state.pop("costumes", ()))
        sounds = tuple(_asset(n, "sound", duration=d) for n, d in state.pop("sounds", ()))
        return Target(
            id=state.pop("id", self.name),
            name=self.name,
            is_stage=self.is_stage,
            variables=dict(self.variables),
            lists=dict(self.lists),
            blocks=blocks,
            costumes=costumes,
            sounds=sounds,
            **state,
        )


class ProjectBuilder:
    def __init__(self, backdrops: tuple = (("backdrop1", 480, 360),)):
        self.stage = TargetBuilder(self, "Stage", True, costumes=backdrops)
        self.sprites: list[TargetBuilder] = []
        self.broadcasts: dict[str, str] = {}

    def sprite(self, name: str, costumes: tuple = (("costume1", 40, 40),), **state: Any) -> TargetBuilder:
        tb = TargetBuilder(self, name, False, costumes=costumes, layer=len(self.sprites) + 1, **state)
        self.sprites.append(tb)
        return tb

    def message(self, name: str) -> str:
        for mid, n in self.broadcasts.items():
            if n == name:
                return mid
        mid = f"m_{slug(name)}"
        self.broadcasts[mid] = name
        return mid

    def build(self) -> ProjectIR:
        p = ProjectIR(
            targets=(self.stage.build(), *(s.build() for s in self.sprites)),
            broadcasts=dict(self.broadcasts),
        )
        check_invariants(p)
        return p
