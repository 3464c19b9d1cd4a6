"""Tick-based cooperative interpreter.

Each script runs as a Python generator; ``yield`` ends the thread's turn for
the current tick. A tick dispatches the scenario events stamped with it, then
steps every live thread once in a fixed order (target order, clone creation
order, hat id). Threads started during a tick by a broadcast run in a later
pass of the same tick. Loops yield after every iteration unless they run
inside a custom block marked "run without screen refresh".

Runs never raise for runtime faults: a thread that executes more than
:data:`STEP_QUOTA` blocks in one tick ends the run as ``crashed("runaway")``
and a custom-block call nested deeper than :data:`MAX_CALL_DEPTH` ends it as
``crashed("recursion")``.
"""

from __future__ import annotations

import math
from typing import Any, Callable, Iterator

from .. import canonical
from ..errors import TargetNotFound
from ..ir import signals as sig
from ..ir.model import BlockRef, ListRef, Literal, ProjectIR, Target, VarRef
from . import values as val
from .rng import SplitMix64
from .scenario import GreenFlag, InjectBroadcast, KeyDown, KeyUp, Scenario, SpriteClick
from .trace import Snapshot, Trace

STEP_QUOTA = 10_000
MAX_CALL_DEPTH = 64
CLONE_CAP = 300
TICKS_PER_SECOND = 30
STAGE_HALF_W = 240
STAGE_HALF_H = 180
LIST_CAP = 200_000
# Broadcast chains that keep restarting threads within one tick get cut off
# here and continue on the next tick.
MAX_PASSES = 64


class Crash(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _StopThread(Exception):
    pass


class Instance:
    """A live sprite (original or clone) or the stage."""

    __slots__ = (
        "target", "index", "is_clone", "clone_seq", "variables", "lists",
        "x", "y", "direction", "size", "visible", "costume", "alive", "uid",
    )

    def __init__(self, target: Target, index: int, uid: int):
        self.target = target
        self.index = index
        self.uid = uid
        self.is_clone = False
        self.clone_seq = 0
        self.variables = {vid: value for vid, (_, value) in target.variables.items()}
        self.lists = {lid: list(items) for lid, (_, items) in target.lists.items()}
        self.x = target.x
        self.y = target.y
        self.direction = target.direction
        self.size = target.size
        self.visible = target.visible
        self.costume = target.current_costume
        self.alive = True

    def clone(self, uid: int, seq: int) -> Instance:
        c = Instance.__new__(Instance)
        c.target = self.target
        c.index = self.index
        c.uid = uid
        c.is_clone = True
        c.clone_seq = seq
        c.variables = dict(self.variables)
        c.lists = {k: list(v) for k, v in self.lists.items()}
        c.x, c.y, c.direction, c.size = self.x, self.y, self.direction, self.size
        c.visible = self.visible
        c.costume = self.costume
        c.alive = True
        return c


class Thread:
    __slots__ = ("inst", "hat_id", "key", "gen", "done", "ran_tick", "restart",
                 "steps", "frames", "warp", "sleep_until")

    def __init__(self, inst: Instance, hat_id: str):
        self.inst = inst
        self.hat_id = hat_id
        self.key = (inst.index, inst.clone_seq, hat_id)
        self.gen: Iterator | None = None
        self.done = False
        self.ran_tick = -1
        self.restart = False
        self.steps = 0
        self.frames: list[dict[str, Any]] = []
        self.warp = 0
        self.sleep_until = 0


def uses_random(p: ProjectIR) -> bool:
    return any(b.opcode == "operator_random" for _, b in p.iter_blocks())


class VM:
    def __init__(self, project: ProjectIR, scenario: Scenario, seed: int):
        self.p = project
        self.s = scenario
        self.seed = seed
        self.rng = SplitMix64(seed)
        self.tick = 0
        self.held: set[str] = set()
        self.current: Thread | None = None
        self.threads: dict[tuple[int, str], Thread] = {}
        self.interval_broadcasts: set[str] = set()
        self.events_log: list[tuple[int, str]] = []
        self._logged: set[tuple[int, str]] = set()
        self._next_uid = len(project.targets)
        self._next_seq = 1
        self._index_hats()
        self.originals = [Instance(t, i, i) for i, t in enumerate(project.targets)]
        self.instances: list[Instance] = list(self.originals)
        self.stage = self.originals[0]
        self._stmt: dict[str, Callable] = {
            "event_broadcast": self._broadcast,
            "event_broadcastandwait": self._broadcast_wait,
            "control_wait": self._wait,
            "control_repeat": self._repeat,
            "control_forever": self._forever,
            "control_if": self._if,
            "control_if_else": self._if_else,
            "control_wait_until": self._wait_until,
            "control_repeat_until": self._repeat_until,
            "control_stop": self._stop,
            "control_create_clone_of": self._create_clone,
            "control_delete_this_clone": self._delete_clone,
            "data_setvariableto": self._set_var,
            "data_changevariableby": self._change_var,
            "data_addtolist": self._add_to_list,
            "data_deletealloflist": self._clear_list,
            "data_deleteoflist": self._delete_of_list,
            "motion_gotoxy": self._goto,
            "motion_changexby": self._change_x,
            "motion_changeyby": self._change_y,
            "motion_setx": self._set_x,
            "motion_sety": self._set_y,
            "motion_pointindirection": self._point,
            "looks_show": self._show,
            "looks_hide": self._hide,
            "looks_switchcostumeto": self._switch_costume,
            "looks_nextcostume": self._next_costume,
            "looks_switchbackdropto": self._switch_backdrop,
            "procedures_call": self._call,
        }
        self._rep: dict[str, Callable] = {
            "data_itemoflist": self._item_of_list,
            "data_lengthoflist": self._length_of_list,
            "sensing_keypressed": self._key_pressed,
            "sensing_touchingobject": self._touching,
            "operator_add": lambda th, b: val.add(self.ev(th, b, "NUM1"), self.ev(th, b, "NUM2")),
            "operator_subtract": lambda th, b: val.subtract(self.ev(th, b, "NUM1"), self.ev(th, b, "NUM2")),
            "operator_multiply": lambda th, b: val.multiply(self.ev(th, b, "NUM1"), self.ev(th, b, "NUM2")),
            "operator_divide": lambda th, b: val.divide(self.ev(th, b, "NUM1"), self.ev(th, b, "NUM2")),
            "operator_random": self._random,
            "operator_gt": lambda th, b: self._cmp(th, b) > 0,
            "operator_lt": lambda th, b: self._cmp(th, b) < 0,
            "operator_equals": lambda th, b: self._cmp(th, b) == 0,
            "operator_and": lambda th, b: val.to_bool(self.ev(th, b, "OPERAND1"))
            and val.to_bool(self.ev(th, b, "OPERAND2")),
            "operator_or": lambda th, b: val.to_bool(self.ev(th, b, "OPERAND1"))
            or val.to_bool(self.ev(th, b, "OPERAND2")),
            "operator_not": lambda th, b: not val.to_bool(self.ev(th, b, "OPERAND")),
            "operator_join": lambda th, b: val.to_str(self.ev(th, b, "STRING1"))
            + val.to_str(self.ev(th, b, "STRING2")),
            "argument_reporter_string_number": self._argument,
            "argument_reporter_boolean": self._argument,
        }

    # --- static indexes -------------------------------------------------------

    def _index_hats(self) -> None:
        self.flag_hats: dict[str, list[str]] = {}
        self.key_hats: dict[str, list[tuple[str, str]]] = {}
        self.click_hats: dict[str, list[str]] = {}
        self.clone_hats: dict[str, list[str]] = {}
        self.msg_hats: dict[str, dict[str, list[str]]] = {}
        self.procs: dict[str, dict[str, Any]] = {}
        for t in self.p.targets:
            flags, keys, clicks, clones = [], [], [], []
            msgs: dict[str, list[str]] = {}
            procs: dict[str, Any] = {}
            for hat in sorted(t.hats(), key=lambda b: b.id):
                op = hat.opcode
                if op == "event_whenflagclicked":
                    flags.append(hat.id)
                elif op == "event_whenkeypressed":
                    f = hat.fields.get("KEY_OPTION")
                    keys.append((str(f.value) if f else "", hat.id))
                elif op == "event_whenthisspriteclicked":
                    clicks.append(hat.id)
                elif op == "control_start_as_clone":
                    clones.append(hat.id)
                elif op == "event_whenbroadcastreceived":
                    f = hat.fields.get("BROADCAST_OPTION")
                    msgs.setdefault(str(f.value) if f else "", []).append(hat.id)
                elif op == "procedures_definition" and hat.mutation:
                    procs.setdefault(str(hat.mutation.get("proccode", "")), hat)
            self.flag_hats[t.id] = flags
            self.key_hats[t.id] = keys
            self.click_hats[t.id] = clicks
            self.clone_hats[t.id] = clones
            self.msg_hats[t.id] = msgs
            self.procs[t.id] = procs

    # --- threads --------------------------------------------------------------

    def start(self, inst: Instance, hat_id: str) -> Thread:
        """Start (or restart from the top) the script under ``hat_id``."""
        k = (inst.uid, hat_id)
        th = self.threads.get(k)
        if th is not None and not th.done:
            if th is self.current:
                th.restart = True
            else:
                self._reset(th)
            return th
        th = Thread(inst, hat_id)
        self._reset(th)
        self.threads[k] = th
        return th

    def _reset(self, th: Thread) -> None:
        hat = th.inst.target.blocks[th.hat_id]
        th.gen = self._stack(th, hat.next)
        th.done = False
        th.ran_tick = -1
        th.restart = False
        th.frames = []
        th.warp = 0
        th.sleep_until = 0

    def _kill(self, th: Thread) -> None:
        th.done = True
        th.gen = None

    def _stack(self, th: Thread, bid: str | None) -> Iterator[None]:
        blocks = th.inst.target.blocks
        stmt = self._stmt
        while bid is not None:
            b = blocks[bid]
            th.steps += 1
            if th.steps > STEP_QUOTA:
                raise Crash("runaway")
            fn = stmt.get(b.opcode)
            if fn is not None:
                r = fn(th, b)
                if r is not None:
                    yield from r
            bid = b.next

    def _iteration(self, th: Thread) -> bool:
        """Account for one loop iteration; True if the loop should yield."""
        th.steps += 1
        if th.steps > STEP_QUOTA:
            raise Crash("runaway")
        return th.warp == 0

    def _step(self, th: Thread) -> None:
        th.steps = 0
        self.current = th
        try:
            next(th.gen)
        except (StopIteration, _StopThread):
            self._kill(th)
        finally:
            self.current = None
        if th.restart:
            if th.done:
                th.restart = False
            else:
                self._reset(th)

    # --- evaluation -----------------------------------------------------------

    def ev(self, th: Thread, b, name: str) -> Any:
        v = b.inputs.get(name)
        if v is None:
            return ""
        cls = type(v)
        if cls is Literal:
            return v.value
        if cls is BlockRef:
            rb = th.inst.target.blocks[v.block_id]
            fn = self._rep.get(rb.opcode)
            return "" if fn is None else fn(th, rb)
        if cls is VarRef:
            return self._read_var(th.inst, v.var_id)
        if cls is ListRef:
            return _list_text(self._list(th.inst, v.list_id))
        return ""

    def _cond(self, th: Thread, b) -> bool:
        return val.to_bool(self.ev(th, b, "CONDITION"))

    def _cmp(self, th: Thread, b) -> int:
        return val.compare(self.ev(th, b, "OPERAND1"), self.ev(th, b, "OPERAND2"))

    def _read_var(self, inst: Instance, vid: str) -> Any:
        if vid in inst.variables:
            return inst.variables[vid]
        return self.stage.variables.get(vid, 0)

    def _write_var(self, inst: Instance, vid: str, value: Any) -> None:
        if vid in inst.variables:
            inst.variables[vid] = value
        else:
            self.stage.variables[vid] = value

    def _list(self, inst: Instance, lid: str) -> list:
        if lid in inst.lists:
            return inst.lists[lid]
        return self.stage.lists.setdefault(lid, [])

    def _field_ref(self, b, name: str) -> str:
        f = b.fields.get(name)
        return "" if f is None else str(f.ref)

    # --- events & broadcasts ----------------------------------------------------

    def broadcast(self, msg: str) -> list[Thread]:
        entry = (self.tick, msg)
        if entry not in self._logged:
            self._logged.add(entry)
            self.events_log.append(entry)
        self.interval_broadcasts.add(msg)
        started = []
        for inst in list(self.instances):
            for hat_id in self.msg_hats[inst.target.id].get(msg, ()):
                if inst.alive:
                    started.append(self.start(inst, hat_id))
        return started

    def _message(self, th: Thread, b) -> str:
        f = b.fields.get("BROADCAST_OPTION")
        if f is not None:
            return str(f.value)
        return val.to_str(self.ev(th, b, "BROADCAST_INPUT"))

    def _dispatch(self, event) -> None:
        if isinstance(event, GreenFlag):
            for th in self.threads.values():
                self._kill(th)
            self.threads.clear()
            for inst in self.instances:
                if inst.is_clone:
                    inst.alive = False
            self.instances = list(self.originals)
            for inst in self.originals:
                for hat_id in self.flag_hats[inst.target.id]:
                    self.start(inst, hat_id)
        elif isinstance(event, KeyDown):
            if event.key in self.held:
                return
            self.held.add(event.key)
            for inst in list(self.instances):
                for k, hat_id in self.key_hats[inst.target.id]:
                    if k == event.key or k == "any":
                        self.start(inst, hat_id)
        elif isinstance(event, KeyUp):
            self.held.discard(event.key)
        elif isinstance(event, SpriteClick):
            inst = self._original(event.target_id)
            for hat_id in self.click_hats[inst.target.id]:
                self.start(inst, hat_id)
        elif isinstance(event, InjectBroadcast):
            self.broadcast(event.message)

    def _original(self, target_id: str) -> Instance:
        for inst in self.originals:
            if inst.target.id == target_id:
                return inst
        raise TargetNotFound("sprite", target_id)

    # --- statements -------------------------------------------------------------

    def _broadcast(self, th: Thread, b) -> None:
        self.broadcast(self._message(th, b))

    def _broadcast_wait(self, th: Thread, b):
        started = self.broadcast(self._message(th, b))
        if not started:
            return None
        return self._await(started)

    def _await(self, started: list[Thread]) -> Iterator[None]:
        yield
        while any(not t.done for t in started):
            yield

    def _wait(self, th: Thread, b):
        secs = val.to_number(self.ev(th, b, "DURATION"))
        if math.isinf(secs):
            ticks = self.s.tick_budget + 2 if secs > 0 else 1
        else:
            ticks = max(1, math.floor(TICKS_PER_SECOND * secs + 0.5))
        return self._sleep(th, ticks)

    def _sleep(self, th: Thread, ticks: int) -> Iterator[None]:
        th.sleep_until = self.tick + ticks
        yield
        th.sleep_until = 0

    def _repeat(self, th: Thread, b) -> Iterator[None]:
        n = val.to_number(self.ev(th, b, "TIMES"))
        body = _ref(b, "SUBSTACK")
        count = math.inf if math.isinf(n) and n > 0 else max(0, math.floor(n + 0.5)) if math.isfinite(n) else 0
        i = 0
        while i < count:
            i += 1
            if body is not None:
                yield from self._stack(th, body)
            if self._iteration(th):
                yield

    def _forever(self, th: Thread, b) -> Iterator[None]:
        body = _ref(b, "SUBSTACK")
        while True:
            if body is not None:
                yield from self._stack(th, body)
            if self._iteration(th):
                yield

    def _if(self, th: Thread, b):
        if self._cond(th, b):
            body = _ref(b, "SUBSTACK")
            if body is not None:
                return self._stack(th, body)
        return None

    def _if_else(self, th: Thread, b):
        body = _ref(b, "SUBSTACK" if self._cond(th, b) else "SUBSTACK2")
        return None if body is None else self._stack(th, body)

    def _wait_until(self, th: Thread, b):
        if self._cond(th, b):
            return None
        return self._poll(th, b)

    def _poll(self, th: Thread, b) -> Iterator[None]:
        while True:
            yield
            if self._cond(th, b):
                return

    def _repeat_until(self, th: Thread, b) -> Iterator[None]:
        body = _ref(b, "SUBSTACK")
        while not self._cond(th, b):
            if body is not None:
                yield from self._stack(th, body)
            if self._iteration(th):
                yield

    def _stop(self, th: Thread, b) -> None:
        f = b.fields.get("STOP_OPTION")
        option = str(f.value) if f else "all"
        if option == "all":
            for other in self.threads.values():
                self._kill(other)
            raise _StopThread
        if option.startswith("other scripts"):
            for other in self.threads.values():
                if other.inst is th.inst and other is not th:
                    self._kill(other)
            return
        raise _StopThread

    def _create_clone(self, th: Thread, b) -> None:
        option = val.to_str(self.ev(th, b, "CLONE_OPTION"))
        if option == "_myself_":
            src = th.inst
        else:
            t = self.p.target_by_name(option)
            if t is None or t.is_stage:
                return
            src = self._original(t.id)
        if src.target.is_stage or sum(1 for i in self.instances if i.is_clone) >= CLONE_CAP:
            return
        c = src.clone(self._next_uid, self._next_seq)
        self._next_uid += 1
        self._next_seq += 1
        self.instances.append(c)
        for hat_id in self.clone_hats[c.target.id]:
            self.start(c, hat_id)

    def _delete_clone(self, th: Thread, b) -> None:
        inst = th.inst
        if not inst.is_clone:
            return
        inst.alive = False
        self.instances.remove(inst)
        for other in self.threads.values():
            if other.inst is inst:
                self._kill(other)
        raise _StopThread

    def _set_var(self, th: Thread, b) -> None:
        self._write_var(th.inst, self._field_ref(b, "VARIABLE"), self.ev(th, b, "VALUE"))

    def _change_var(self, th: Thread, b) -> None:
        vid = self._field_ref(b, "VARIABLE")
        self._write_var(th.inst, vid, val.add(self._read_var(th.inst, vid), self.ev(th, b, "VALUE")))

    def _add_to_list(self, th: Thread, b) -> None:
        items = self._list(th.inst, self._field_ref(b, "LIST"))
        if len(items) < LIST_CAP:
            items.append(self.ev(th, b, "ITEM"))

    def _clear_list(self, th: Thread, b) -> None:
        self._list(th.inst, self._field_ref(b, "LIST")).clear()

    def _delete_of_list(self, th: Thread, b) -> None:
        items = self._list(th.inst, self._field_ref(b, "LIST"))
        index = self.ev(th, b, "INDEX")
        if index == "all":
            items.clear()
            return
        i = _list_index(index, len(items))
        if i is not None:
            del items[i]

    def _goto(self, th: Thread, b) -> None:
        x, y = val.to_number(self.ev(th, b, "X")), val.to_number(self.ev(th, b, "Y"))
        _move(th.inst, x, y)

    def _change_x(self, th: Thread, b) -> None:
        _move(th.inst, val.add(th.inst.x, self.ev(th, b, "DX")), th.inst.y)

    def _change_y(self, th: Thread, b) -> None:
        _move(th.inst, th.inst.x, val.add(th.inst.y, self.ev(th, b, "DY")))

    def _set_x(self, th: Thread, b) -> None:
        _move(th.inst, val.to_number(self.ev(th, b, "X")), th.inst.y)

    def _set_y(self, th: Thread, b) -> None:
        _move(th.inst, th.inst.x, val.to_number(self.ev(th, b, "Y")))

    def _point(self, th: Thread, b) -> None:
        d = val.to_number(self.ev(th, b, "DIRECTION"))
        if th.inst.target.is_stage or not math.isfinite(d):
            return
        th.inst.direction = val.tidy(((d + 179) % 360) - 179)

    def _show(self, th: Thread, b) -> None:
        if not th.inst.target.is_stage:
            th.inst.visible = True

    def _hide(self, th: Thread, b) -> None:
        if not th.inst.target.is_stage:
            th.inst.visible = False

    def _switch_costume(self, th: Thread, b) -> None:
        inst = th.inst
        if not inst.target.is_stage:
            inst.costume = _costume_index(inst.target, self.ev(th, b, "COSTUME"), inst.costume)

    def _next_costume(self, th: Thread, b) -> None:
        inst = th.inst
        if inst.target.costumes and not inst.target.is_stage:
            inst.costume = (inst.costume + 1) % len(inst.target.costumes)

    def _switch_backdrop(self, th: Thread, b) -> None:
        st = self.stage
        st.costume = _costume_index(st.target, self.ev(th, b, "BACKDROP"), st.costume)

    def _call(self, th: Thread, b):
        mutation = b.mutation or {}
        d = self.procs[th.inst.target.id].get(str(mutation.get("proccode", "")))
        if d is None or d.next is None:
            return None
        dm = d.mutation or {}
        frame = {
            name: self.ev(th, b, aid)
            for aid, name in zip(dm.get("argumentids", ()), dm.get("argumentnames", ()))
        }
        if len(th.frames) >= MAX_CALL_DEPTH:
            raise Crash("recursion")
        return self._invoke(th, d.next, frame, bool(dm.get("warp", False)))

    def _invoke(self, th: Thread, head: str, frame: dict, warp: bool) -> Iterator[None]:
        th.frames.append(frame)
        if warp:
            th.warp += 1
        yield from self._stack(th, head)
        if warp:
            th.warp -= 1
        th.frames.pop()

    # --- reporters --------------------------------------------------------------

    def _argument(self, th: Thread, b) -> Any:
        f = b.fields.get("VALUE")
        if f is None or not th.frames:
            return 0 if b.opcode == "argument_reporter_boolean" else ""
        return th.frames[-1].get(str(f.value), "")

    def _item_of_list(self, th: Thread, b) -> Any:
        items = self._list(th.inst, self._field_ref(b, "LIST"))
        i = _list_index(self.ev(th, b, "INDEX"), len(items))
        return "" if i is None else items[i]

    def _length_of_list(self, th: Thread, b) -> int:
        return len(self._list(th.inst, self._field_ref(b, "LIST")))

    def _key_pressed(self, th: Thread, b) -> bool:
        k = val.to_str(self.ev(th, b, "KEY_OPTION"))
        return bool(self.held) if k == "any" else k in self.held

    def _touching(self, th: Thread, b) -> bool:
        me = th.inst
        if me.target.is_stage or not me.visible:
            return False
        box = _bbox(me)
        if box is None:
            return False
        other = val.to_str(self.ev(th, b, "TOUCHINGOBJECTMENU"))
        if other == "_edge_":
            l, r, bot, top = box
            return l <= -STAGE_HALF_W or r >= STAGE_HALF_W or bot <= -STAGE_HALF_H or top >= STAGE_HALF_H
        if other == "_mouse_":
            return False
        for inst in self.instances:
            if inst is me or inst.target.name != other or not inst.visible or inst.target.is_stage:
                continue
            ob = _bbox(inst)
            if ob is not None and box[0] < ob[1] and ob[0] < box[1] and box[2] < ob[3] and ob[2] < box[3]:
                return True
        return False

    def _random(self, th: Thread, b) -> int | float:
        a_raw, b_raw = self.ev(th, b, "FROM"), self.ev(th, b, "TO")
        lo, hi = val.to_number(a_raw), val.to_number(b_raw)
        if lo > hi:
            lo, hi = hi, lo
        if _integral(a_raw, lo) and _integral(b_raw, hi):
            return lo + self.rng.below(int(hi) - int(lo) + 1)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            return lo
        return val.tidy(round(lo + self.rng.uniform() * (hi - lo), 2))

    # --- the run loop -------------------------------------------------------------

    def _validate_events(self) -> None:
        names = self.p.message_names()
        ids = {t.id for t in self.p.sprites}
        for _, e in self.s.events:
            if isinstance(e, SpriteClick) and e.target_id not in ids:
                raise TargetNotFound("sprite", e.target_id)
            if isinstance(e, InjectBroadcast) and e.message not in names:
                raise TargetNotFound("message", e.message)

    def _run_tick(self, tick: int) -> None:
        for _ in range(MAX_PASSES):
            batch = [th for th in self.threads.values() if not th.done and th.ran_tick != tick]
            if not batch:
                break
            batch.sort(key=lambda th: th.key)
            for th in batch:
                if th.done or th.ran_tick == tick:
                    continue
                th.ran_tick = tick
                if th.sleep_until > tick:
                    continue
                self._step(th)
        if any(th.done for th in self.threads.values()):
            self.threads = {k: th for k, th in self.threads.items() if not th.done}

    def snapshot(self) -> Snapshot:
        snap: Snapshot = {}
        for inst in self.originals:
            for vid, v in inst.variables.items():
                snap[sig.var_key(vid)] = val.snapshot_value(v)
            for lid, items in inst.lists.items():
                enc = [val.snapshot_value(x) for x in items]
                snap[sig.list_key(lid)] = [len(items), canonical.digest(enc)]
        clones: dict[str, int] = {}
        for inst in self.instances:
            if inst.is_clone:
                clones[inst.target.id] = clones.get(inst.target.id, 0) + 1
        for inst in self.originals[1:]:
            tid = inst.target.id
            snap[sig.sprite_key("x", tid)] = val.snapshot_value(inst.x)
            snap[sig.sprite_key("y", tid)] = val.snapshot_value(inst.y)
            snap[sig.sprite_key("direction", tid)] = val.snapshot_value(inst.direction)
            snap[sig.sprite_key("size", tid)] = val.snapshot_value(inst.size)
            snap[sig.sprite_key("costume", tid)] = inst.costume
            snap[sig.sprite_key("visible", tid)] = inst.visible
            snap[sig.sprite_key("clones", tid)] = clones.get(tid, 0)
        snap[sig.BACKDROP] = self.stage.costume
        snap[sig.BROADCASTS] = sorted(self.interval_broadcasts)
        self.interval_broadcasts = set()
        return snap

    def run(self) -> Trace:
        self._validate_events()
        H = self.s.tick_budget
        k = self.s.checkpoint_interval
        events = self.s.events
        n_events = len(events)
        ei = 0
        checkpoints: list[tuple[int, Snapshot]] = []
        tick = 0
        while tick <= H:
            self.tick = tick
            try:
                while ei < n_events and events[ei][0] == tick:
                    self._dispatch(events[ei][1])
                    ei += 1
                self._run_tick(tick)
            except Crash as c:
                checkpoints.append((tick, self.snapshot()))
                return Trace(self.s.id, self.seed, tuple(checkpoints), "crashed", c.reason, tuple(self.events_log))
            if tick % k == 0 or tick == H:
                checkpoints.append((tick, self.snapshot()))
            # Jump over ticks in which nothing can happen.
            nxt = min(H, (tick // k + 1) * k)
            if ei < n_events:
                nxt = min(nxt, events[ei][0])
            for th in self.threads.values():
                if not th.done:
                    nxt = min(nxt, max(tick + 1, th.sleep_until))
                    if nxt == tick + 1:
                        break
            tick = max(nxt, tick + 1)
        return Trace(self.s.id, self.seed, tuple(checkpoints), "completed", None, tuple(self.events_log))


# --- helpers ------------------------------------------------------------------


def _ref(b, name: str) -> str | None:
    v = b.inputs.get(name)
    return v.block_id if type(v) is BlockRef else None


def _move(inst: Instance, x: Any, y: Any) -> None:
    if inst.target.is_stage:
        return
    x, y = val.to_number(x), val.to_number(y)
    if math.isfinite(x):
        inst.x = val.tidy(x)
    if math.isfinite(y):
        inst.y = val.tidy(y)


def _bbox(inst: Instance) -> tuple[float, float, float, float] | None:
    costumes = inst.target.costumes
    if not costumes:
        return None
    c = costumes[inst.costume % len(costumes)]
    hw = c.width * inst.size / 200
    hh = c.height * inst.size / 200
    return inst.x - hw, inst.x + hw, inst.y - hh, inst.y + hh


def _costume_index(target: Target, value: Any, current: int) -> int:
    costumes = target.costumes
    if not costumes:
        return current
    n = len(costumes)
    if isinstance(value, str):
        for i, c in enumerate(costumes):
            if c.name == value:
                return i
        if value in ("next costume", "next backdrop"):
            return (current + 1) % n
        if value in ("previous costume", "previous backdrop"):
            return (current - 1) % n
        if not val.is_numeric(value):
            return current
    num = val.to_number(value)
    if not math.isfinite(num):
        return current
    return (math.floor(num + 0.5) - 1) % n


def _list_index(index: Any, length: int) -> int | None:
    if index == "last":
        return length - 1 if length else None
    n = val.to_number(index)
    if not math.isfinite(n):
        return None
    i = math.floor(n)
    return i - 1 if 1 <= i <= length else None


def _list_text(items: list) -> str:
    parts = [val.to_str(x) for x in items]
    if all(len(p) == 1 for p in parts):
        return "".join(parts)
    return " ".join(parts)


def _integral(raw: Any, n: int | float) -> bool:
    if isinstance(raw, str) and "." in raw:
        return False
    return isinstance(n, int)


def run(p: ProjectIR, s: Scenario, seed: int) -> Trace:
    """Execute ``s`` against ``p``; the result depends only on ``(p, s, seed)``."""
    return VM(p, s, seed).run()


def run_reruns(p: ProjectIR, s: Scenario, R: int) -> list[Trace]:
    if R < 1:
        raise ValueError("R must be at least 1")
    seeds = [s.seed_policy.seed_for(r) for r in range(1, R + 1)]
    if not uses_random(p):
        # Seeds only feed the RNG, so one run stands in for all of them.
        base = run(p, s, seeds[0])
        return [base.relabel(sd) for sd in seeds]
    cache: dict[int, Trace] = {}
    out = []
    for sd in seeds:
        if sd not in cache:
            cache[sd] = run(p, s, sd)
        out.append(cache[sd])
    return out
