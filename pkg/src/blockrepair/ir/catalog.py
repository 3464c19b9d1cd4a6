"""Supported opcode catalog.

Anything outside :data:`OPCODES` is rejected at parse time. Menu shadows from
real ``.sb3`` files are folded into literals before the check (see
:data:`MENU_SHADOWS`), so they never reach the catalog.
"""

from __future__ import annotations

HATS = frozenset(
    {
        "event_whenflagclicked",
        "event_whenkeypressed",
        "event_whenthisspriteclicked",
        "event_whenbroadcastreceived",
        "control_start_as_clone",
        "procedures_definition",
    }
)

EVENT_HATS = HATS - {"procedures_definition"}

STATEMENTS = frozenset(
    {
        "event_broadcast",
        "event_broadcastandwait",
        "control_wait",
        "control_repeat",
        "control_forever",
        "control_if",
        "control_if_else",
        "control_wait_until",
        "control_repeat_until",
        "control_stop",
        "control_create_clone_of",
        "control_delete_this_clone",
        "data_setvariableto",
        "data_changevariableby",
        "data_addtolist",
        "data_deletealloflist",
        "data_deleteoflist",
        "motion_gotoxy",
        "motion_changexby",
        "motion_changeyby",
        "motion_setx",
        "motion_sety",
        "motion_pointindirection",
        "looks_show",
        "looks_hide",
        "looks_switchcostumeto",
        "looks_nextcostume",
        "looks_switchbackdropto",
        "procedures_call",
    }
)

REPORTERS = frozenset(
    {
        "data_itemoflist",
        "data_lengthoflist",
        "sensing_keypressed",
        "sensing_touchingobject",
        "operator_add",
        "operator_subtract",
        "operator_multiply",
        "operator_divide",
        "operator_random",
        "operator_gt",
        "operator_lt",
        "operator_equals",
        "operator_and",
        "operator_or",
        "operator_not",
        "operator_join",
        # procedure parameters need a reader block; sb3 uses these two
        "argument_reporter_string_number",
        "argument_reporter_boolean",
    }
)

OPCODES = HATS | STATEMENTS | REPORTERS

BROADCASTERS = frozenset({"event_broadcast", "event_broadcastandwait"})
BROADCAST_USES = BROADCASTERS | {"event_whenbroadcastreceived"}

# Inputs that hold a stack of statements rather than a single reporter.
SUBSTACK_INPUTS = frozenset({"SUBSTACK", "SUBSTACK2"})

# Blocks that change something the VM logs at checkpoints.
SIGNAL_WRITERS = frozenset(
    {
        "event_broadcast",
        "event_broadcastandwait",
        "control_create_clone_of",
        "control_delete_this_clone",
        "data_setvariableto",
        "data_changevariableby",
        "data_addtolist",
        "data_deletealloflist",
        "data_deleteoflist",
        "motion_gotoxy",
        "motion_changexby",
        "motion_changeyby",
        "motion_setx",
        "motion_sety",
        "motion_pointindirection",
        "looks_show",
        "looks_hide",
        "looks_switchcostumeto",
        "looks_nextcostume",
        "looks_switchbackdropto",
    }
)

# sb3 menu shadow opcode -> the single field that carries its value.
MENU_SHADOWS = {
    "looks_costume": "COSTUME",
    "looks_backdrops": "BACKDROP",
    "sensing_keyoptions": "KEY_OPTION",
    "sensing_touchingobjectmenu": "TOUCHINGOBJECTMENU",
    "control_create_clone_of_menu": "CLONE_OPTION",
    "event_broadcast_menu": "BROADCAST_OPTION",
}

KEY_NAMES = frozenset(
    {"space", "up arrow", "down arrow", "left arrow", "right arrow", "enter", "any"}
    | {chr(c) for c in range(ord("a"), ord("z") + 1)}
    | {str(d) for d in range(10)}
)


def is_hat(opcode: str) -> bool:
    return opcode in HATS
