"""Reading and writing the ``project.json`` subset.

The reader accepts either raw JSON or an ``.sb3``-style zip whose
``project.json`` entry holds the JSON. It understands the sb3 encodings for
inputs (primitive arrays and block references), folds common menu shadows
into literals, and moves ``procedures_prototype`` mutations onto their
definitions. The writer always emits the native canonical form.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from typing import Any

from .. import canonical
from ..errors import MalformedJson
from .catalog import MENU_SHADOWS
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

_LIST_MUTATION_KEYS = ("argumentids", "argumentnames", "argumentdefaults")


# --- inputs / fields / blocks -----------------------------------------------


def encode_input(value: InputValue) -> list:
    if isinstance(value, BlockRef):
        return [2, value.block_id]
    if isinstance(value, VarRef):
        return [3, [12, value.name, value.var_id]]
    if isinstance(value, ListRef):
        return [3, [13, value.name, value.list_id]]
    v = value.value
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return [1, [4, v]]
    return [1, [10, v]]


def decode_primitive(prim: Any, where: str) -> InputValue:
    if not isinstance(prim, list) or not prim:
        raise MalformedJson(f"bad primitive {prim!r} in {where}")
    code = prim[0]
    if code == 12 and len(prim) >= 3:
        return VarRef(str(prim[1]), str(prim[2]))
    if code == 13 and len(prim) >= 3:
        return ListRef(str(prim[1]), str(prim[2]))
    if code in (4, 5, 6, 7, 8, 9, 10, 11) and len(prim) >= 2:
        return Literal(prim[1])
    raise MalformedJson(f"unsupported primitive code {code!r} in {where}")


def decode_input(raw: Any, where: str) -> InputValue | None:
    """Decode one sb3 input array. ``None`` means an empty slot."""
    if not isinstance(raw, list) or len(raw) < 2:
        raise MalformedJson(f"bad input encoding {raw!r} in {where}")
    value = raw[1]
    if value is None:
        return None
    if isinstance(value, str):
        return BlockRef(value)
    return decode_primitive(value, where)


def encode_field(f: Field) -> list:
    return [f.value, f.ref]


def decode_field(raw: Any, where: str) -> Field:
    if not isinstance(raw, list) or not raw:
        raise MalformedJson(f"bad field encoding {raw!r} in {where}")
    ref = raw[1] if len(raw) > 1 else None
    return Field(raw[0], None if ref is None else str(ref))


def _normalize_mutation(raw: dict) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if key in ("tagName", "children"):
            continue
        if key in _LIST_MUTATION_KEYS and isinstance(value, str):
            try:
                value = json.loads(value)
            except ValueError as exc:
                raise MalformedJson(f"mutation {key} is not a JSON list") from exc
        elif key == "warp" and isinstance(value, str):
            value = value == "true"
        out[key] = value
    return out


def block_to_json(b: Block) -> dict[str, Any]:
    out: dict[str, Any] = {
        "opcode": b.opcode,
        "parent": b.parent,
        "next": b.next,
        "inputs": {k: encode_input(v) for k, v in b.inputs.items()},
        "fields": {k: encode_field(v) for k, v in b.fields.items()},
        "shadow": False,
        "topLevel": b.top_level,
    }
    if b.mutation is not None:
        out["mutation"] = dict(b.mutation)
    return out


def block_from_json(block_id: str, raw: dict[str, Any]) -> Block:
    """Decode a block record that is already in native form (no shadows)."""
    where = f"block {block_id!r}"
    if not isinstance(raw, dict) or not isinstance(raw.get("opcode"), str):
        raise MalformedJson(f"{where} has no opcode")
    inputs: dict[str, InputValue] = {}
    for name, enc in (raw.get("inputs") or {}).items():
        value = decode_input(enc, where)
        if value is not None:
            inputs[name] = value
    fields = {n: decode_field(v, where) for n, v in (raw.get("fields") or {}).items()}
    mutation = raw.get("mutation")
    return Block(
        id=block_id,
        opcode=raw["opcode"],
        parent=raw.get("parent"),
        next=raw.get("next"),
        inputs=inputs,
        fields=fields,
        top_level=bool(raw.get("topLevel", False)),
        mutation=None if mutation is None else _normalize_mutation(mutation),
    )


def _decode_blocks(raw_blocks: dict[str, Any], tname: str) -> dict[str, Block]:
    if not isinstance(raw_blocks, dict):
        raise MalformedJson(f"target {tname!r}: blocks must be an object")
    # sb3 stores loose top-level variable reporters as bare arrays; they carry
    # no behaviour and are dropped.
    raw = {k: v for k, v in raw_blocks.items() if isinstance(v, dict)}

    menus: dict[str, tuple[str, Field]] = {}
    prototypes: dict[str, dict] = {}
    dropped: set[str] = set()
    for bid, rb in raw.items():
        op = rb.get("opcode")
        if op in MENU_SHADOWS and rb.get("shadow"):
            fname = MENU_SHADOWS[op]
            enc = (rb.get("fields") or {}).get(fname)
            if enc is None:
                raise MalformedJson(f"menu shadow {bid!r} lacks field {fname}")
            menus[bid] = (fname, decode_field(enc, f"block {bid!r}"))
            dropped.add(bid)
        elif op == "procedures_prototype":
            prototypes[bid] = _normalize_mutation(rb.get("mutation") or {})
            dropped.add(bid)
            for enc in (rb.get("inputs") or {}).values():
                if isinstance(enc, list) and len(enc) > 1 and isinstance(enc[1], str):
                    dropped.add(enc[1])

    blocks: dict[str, Block] = {}
    for bid, rb in raw.items():
        if bid in dropped:
            continue
        where = f"block {bid!r}"
        if not isinstance(rb.get("opcode"), str):
            raise MalformedJson(f"{where} has no opcode")
        inputs: dict[str, InputValue] = {}
        fields = {n: decode_field(v, where) for n, v in (rb.get("fields") or {}).items()}
        mutation = rb.get("mutation")
        mutation = None if mutation is None else _normalize_mutation(mutation)
        for name, enc in (rb.get("inputs") or {}).items():
            if rb["opcode"] == "procedures_definition" and name == "custom_block":
                ref = enc[1] if isinstance(enc, list) and len(enc) > 1 else None
                if ref in prototypes:
                    mutation = prototypes[ref]
                continue
            value = decode_input(enc, where)
            if isinstance(value, BlockRef) and value.block_id in menus:
                fname, f = menus[value.block_id]
                if fname == "BROADCAST_OPTION":
                    fields["BROADCAST_OPTION"] = f
                    continue
                value = Literal(f.value)
            elif (
                name == "BROADCAST_INPUT"
                and isinstance(enc, list)
                and isinstance(enc[1], list)
                and enc[1][:1] == [11]
            ):
                prim = enc[1]
                fields["BROADCAST_OPTION"] = Field(prim[1], prim[2] if len(prim) > 2 else None)
                continue
            if value is not None:
                inputs[name] = value
        blocks[bid] = Block(
            id=bid,
            opcode=rb["opcode"],
            parent=rb.get("parent"),
            next=rb.get("next"),
            inputs=inputs,
            fields=fields,
            top_level=bool(rb.get("topLevel", rb.get("parent") is None)),
            mutation=mutation,
        )
    return blocks


# --- assets -------------------------------------------------------------------


def _asset_digest(raw: dict, archive: dict[str, bytes]) -> str:
    if "digest" in raw:
        return str(raw["digest"])
    member = raw.get("md5ext") or (
        f"{raw.get('assetId')}.{raw['dataFormat']}" if raw.get("dataFormat") else None
    )
    if member and member in archive:
        return hashlib.sha256(archive[member]).hexdigest()
    return str(raw.get("assetId", raw["name"]))


def _costume(raw: Any, archive: dict[str, bytes], tname: str) -> AssetMeta:
    if not isinstance(raw, dict) or "name" not in raw:
        raise MalformedJson(f"target {tname!r}: bad costume entry")
    try:
        width, height = raw["width"], raw["height"]
    except KeyError:
        raise MalformedJson(
            f"target {tname!r}: costume {raw['name']!r} needs width and height"
        ) from None
    if not isinstance(width, (int, float)) or not isinstance(height, (int, float)):
        raise MalformedJson(f"target {tname!r}: costume size must be numeric")
    if width <= 0 or height <= 0:
        raise MalformedJson(f"target {tname!r}: costume {raw['name']!r} has empty size")
    return AssetMeta(
        asset_id=str(raw.get("assetId", raw["name"])),
        name=str(raw["name"]),
        kind="image",
        width=width,
        height=height,
        payload_digest=_asset_digest(raw, archive),
    )


def _sound(raw: Any, archive: dict[str, bytes], tname: str) -> AssetMeta:
    if not isinstance(raw, dict) or "name" not in raw:
        raise MalformedJson(f"target {tname!r}: bad sound entry")
    if "duration" in raw:
        duration = raw["duration"]
    elif raw.get("rate"):
        duration = raw.get("sampleCount", 0) / raw["rate"]
    else:
        duration = 0
    if not isinstance(duration, (int, float)) or duration < 0:
        raise MalformedJson(f"target {tname!r}: sound {raw['name']!r} has bad duration")
    return AssetMeta(
        asset_id=str(raw.get("assetId", raw["name"])),
        name=str(raw["name"]),
        kind="sound",
        duration=duration,
        payload_digest=_asset_digest(raw, archive),
    )


def _costume_json(a: AssetMeta) -> dict:
    return {
        "assetId": a.asset_id,
        "name": a.name,
        "width": a.width,
        "height": a.height,
        "digest": a.payload_digest,
    }


def _sound_json(a: AssetMeta) -> dict:
    return {"assetId": a.asset_id, "name": a.name, "duration": a.duration, "digest": a.payload_digest}


# --- targets / project --------------------------------------------------------


def _target(raw: Any, archive: dict[str, bytes], broadcasts: dict[str, str]) -> Target:
    if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
        raise MalformedJson("every target needs a name")
    name = raw["name"]
    is_stage = bool(raw.get("isStage", False))

    variables = {}
    for vid, enc in (raw.get("variables") or {}).items():
        if not isinstance(enc, list) or len(enc) < 2:
            raise MalformedJson(f"target {name!r}: bad variable {vid!r}")
        variables[vid] = (str(enc[0]), enc[1])
    lists = {}
    for lid, enc in (raw.get("lists") or {}).items():
        if not isinstance(enc, list) or len(enc) < 2 or not isinstance(enc[1], list):
            raise MalformedJson(f"target {name!r}: bad list {lid!r}")
        lists[lid] = (str(enc[0]), tuple(enc[1]))
    for bid, bname in (raw.get("broadcasts") or {}).items():
        broadcasts[bid] = str(bname)

    costumes = tuple(_costume(c, archive, name) for c in raw.get("costumes") or [])
    sounds = tuple(_sound(s, archive, name) for s in raw.get("sounds") or [])
    kwargs: dict[str, Any] = {}
    if not is_stage:
        for key, attr in (("x", "x"), ("y", "y"), ("direction", "direction"), ("size", "size")):
            if key in raw:
                if not isinstance(raw[key], (int, float)) or isinstance(raw[key], bool):
                    raise MalformedJson(f"target {name!r}: {key} must be numeric")
                kwargs[attr] = raw[key]
        if "visible" in raw:
            kwargs["visible"] = bool(raw["visible"])
    return Target(
        id=str(raw.get("id", name)),
        name=name,
        is_stage=is_stage,
        variables=variables,
        lists=lists,
        blocks=_decode_blocks(raw.get("blocks") or {}, name),
        costumes=costumes,
        sounds=sounds,
        current_costume=int(raw.get("currentCostume", 0)),
        layer=int(raw.get("layerOrder", 0)),
        **kwargs,
    )


def _read_bytes(data: bytes) -> tuple[Any, dict[str, bytes]]:
    archive: dict[str, bytes] = {}
    if data[:2] == b"PK":
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as zf:
                names = zf.namelist()
                if "project.json" not in names:
                    raise MalformedJson("archive has no project.json entry")
                archive = {n: zf.read(n) for n in names}
        except zipfile.BadZipFile as exc:
            raise MalformedJson(f"bad zip archive: {exc}") from exc
        data = archive.pop("project.json")
    try:
        return json.loads(data.decode("utf-8")), archive
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedJson(f"not UTF-8 JSON: {exc}") from exc


def project_from_dict(doc: Any, archive: dict[str, bytes] | None = None) -> ProjectIR:
    if not isinstance(doc, dict):
        raise MalformedJson("top level must be an object")
    raw_targets = doc.get("targets")
    if not isinstance(raw_targets, list) or not raw_targets:
        raise MalformedJson("project needs a non-empty targets list")
    broadcasts: dict[str, str] = {}
    targets = tuple(_target(t, archive or {}, broadcasts) for t in raw_targets)
    if not targets[0].is_stage or any(t.is_stage for t in targets[1:]):
        raise MalformedJson("the first target, and only the first, must be the stage")
    meta = doc.get("meta") or {}
    project = ProjectIR(
        targets=targets,
        broadcasts=broadcasts,
        monitors=tuple(doc.get("monitors") or ()),
        format_version=str(meta.get("semver", "3.0.0")),
    )
    check_invariants(project)
    return project


def parse_project(data: bytes | str) -> ProjectIR:
    """Parse raw JSON (or an sb3 zip) into a validated :class:`ProjectIR`."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    doc, archive = _read_bytes(data)
    return project_from_dict(doc, archive)


def target_to_json(t: Target, broadcasts: dict[str, str]) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": t.id,
        "name": t.name,
        "isStage": t.is_stage,
        "variables": {k: [n, v] for k, (n, v) in t.variables.items()},
        "lists": {k: [n, list(v)] for k, (n, v) in t.lists.items()},
        "broadcasts": dict(broadcasts) if t.is_stage else {},
        "blocks": {bid: block_to_json(b) for bid, b in t.blocks.items()},
        "costumes": [_costume_json(c) for c in t.costumes],
        "sounds": [_sound_json(s) for s in t.sounds],
        "currentCostume": t.current_costume,
        "layerOrder": t.layer,
    }
    if not t.is_stage:
        out.update(x=t.x, y=t.y, direction=t.direction, size=t.size, visible=t.visible)
    return out


def project_to_dict(p: ProjectIR) -> dict[str, Any]:
    return {
        "meta": {"semver": p.format_version},
        "monitors": list(p.monitors),
        "targets": [target_to_json(t, p.broadcasts) for t in p.targets],
    }


def serialize_project(p: ProjectIR) -> bytes:
    """Canonical bytes for ``p``; equal projects always serialize identically."""
    return canonical.dumps(project_to_dict(p))


def project_digest(p: ProjectIR) -> str:
    return canonical.digest(serialize_project(p))
