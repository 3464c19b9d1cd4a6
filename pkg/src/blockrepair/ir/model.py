"""Immutable block-graph representation of a project."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple, Union

from .catalog import HATS

Scalar = Union[int, float, str, bool]


@dataclass(frozen=True)
class Literal:
    value: Scalar


@dataclass(frozen=True)
class BlockRef:
    block_id: str


@dataclass(frozen=True)
class VarRef:
    """A variable read placed directly in an input slot (sb3 primitive 12)."""

    name: str
    var_id: str


@dataclass(frozen=True)
class ListRef:
    """A list read placed directly in an input slot (sb3 primitive 13)."""

    name: str
    list_id: str


InputValue = Union[Literal, BlockRef, VarRef, ListRef]


class Field(NamedTuple):
    value: Any
    ref: str | None = None


@dataclass(frozen=True)
class Block:
    id: str
    opcode: str
    parent: str | None = None
    next: str | None = None
    inputs: dict[str, InputValue] = field(default_factory=dict)
    fields: dict[str, Field] = field(default_factory=dict)
    top_level: bool = False
    mutation: dict[str, Any] | None = None

    @property
    def is_hat(self) -> bool:
        return self.opcode in HATS

    def child_refs(self) -> Iterator[tuple[str, str]]:
        """Yield ``(input_name, block_id)`` for every nested block."""
        for name, value in self.inputs.items():
            if isinstance(value, BlockRef):
                yield name, value.block_id


@dataclass(frozen=True)
class AssetMeta:
    asset_id: str
    name: str
    kind: str  # "image" | "sound"
    width: float = 0
    height: float = 0
    duration: float = 0
    payload_digest: str = ""


@dataclass(frozen=True)
class Target:
    id: str
    name: str
    is_stage: bool
    variables: dict[str, tuple[str, Any]] = field(default_factory=dict)
    lists: dict[str, tuple[str, tuple]] = field(default_factory=dict)
    blocks: dict[str, Block] = field(default_factory=dict)
    costumes: tuple[AssetMeta, ...] = ()
    sounds: tuple[AssetMeta, ...] = ()
    x: float = 0
    y: float = 0
    direction: float = 90
    size: float = 100
    visible: bool = True
    current_costume: int = 0
    layer: int = 0

    def top_blocks(self) -> list[Block]:
        return [b for b in self.blocks.values() if b.top_level]

    def hats(self) -> list[Block]:
        return [b for b in self.blocks.values() if b.top_level and b.is_hat]


@dataclass(frozen=True)
class ProjectIR:
    targets: tuple[Target, ...]
    broadcasts: dict[str, str] = field(default_factory=dict)
    monitors: tuple = ()
    format_version: str = "3.0.0"

    @property
    def stage(self) -> Target:
        return self.targets[0]

    @property
    def sprites(self) -> tuple[Target, ...]:
        return self.targets[1:]

    def target(self, target_id: str) -> Target:
        for t in self.targets:
            if t.id == target_id:
                return t
        raise KeyError(target_id)

    def target_by_name(self, name: str) -> Target | None:
        for t in self.targets:
            if t.name == name:
                return t
        return None

    def iter_blocks(self) -> Iterator[tuple[Target, Block]]:
        for t in self.targets:
            for b in t.blocks.values():
                yield t, b

    def find_block(self, block_id: str) -> tuple[Target, Block]:
        for t in self.targets:
            b = t.blocks.get(block_id)
            if b is not None:
                return t, b
        raise KeyError(block_id)

    def message_names(self) -> set[str]:
        """Every broadcast message name declared or mentioned by a block."""
        names = set(self.broadcasts.values())
        for _, b in self.iter_blocks():
            f = b.fields.get("BROADCAST_OPTION")
            if f is not None:
                names.add(str(f.value))
        return names
