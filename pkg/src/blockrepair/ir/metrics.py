"""Project size measures used to gate which projects enter the pipeline."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .catalog import BROADCAST_USES
from .model import ProjectIR

MIN_SPRITES = 5
MIN_SCRIPTS = 15
MIN_BROADCAST_USES = 3
MIN_CUSTOM_BLOCKS = 1


@dataclass(frozen=True)
class ComplexityReport:
    sprites: int
    scripts: int
    broadcast_uses: int
    custom_blocks: int

    @property
    def passes(self) -> bool:
        return (
            self.sprites >= MIN_SPRITES
            and self.scripts >= MIN_SCRIPTS
            and self.broadcast_uses >= MIN_BROADCAST_USES
            and self.custom_blocks >= MIN_CUSTOM_BLOCKS
        )

    def to_dict(self) -> dict:
        return {**asdict(self), "passes": self.passes}


def complexity_metrics(p: ProjectIR) -> ComplexityReport:
    # Scripts are hat-rooted stacks; custom-block definitions count as
    # scripts because they are hats too. Orphaned stacks are excluded.
    scripts = broadcast_uses = custom_blocks = 0
    for _, b in p.iter_blocks():
        if b.top_level and b.is_hat:
            scripts += 1
        if b.opcode in BROADCAST_USES:
            broadcast_uses += 1
        if b.opcode == "procedures_definition":
            custom_blocks += 1
    return ComplexityReport(
        sprites=len(p.sprites),
        scripts=scripts,
        broadcast_uses=broadcast_uses,
        custom_blocks=custom_blocks,
    )
