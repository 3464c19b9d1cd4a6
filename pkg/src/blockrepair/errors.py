"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class BlockRepairError(Exception):
    """Base class for every error raised by this package."""


# --- project format -------------------------------------------------------


class ProjectError(BlockRepairError):
    pass


class MalformedJson(ProjectError):
    def __init__(self, detail: str):
        super().__init__(f"malformed project: {detail}")
        self.detail = detail


class UnknownOpcode(ProjectError):
    def __init__(self, opcode: str, block_id: str):
        super().__init__(f"unsupported opcode {opcode!r} in block {block_id!r}")
        self.opcode = opcode
        self.block_id = block_id


class DanglingReference(ProjectError):
    def __init__(self, kind: str, ref_id: str):
        super().__init__(f"dangling {kind} reference {ref_id!r}")
        self.kind = kind
        self.ref_id = ref_id


class LinkInconsistency(ProjectError):
    def __init__(self, block_id: str, detail: str = ""):
        msg = f"inconsistent parent/next linkage at block {block_id!r}"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.block_id = block_id
        self.detail = detail


class DuplicateIdentifier(ProjectError):
    def __init__(self, ident: str):
        super().__init__(f"identifier {ident!r} is declared more than once")
        self.ident = ident


# --- execution --------------------------------------------------------------


class TargetNotFound(BlockRepairError):
    def __init__(self, kind: str, name: str):
        super().__init__(f"scenario references missing {kind} {name!r}")
        self.kind = kind
        self.name = name


class UnknownSignal(BlockRepairError):
    def __init__(self, signal: str):
        super().__init__(f"unknown signal {signal!r}")
        self.signal = signal


# --- patches ------------------------------------------------------------------


class PatchError(BlockRepairError):
    pass


class SchemaInvalid(PatchError):
    def __init__(self, detail: str):
        super().__init__(f"patch does not match the schema: {detail}")
        self.detail = detail


class DuplicateTarget(PatchError):
    def __init__(self, block_id: str, path: str):
        super().__init__(f"more than one edit targets ({block_id!r}, {path!r})")
        self.block_id = block_id
        self.path = path


class NotApplicable(PatchError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"edit #{index} is not applicable: {reason}")
        self.index = index
        self.reason = reason


class ResultInvalid(PatchError):
    def __init__(self, detail: str):
        super().__init__(f"patched project is invalid: {detail}")
        self.detail = detail


class NonInvertibleEdit(PatchError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"edit #{index} cannot be inverted: {reason}")
        self.index = index
        self.reason = reason


# --- forging / synthesis ----------------------------------------------------


class IneligibleSite(BlockRepairError):
    pass


class NoDiscriminatingAssertion(BlockRepairError):
    pass


class ForgeExhausted(BlockRepairError):
    def __init__(self, trials: list):
        super().__init__(f"no accepted injection after {len(trials)} trial(s)")
        self.trials = trials


class MisalignedTraces(BlockRepairError):
    pass
