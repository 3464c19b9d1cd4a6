"""Reading and writing bug-instance bundle directories."""

from __future__ import annotations

from pathlib import Path

from ..errors import MalformedJson
from ..ir.codec import parse_project
from ..ir.refsem import ReferenceSemantics
from ..oracle import TestSuite
from ..patch.model import validate_patch
from .bugspec import BugSpec
from .engine import BugInstance

BUNDLE_FILES = (
    "gold.json",
    "buggy.json",
    "forward.patch.json",
    "inverse.patch.json",
    "bugspec.json",
    "testsuite.json",
    "refsem.json",
)


def write_bundle(inst: BugInstance, directory: str | Path) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in inst.files().items():
        (out / name).write_bytes(data)
    return out


def load_bundle(directory: str | Path) -> BugInstance:
    d = Path(directory)
    missing = [n for n in BUNDLE_FILES if not (d / n).is_file()]
    if missing:
        raise MalformedJson(f"bundle {d} lacks {', '.join(missing)}")
    read = lambda n: (d / n).read_bytes()  # noqa: E731
    try:
        refsem = ReferenceSemantics.loads(read("refsem.json"))
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedJson(f"bad reference semantics: {exc}") from None
    return BugInstance(
        gold=parse_project(read("gold.json")),
        buggy=parse_project(read("buggy.json")),
        forward=validate_patch(read("forward.patch.json")),
        inverse=validate_patch(read("inverse.patch.json")),
        spec=BugSpec.loads(read("bugspec.json")),
        testsuite=TestSuite.loads(read("testsuite.json")),
        refsem=refsem,
    )
