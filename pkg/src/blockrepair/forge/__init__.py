"""Fault injection: the pattern catalog and the inject-and-validate loop."""

from .bugspec import BugSpec, make_bugspec, make_refsem
from .bundle import BUNDLE_FILES, load_bundle, write_bundle
from .engine import BugInstance, ForgeConfig, Trial, apply_operator, forge, forge_scenarios, substream
from .patterns import (
    CATALOG,
    PATTERNS,
    BugPattern,
    Site,
    get_pattern,
    pattern_order,
    rank_sites,
    select_pattern,
    select_site,
)
from ..oracle import pass_rate
from ..patch.apply import inverse_patch

__all__ = [
    "BUNDLE_FILES",
    "CATALOG",
    "PATTERNS",
    "BugInstance",
    "BugPattern",
    "BugSpec",
    "ForgeConfig",
    "Site",
    "Trial",
    "apply_operator",
    "forge",
    "forge_scenarios",
    "get_pattern",
    "inverse_patch",
    "load_bundle",
    "make_bugspec",
    "make_refsem",
    "pass_rate",
    "pattern_order",
    "rank_sites",
    "select_pattern",
    "select_site",
    "substream",
    "write_bundle",
]
