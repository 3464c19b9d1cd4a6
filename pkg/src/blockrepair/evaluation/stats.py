"""Exact paired significance test."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence


def mcnemar_exact(n01: int, n10: int) -> Fraction:
    """Two-sided exact McNemar p-value as an exact fraction.

    The discordant counts are treated as ``n01`` successes out of
    ``n01 + n10`` fair coin flips.
    """
    if n01 < 0 or n10 < 0:
        raise ValueError("counts must be non-negative")
    n = n01 + n10
    if n == 0:
        return Fraction(1)
    total = 2**n
    below = sum(comb(n, i) for i in range(n01 + 1))
    above = sum(comb(n, i) for i in range(n01, n + 1))
    return min(Fraction(1), 2 * Fraction(min(below, above), total))


@dataclass(frozen=True)
class PairedOutcomes:
    """Before/after pass-fail contingency counts (first digit: before, second: after)."""

    n00: int = 0
    n01: int = 0
    n10: int = 0
    n11: int = 0

    @classmethod
    def from_pairs(cls, before: Sequence[bool], after: Sequence[bool]) -> PairedOutcomes:
        if len(before) != len(after):
            raise ValueError("paired outcome lists differ in length")
        counts = {(a, b): 0 for a in (False, True) for b in (False, True)}
        for a, b in zip(before, after):
            counts[(bool(a), bool(b))] += 1
        return cls(counts[(False, False)], counts[(False, True)], counts[(True, False)], counts[(True, True)])

    @property
    def n(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    def p_value(self) -> Fraction:
        return mcnemar_exact(self.n01, self.n10)
