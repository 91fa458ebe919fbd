"""Rational subintervals of [0, 1] with open/closed endpoint flags.

The game semantics assigns every state a membership set
{q : the state satisfies the game at threshold q}; these sets are always
intervals anchored at 0 (down-sets) or at 1 (up-sets), so the infinite
threshold quantifiers reduce to endpoint arithmetic.  Attainment of
infima is tracked by the flags; it decides whether boundary thresholds
belong to combined intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .space import InputError

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class QInterval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool

    def __post_init__(self):
        if not (ZERO <= self.lo and self.hi <= ONE):
            if not self.is_empty():
                raise InputError(f"interval {self} escapes [0, 1]")

    @staticmethod
    def empty() -> "QInterval":
        return QInterval(ONE, ZERO, False, False)

    @staticmethod
    def full() -> "QInterval":
        return QInterval(ZERO, ONE, True, True)

    @staticmethod
    def down(hi, closed: bool) -> "QInterval":
        """[0, hi] or [0, hi); degenerate cases collapse canonically."""
        hi = Fraction(hi)
        if hi < ZERO or (hi == ZERO and not closed):
            return QInterval.empty()
        return QInterval(ZERO, min(hi, ONE), True, closed if hi <= ONE else True)

    @staticmethod
    def up(lo, closed: bool) -> "QInterval":
        """[lo, 1] or (lo, 1]."""
        lo = Fraction(lo)
        if lo > ONE or (lo == ONE and not closed):
            return QInterval.empty()
        return QInterval(max(lo, ZERO), ONE, closed if lo >= ZERO else True, True)

    def is_empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    def is_full(self) -> bool:
        return self.lo == ZERO and self.hi == ONE and self.lo_closed and self.hi_closed

    def contains(self, q) -> bool:
        q = Fraction(q)
        if self.is_empty():
            return False
        above = q > self.lo or (q == self.lo and self.lo_closed)
        below = q < self.hi or (q == self.hi and self.hi_closed)
        return above and below

    def length(self) -> Fraction:
        return ZERO if self.is_empty() else self.hi - self.lo

    def is_down_set(self) -> bool:
        return self.is_empty() or (self.lo == ZERO and self.lo_closed)

    def is_up_set(self) -> bool:
        return self.is_empty() or (self.hi == ONE and self.hi_closed)

    def complement(self) -> "QInterval":
        """Complement within [0, 1]; defined for anchored intervals only."""
        if self.is_empty():
            return QInterval.full()
        if self.is_full():
            return QInterval.empty()
        if self.is_down_set():
            return QInterval.up(self.hi, not self.hi_closed)
        if self.is_up_set():
            return QInterval.down(self.lo, not self.lo_closed)
        raise InputError(f"complement of an unanchored interval {self}")

    def complement_min(self) -> tuple[Fraction | None, bool]:
        """(inf of [0,1] minus the interval, attained?); None when empty."""
        comp = self.complement()
        if comp.is_empty():
            return None, False
        return comp.lo, comp.lo_closed

    def __str__(self) -> str:
        if self.is_empty():
            return "(empty)"
        lo = "[" if self.lo_closed else "("
        hi = "]" if self.hi_closed else ")"
        return f"{lo}{self.lo}, {self.hi}{hi}"


def choice_combine(left: QInterval, right: QInterval) -> QInterval:
    """Membership interval of an angelic choice from its operands.

    A threshold q fails iff some rational split a1 + a2 <= q has a1
    outside the left interval and a2 outside the right one; the least
    failing sum is the sum of the complements' infima, attained exactly
    when both are.  The result is therefore always a down-set.
    """
    c1, a1 = left.complement_min()
    c2, a2 = right.complement_min()
    if c1 is None or c2 is None:
        return QInterval.full()
    m = c1 + c2
    attained = a1 and a2
    if m > ONE:
        return QInterval.full()
    return QInterval.down(m, not attained)


def series_combine(terms: Iterable[tuple[Fraction, bool]]) -> QInterval:
    """Membership interval of an iterated choice from per-round complement
    infima; the failing-sequence analysis of choice, summed over rounds."""
    total = ZERO
    attained = True
    for c, a in terms:
        total += c
        attained = attained and a
        if total > ONE:
            return QInterval.full()
    return QInterval.down(total, not attained)
