"""Exact half-open rational intervals and normalized finite unions of them."""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True, order=True)
class RationalInterval:
    """The half-open interval ``[lo, hi)`` with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _frac(self.lo))
        object.__setattr__(self, "hi", _frac(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x < self.hi

    def shift(self, offset) -> "RationalInterval":
        return RationalInterval(self.lo + offset, self.hi + offset)

    def intersect(self, other: "RationalInterval") -> "RationalInterval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return RationalInterval(lo, hi) if lo < hi else None


def _normalize(intervals: Iterable[RationalInterval]) -> tuple[RationalInterval, ...]:
    out: list[RationalInterval] = []
    for iv in sorted(intervals):
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = RationalInterval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class IntervalSet:
    """A disjoint, sorted, merged union of half-open rational intervals.

    ``unresolved`` records the exact measure of input that a computation could
    not place (for instance mass that needs a tower stage above the cap); it
    is zero for sets built directly.
    """

    intervals: tuple[RationalInterval, ...] = ()
    unresolved: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))
        object.__setattr__(self, "unresolved", _frac(self.unresolved))

    @classmethod
    def of(cls, *pairs: Sequence) -> "IntervalSet":
        return cls(tuple(RationalInterval(_frac(a), _frac(b)) for a, b in pairs))

    @property
    def total_measure(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), Fraction(0))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __contains__(self, x) -> bool:
        i = bisect_right([iv.lo for iv in self.intervals], x) - 1
        return i >= 0 and x < self.intervals[i].hi

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals, self.unresolved + other.unresolved)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            iv = a[i].intersect(b[j])
            if iv is not None:
                out.append(iv)
            if a[i].hi < b[j].hi:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for iv in self.intervals:
            pieces = [iv]
            for cut in other.intervals:
                if cut.hi <= iv.lo or cut.lo >= iv.hi:
                    continue
                nxt = []
                for p in pieces:
                    if cut.lo > p.lo:
                        nxt.append(RationalInterval(p.lo, min(cut.lo, p.hi)))
                    if cut.hi < p.hi:
                        nxt.append(RationalInterval(max(cut.hi, p.lo), p.hi))
                pieces = [p for p in nxt if p.lo < p.hi]
            out.extend(pieces)
        return IntervalSet(tuple(out))

    def component_lengths(self) -> list[Fraction]:
        return [iv.length for iv in self.intervals]

    def to_json(self) -> str:
        """JSON list of ``[num_lo, exp_lo, num_hi, exp_hi]`` with value num/3^exp."""
        return json.dumps([list(_triadic(iv.lo)) + list(_triadic(iv.hi)) for iv in self.intervals])

    @classmethod
    def from_json(cls, text: str) -> "IntervalSet":
        rows = json.loads(text)
        return cls(tuple(RationalInterval(Fraction(a, 3**e), Fraction(b, 3**f)) for a, e, b, f in rows))


def _triadic(x: Fraction) -> tuple[int, int]:
    d = x.denominator
    e = 0
    while d % 3 == 0:
        d //= 3
        e += 1
    if d != 1:
        raise ValueError(f"{x} is not a triadic rational")
    return x.numerator, e
