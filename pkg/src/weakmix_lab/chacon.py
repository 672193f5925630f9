"""Exact cutting-and-stacking construction of the Chacon map.

The stage-k tower has ``h_k = (3^(k+1) - 1) / 2`` levels of width
``2 * 3^-(k+1)``.  Stage k is built from three columns of stage k-1 with the
spacer ``[1 - 3^-k, 1 - 3^-(k+1))`` between the middle and right columns, so
level i of stage k is

* the left third of level i of stage k-1 when ``i < h``,
* the middle third of level ``i - h`` when ``h <= i < 2h``,
* the spacer when ``i == 2h``,
* the right third of level ``i - 2h - 1`` otherwise (``h = h_{k-1}``).

All level endpoints are multiples of ``3^-(k+1)``; tables store their integer
numerators over that common denominator.  The partition is
``I_0 = [0, 2/3)`` and ``I_1 = [2/3, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .errors import ComputeError, EmptyCell, StageCapExceeded, UndefinedPoint
from .intervals import IntervalSet, RationalInterval

MAX_STAGE = 20
# largest stage whose level table is materialized (3^15 levels, ~57 MB)
TABLE_STAGE_CAP = 14

TWO_THIRDS = Fraction(2, 3)


def height(k: int) -> int:
    return (3 ** (k + 1) - 1) // 2


def width(k: int) -> Fraction:
    return Fraction(2, 3 ** (k + 1))


def spacer(k: int) -> RationalInterval:
    """The piece of I_1 inserted at stage k >= 1."""
    return RationalInterval(1 - Fraction(1, 3**k), 1 - Fraction(1, 3 ** (k + 1)))


def base_interval(k: int) -> RationalInterval:
    """``A_k = [0, 2 * 3^-(k+1))``, the bottom level of the stage-k tower."""
    return RationalInterval(Fraction(0), width(k))


@lru_cache(maxsize=None)
def level_table(k: int) -> np.ndarray:
    """Numerators (over ``3^(k+1)``) of the left endpoints of stage-k levels."""
    if k < 0:
        raise ValueError("stage must be >= 0")
    if k > TABLE_STAGE_CAP:
        raise StageCapExceeded(f"level table for stage {k} is above the table cap")
    if k == 0:
        return np.zeros(1, dtype=np.int64)
    prev = 3 * level_table(k - 1)
    top = np.array([3 ** (k + 1) - 3], dtype=np.int64)
    out = np.concatenate([prev, prev + 2, top, prev + 4])
    out.setflags(write=False)
    return out


def level_lo_num(k: int, idx):
    """Left-endpoint numerators of level(s) ``idx`` at stage k, for any k.

    Stages above the table cap are resolved by the column recursion down to
    the largest materialized table.
    """
    scalar = np.isscalar(idx)
    idx = np.asarray(idx, dtype=np.int64)
    if k <= min(TABLE_STAGE_CAP, 12):
        out = level_table(k)[idx]
    else:
        h = height(k - 1)
        q = np.where(idx < h, 0, np.where(idx < 2 * h, 1, np.where(idx == 2 * h, 3, 2)))
        sub = np.where(q == 0, idx, np.where(q == 1, idx - h, np.where(q == 2, idx - 2 * h - 1, 0)))
        rec = 3 * level_lo_num(k - 1, sub) + np.where(q == 1, 2, np.where(q == 2, 4, 0))
        out = np.where(q == 3, 3 ** (k + 1) - 3, rec)
    return int(out) if scalar else out


def level_lo(k: int, i: int) -> Fraction:
    return Fraction(level_lo_num(k, i), 3 ** (k + 1))


def level_interval(k: int, i: int) -> RationalInterval:
    lo = level_lo(k, i)
    return RationalInterval(lo, lo + width(k))


@lru_cache(maxsize=None)
def tower_word(k: int) -> str:
    """Codes (0 for I_0, 1 for I_1) of the stage-k levels, bottom to top."""
    t = level_table(k)
    return "".join(np.where(t < 2 * 3**k, "0", "1"))


@dataclass(frozen=True)
class PiecewiseTranslation:
    """Stage-k partial map: level i is translated onto level i+1 (i < h_k - 1)."""

    stage: int

    @property
    def offsets(self) -> np.ndarray:
        """Offset numerators over ``3^(k+1)`` for each mapped level."""
        t = level_table(self.stage)
        return t[1:] - t[:-1]

    @property
    def pieces(self) -> Iterator[tuple[RationalInterval, Fraction]]:
        t = level_table(self.stage)
        d = 3 ** (self.stage + 1)
        w = 2
        for i in range(len(t) - 1):
            lo, nxt = int(t[i]), int(t[i + 1])
            yield RationalInterval(Fraction(lo, d), Fraction(lo + w, d)), Fraction(nxt - lo, d)

    def __call__(self, x) -> Fraction:
        s, j, delta = locate(x, self.stage)
        if s != self.stage or j >= height(self.stage) - 1:
            raise UndefinedPoint(f"{x} is outside the stage-{self.stage} domain")
        return level_lo(s, j + 1) + delta


@dataclass(frozen=True)
class TowerStage:
    k: int

    @property
    def height(self) -> int:
        return height(self.k)

    @property
    def width(self) -> Fraction:
        return width(self.k)

    @property
    def lo_numerators(self) -> np.ndarray:
        return level_table(self.k)

    @cached_property
    def levels(self) -> list[RationalInterval]:
        d = 3 ** (self.k + 1)
        return [RationalInterval(Fraction(int(a), d), Fraction(int(a) + 2, d))
                for a in self.lo_numerators]

    @property
    def total_measure(self) -> Fraction:
        return self.height * self.width

    @property
    def word(self) -> str:
        return tower_word(self.k)


def build_stage(k: int, max_stage: int = MAX_STAGE) -> tuple[TowerStage, PiecewiseTranslation]:
    if k < 0:
        raise ValueError("stage must be >= 0")
    if k > max_stage or k > TABLE_STAGE_CAP:
        raise StageCapExceeded(f"stage {k} above cap")
    return TowerStage(k), PiecewiseTranslation(k)


def _entry(x: Fraction, max_stage: int) -> tuple[int, int, Fraction]:
    """First stage whose tower contains x, with level index and offset."""
    if not 0 <= x < 1:
        raise UndefinedPoint(f"{x} is outside [0, 1)")
    if x < TWO_THIRDS:
        return 0, 0, x
    t = 1
    while x >= 1 - Fraction(1, 3 ** (t + 1)):
        t += 1
        if t > max_stage:
            raise UndefinedPoint(f"{x} enters the tower above stage {max_stage}")
    return t, 2 * height(t - 1), x - (1 - Fraction(1, 3**t))


def _escalate(s: int, j: int, delta: Fraction) -> tuple[int, int, Fraction]:
    w = width(s + 1)
    q = int(delta // w)
    return s + 1, j + q * height(s) + (1 if q == 2 else 0), delta - q * w


def locate(x, stage: int | None = None, max_stage: int = MAX_STAGE) -> tuple[int, int, Fraction]:
    """(stage, level index, offset inside level) of x.

    With ``stage=None`` the first stage containing x is used; otherwise the
    location is pushed up to ``stage`` (if x has entered the tower by then).
    """
    x = Fraction(x)
    s, j, delta = _entry(x, max_stage if stage is None else max(stage, max_stage))
    if stage is not None:
        if s > stage:
            raise UndefinedPoint(f"{x} is not in the stage-{stage} tower")
        while s < stage:
            s, j, delta = _escalate(s, j, delta)
    return s, j, delta


def apply_map(x, direction: str = "forward", max_stage: int = MAX_STAGE) -> Fraction:
    """C(x) (or C^-1(x)) from the smallest stage at which it is defined."""
    s, j, delta = locate(x, max_stage=max_stage)
    if direction == "forward":
        while j == height(s) - 1:
            if s >= max_stage:
                raise UndefinedPoint(f"C({x}) undefined up to stage {max_stage}")
            s, j, delta = _escalate(s, j, delta)
        return level_lo(s, j + 1) + delta
    if direction == "inverse":
        while j == 0:
            if s >= max_stage:
                raise UndefinedPoint(f"C^-1({x}) undefined up to stage {max_stage}")
            s, j, delta = _escalate(s, j, delta)
        return level_lo(s, j - 1) + delta
    raise ValueError(f"unknown direction {direction!r}")


def orbit(x, n: int, max_stage: int = MAX_STAGE) -> list[Fraction]:
    """``[x, C(x), ..., C^n(x)]`` computed exactly through the level structure."""
    s, j, delta = locate(x, max_stage=max_stage)
    out = [Fraction(x)]
    remaining = n
    while remaining > 0:
        if j == height(s) - 1:
            if s >= max_stage:
                raise UndefinedPoint(f"orbit of {x} undefined after {n - remaining} steps")
            s, j, delta = _escalate(s, j, delta)
            continue
        steps = min(remaining, height(s) - 1 - j)
        idx = np.arange(j + 1, j + steps + 1, dtype=np.int64)
        d = 3 ** (s + 1)
        out.extend(Fraction(int(a), d) + delta for a in level_lo_num(s, idx))
        j += steps
        remaining -= steps
    return out


def code_orbit(x, n: int, max_stage: int = MAX_STAGE) -> str:
    """Itinerary ``w_i = 0 if C^i(x) in [0, 2/3) else 1`` for i < n."""
    if n <= 0:
        return ""
    return "".join("0" if y < TWO_THIRDS else "1" for y in orbit(x, n - 1, max_stage))


def map_interval_set(s: IntervalSet, n: int, max_stage: int = MAX_STAGE,
                     strict: bool = False) -> IntervalSet:
    """Exact image ``C^n(s)`` (preimage for n < 0).

    Mass whose n-step orbit is not defined at any stage up to ``max_stage``
    (it sits near the tower top, or bottom for n < 0) is reported in
    ``unresolved``; image measure plus unresolved equals the input measure.
    With ``strict=True`` any unresolved mass raises ``StageCapExceeded``.
    """
    if n == 0:
        return IntervalSet(s.intervals, s.unresolved)
    start = 1
    while height(start) <= abs(n) + 1:
        start += 1
    if start > max_stage:
        raise StageCapExceeded(f"|n|={abs(n)} needs a stage above {max_stage}")
    table = level_table(min(start, TABLE_STAGE_CAP))
    order = np.argsort(table, kind="stable")
    sorted_lo = table[order]
    d = 3 ** (start + 1)
    # stack of (stage, level index or -1 for the unused part of I_1, lo, hi)
    work: list[tuple[int, int, Fraction, Fraction]] = []
    for iv in s.intervals:
        A, B = iv.lo * d, iv.hi * d
        # a level [lo, lo + 2) meets [A, B) iff A - 2 < lo < B
        i0 = int(np.searchsorted(sorted_lo, math.floor(A) - 2, side="right"))
        i1 = int(np.searchsorted(sorted_lo, math.ceil(B), side="left"))
        for pos in range(i0, i1):
            j = int(order[pos])
            lo = Fraction(int(sorted_lo[pos]), d)
            piece = iv.intersect(RationalInterval(lo, lo + width(start)))
            if piece is not None:
                work.append((start, j, piece.lo, piece.hi))
        rest = iv.intersect(RationalInterval(1 - Fraction(1, 3 ** (start + 1)), Fraction(1)))
        if rest is not None:
            work.append((start, -1, rest.lo, rest.hi))
    images: list[RationalInterval] = []
    unresolved = Fraction(s.unresolved)
    while work:
        st, j, lo, hi = work.pop()
        if j < 0:
            if st >= max_stage:
                unresolved += hi - lo
                continue
            sp = spacer(st + 1)
            part = RationalInterval(lo, hi).intersect(sp)
            if part is not None:
                work.append((st + 1, 2 * height(st), part.lo, part.hi))
            if hi > sp.hi:
                work.append((st + 1, -1, max(lo, sp.hi), hi))
            continue
        target = j + n
        if 0 <= target <= height(st) - 1:
            off = level_lo(st, target) - level_lo(st, j)
            images.append(RationalInterval(lo + off, hi + off))
            continue
        if st >= max_stage:
            unresolved += hi - lo
            continue
        base = level_lo(st, j)
        w = width(st + 1)
        for q in range(3):
            child = RationalInterval(base + q * w, base + (q + 1) * w).intersect(RationalInterval(lo, hi))
            if child is not None:
                work.append((st + 1, j + q * height(st) + (1 if q == 2 else 0), child.lo, child.hi))
    if strict and unresolved:
        raise StageCapExceeded(f"measure {unresolved} unresolved at stage {max_stage}")
    return IntervalSet(tuple(images), unresolved)


def _decision_stage(N: int, k: int) -> int:
    # every lag <= N realized between two copies of A_k at some stage is
    # already realized inside the tower T_{r+1}, where h_r >= N
    r = 0
    while height(r) < N:
        r += 1
    return max(k, r + 1)


def _base_positions(k: int, stage: int) -> np.ndarray:
    """Heights of the stage-``stage`` levels that make up A_k."""
    t = level_table(stage)
    return np.flatnonzero(t < 2 * 3 ** (stage - k))


def empty_intersection_times(k: int, N: int, method: str = "auto",
                             max_stage: int = MAX_STAGE) -> list[int]:
    """Sorted ``[n in 1..N : mu(A_k ∩ C^-n A_k) = 0]``.

    At the decision stage s the set ``A_k ∩ C^-n A_k`` is the union of the
    levels at heights i with i and i+n both in A_k, an exact computation on
    the integer level table.  ``method="fft"`` counts those pairs for all
    lags at once with a float FFT, certified by an integrality check.
    """
    if k < 0 or N < 1:
        raise ValueError("need k >= 0 and N >= 1")
    stage = _decision_stage(N, k)
    if stage > min(max_stage, TABLE_STAGE_CAP):
        raise StageCapExceeded(f"N={N} needs stage {stage}")
    P = _base_positions(k, stage)
    h = height(stage)
    if method == "auto":
        method = "exact" if N * len(P) <= 5 * 10**7 else "fft"
    if method == "exact":
        member = np.zeros(h, dtype=bool)
        member[P] = True
        out = []
        for n in range(1, N + 1):
            tgt = P[P + n < h] + n
            if not member[tgt].any():
                out.append(n)
        return out
    if method == "fft":
        size = 1 << int(math.ceil(math.log2(2 * h)))
        b = np.zeros(size)
        b[P] = 1.0
        F = np.fft.rfft(b)
        corr = np.fft.irfft(F * np.conj(F), size)[1:N + 1]
        if np.max(np.abs(corr - np.rint(corr))) > 0.25:
            raise ComputeError("FFT lag counts are not certifiably integral")
        return [n + 1 for n in np.flatnonzero(np.rint(corr) == 0)]
    raise ValueError(f"unknown method {method!r}")


def coding_cell(w: str, stage: int | None = None, max_stage: int = MAX_STAGE) -> IntervalSet:
    """The set of points whose first ``len(w)`` itinerary symbols spell w.

    Resolved exactly at one stage: the cell is the union of the levels at
    heights j where the tower word reads w from j.  Points in the top
    ``len(w) - 1`` levels or outside the tower are not decided there; their
    measure is an upper bound for what the cell may additionally contain and
    is stored in ``unresolved``.
    """
    from .substitution import chacon_alpha, enumerate_factors

    if not w or set(w) - {"0", "1"}:
        raise ValueError("w must be a nonempty word over {0, 1}")
    if w not in enumerate_factors(chacon_alpha(), len(w)):
        raise EmptyCell(f"{w!r} is not a factor of the alpha-subshift")
    if stage is None:
        stage = 6
        while height(stage) < 3 * len(w):
            stage += 1
    if stage > min(max_stage, TABLE_STAGE_CAP):
        raise StageCapExceeded(f"stage {stage} above cap")
    word = tower_word(stage)
    t = level_table(stage)
    d = 3 ** (stage + 1)
    pieces = []
    start = word.find(w)
    while start != -1:
        a = int(t[start])
        pieces.append(RationalInterval(Fraction(a, d), Fraction(a + 2, d)))
        start = word.find(w, start + 1)
    undecided = (len(w) - 1) * width(stage) + Fraction(1, 3 ** (stage + 1))
    return IntervalSet(tuple(pieces), undecided)
