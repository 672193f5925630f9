"""Decomposition of factors into nested substitution images.

A factor x of the fixed point is written as

    u_0 β(u_1) ... β^m(u_m) β^m(v_m) ... β(v_1) v_0

with every u_i a proper suffix and every v_i a proper prefix of some β(b).
The factor is located at its leftmost occurrence inside the smallest
``β^M(a)`` containing it; we then descend through the block tree while x
stays inside one block, and split at the first level where it straddles a
block boundary.  The left piece is peeled by suffixes and the right piece
by prefixes, level by level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotAFactor, NotDecomposable, WordTooShort
from .substitution import SubstitutionSystem, apply_power, chacon_beta, enumerate_factors
from .twisted import CylFunction, Segment, pi_recursive

MAX_SEARCH_LEVEL = 40


@dataclass(frozen=True)
class Part:
    word: str
    letter: str | None  # b with word a proper prefix/suffix of β(b); None when empty


@dataclass(frozen=True)
class Decomposition:
    """``u_parts[i]`` is u_i (i = 0..m); ``v_parts[i]`` is v_i (i = 0..m)."""

    m: int
    u_parts: tuple[Part, ...]
    v_parts: tuple[Part, ...]

    def pieces(self, subst: SubstitutionSystem) -> list[tuple[int, str]]:
        """(level, word) pairs in reading order; each stands for ``β^level(word)``."""
        left = [(i, p.word) for i, p in enumerate(self.u_parts)]
        right = [(i, p.word) for i, p in reversed(list(enumerate(self.v_parts)))]
        return [(i, w) for i, w in left + right if w]

    def __str__(self) -> str:
        pieces = [f"β^{i}[{p.word}]" for i, p in enumerate(self.u_parts)]
        pieces += [f"β^{i}[{p.word}]" for i, p in reversed(list(enumerate(self.v_parts)))]
        return " ".join(pieces)


def reconstruct(subst: SubstitutionSystem, d: Decomposition) -> str:
    return "".join(apply_power(subst, w, i) for i, w in d.pieces(subst))


def _suffix_letter(subst: SubstitutionSystem, w: str) -> str | None:
    for b, img in zip(subst.alphabet, subst.images):
        if len(w) < len(img) and img.endswith(w):
            return b
    return None


def _prefix_letter(subst: SubstitutionSystem, w: str) -> str | None:
    for b, img in zip(subst.alphabet, subst.images):
        if len(w) < len(img) and img.startswith(w):
            return b
    return None


def _part(subst: SubstitutionSystem, w: str, kind: str) -> Part:
    if not w:
        return Part("", None)
    b = _suffix_letter(subst, w) if kind == "suffix" else _prefix_letter(subst, w)
    if b is None:
        raise NotDecomposable(f"{w!r} is not a proper {kind} of any image")
    return Part(w, b)


def _children(subst: SubstitutionSystem, c: str, level: int, start: int):
    """Blocks ``β^{level-1}(d)`` making up ``β^level(c)`` placed at ``start``."""
    lens = subst.lengths(level - 1)
    pos = start
    for d in subst.image(c):
        L = lens[subst.index(d)]
        yield d, pos, pos + L
        pos += L


def _peel_suffix(subst, c: str, level: int, start: int, cut: int, out: dict[int, str]) -> None:
    """Decompose ``β^level(c)[cut - start:]`` (a proper suffix) into u_0..u_{level-1}."""
    kids = list(_children(subst, c, level, start))
    for i, (d, lo, hi) in enumerate(kids):
        if lo <= cut < hi:
            if cut == lo:
                out[level - 1] = "".join(k[0] for k in kids[i:])
            else:
                out[level - 1] = "".join(k[0] for k in kids[i + 1:])
                _peel_suffix(subst, d, level - 1, lo, cut, out)
            return


def _peel_prefix(subst, c: str, level: int, start: int, cut: int, out: dict[int, str]) -> None:
    """Decompose ``β^level(c)[:cut - start]`` (a proper prefix) into v_0..v_{level-1}."""
    kids = list(_children(subst, c, level, start))
    for i, (d, lo, hi) in enumerate(kids):
        if lo < cut <= hi:
            if cut == hi:
                out[level - 1] = "".join(k[0] for k in kids[:i + 1])
            else:
                out[level - 1] = "".join(k[0] for k in kids[:i])
                _peel_prefix(subst, d, level - 1, lo, cut, out)
            return


def _split_infix(subst: SubstitutionSystem, w: str) -> tuple[Part, Part]:
    for i in range(len(w) + 1):
        try:
            return _part(subst, w[:i], "suffix"), _part(subst, w[i:], "prefix")
        except NotDecomposable:
            continue
    raise NotDecomposable(f"{w!r} does not split into proper suffix and prefix")


def _locate(subst: SubstitutionSystem, x: str, seed: str) -> tuple[int, int]:
    """Smallest M and leftmost position of x in ``β^M(seed)``."""
    word = seed
    for M in range(MAX_SEARCH_LEVEL):
        if len(word) >= len(x):
            p = word.find(x)
            if p != -1:
                return M, p
        word = subst.apply(word)
    raise NotAFactor(x)


def decompose(subst: SubstitutionSystem, x: str, seed: str | None = None) -> Decomposition:
    """Prefix-suffix decomposition of the factor x (see module docstring)."""
    if not x:
        raise WordTooShort("empty word")
    seed = subst.alphabet[0] if seed is None else seed
    if x not in enumerate_factors(subst, len(x), seed):
        raise NotAFactor(x)
    M, p = _locate(subst, x, seed)
    a, b = p, p + len(x)
    c, level, start = seed, M, 0
    u: dict[int, str] = {}
    v: dict[int, str] = {}
    while True:
        end = start + subst.lengths(level)[subst.index(c)]
        if (start, end) == (a, b):
            # x is exactly the block β^level(c)
            K, mid = level, c
            break
        inside = [(d, lo, hi) for d, lo, hi in _children(subst, c, level, start) if lo <= a and b <= hi]
        if inside:
            c, lo, _ = inside[0]
            level -= 1
            start = lo
            continue
        K = level - 1
        kids = list(_children(subst, c, level, start))
        i = next(t for t, (_, lo, hi) in enumerate(kids) if lo <= a < hi)
        j = next(t for t, (_, lo, hi) in enumerate(kids) if lo < b <= hi)
        left_full = kids[i][1] == a
        right_full = kids[j][2] == b
        mid = "".join(k[0] for k in kids[i + (0 if left_full else 1): j + (1 if right_full else 0)])
        if not left_full:
            d, lo, _ = kids[i]
            if K == 0:
                raise NotDecomposable("letter blocks cannot be cut")
            _peel_suffix(subst, d, K, lo, a, u)
        if not right_full:
            d, lo, _ = kids[j]
            _peel_prefix(subst, d, K, lo, b, v)
        break
    if mid:
        try:
            uK, vK = Part("", None), _part(subst, mid, "prefix")
        except NotDecomposable:
            uK, vK = _split_infix(subst, mid)
    else:
        uK = vK = Part("", None)
    u_parts = [_part(subst, u.get(i, ""), "suffix") for i in range(K)] + [uK]
    v_parts = [_part(subst, v.get(i, ""), "prefix") for i in range(K)] + [vK]
    m = K
    while m > 0 and not u_parts[m].word and not v_parts[m].word:
        m -= 1
    return Decomposition(m, tuple(u_parts[:m + 1]), tuple(v_parts[:m + 1]))


def depth_sandwich(subst: SubstitutionSystem, N: int, m: int) -> tuple[int, int, int]:
    """``(min_b |β^m(b)|, N, 2 max_b |β^{m+1}(b)|)``."""
    return min(subst.lengths(m)), N, 2 * max(subst.lengths(m + 1))


def depth_bounds_check(N: int, m: int, subst: SubstitutionSystem | None = None) -> bool:
    """``min_b |β^m(b)| <= N <= 2 max_b |β^{m+1}(b)|`` in exact integers."""
    lo, N, hi = depth_sandwich(chacon_beta() if subst is None else subst, N, m)
    return lo <= N <= hi


# images up to this length are expanded when assembling segments
_EXPAND_LIMIT = 4096


def image_segment(subst: SubstitutionSystem, w: str, level: int, table, omega: float) -> Segment:
    """``Segment`` of ``β^level(w)`` built letter by letter through the cocycle."""
    from .substitution import image_prefix, image_suffix

    seg = None
    k = table.n - 1
    for ch in w:
        L = subst.lengths(level)[subst.index(ch)]
        if L <= _EXPAND_LIMIT:
            piece = Segment.of_word(apply_power(subst, ch, level), table, omega)
        else:
            row = pi_recursive(subst, level, table.n, omega).columns[subst.index(ch)]
            piece = Segment(row, L, image_prefix(subst, ch, level, k),
                            image_suffix(subst, ch, level, k))
        seg = piece if seg is None else seg.join(piece, table, omega)
    return seg


def phi_via_decomposition(subst: SubstitutionSystem, x: str, omega: float, f: CylFunction,
                          c_prime: float = 1.0, constant: float = 1.0) -> dict:
    """Twisted sum of f along x assembled over the decomposition parts.

    Returns the value, the bound
    ``constant n ||f||_L (N^{1 - c' ||ω||^2} + 6 log_θ(N)^2 + 2 log_θ(N) + 1)``
    and ``ratio`` = |value| / (bound / constant), the constant this x needs.
    """
    if len(x) < f.n:
        raise WordTooShort(f"|x|={len(x)} < n={f.n}")
    table = f.table
    d = decompose(subst, x)
    seg = None
    for level, w in d.pieces(subst):
        piece = image_segment(subst, w, level, table, omega)
        seg = piece if seg is None else seg.join(piece, table, omega)
    value = complex(f.coeffs @ seg.phi)
    N = len(x)
    theta = float(max(np.abs(np.linalg.eigvals(subst.matrix.astype(float)))))
    lg = math.log(N, theta) if N > 1 else 0.0
    dist = abs(omega - round(omega))
    shape = f.n * f.weak_lipschitz_norm * (N ** (1 - c_prime * dist ** 2) + 6 * lg ** 2 + 2 * lg + 1)
    ratio = abs(value) / shape if shape > 0 else 0.0
    return {"value": value, "bound": constant * shape, "ratio": ratio, "depth": d.m}


__all__ = [
    "Decomposition",
    "Part",
    "decompose",
    "depth_bounds_check",
    "depth_sandwich",
    "image_segment",
    "phi_via_decomposition",
    "reconstruct",
]
