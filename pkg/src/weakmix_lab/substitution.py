"""Primitive substitutions: words, images, matrices, factors and frequencies.

Symbols are single characters and words are plain ``str`` objects, which
keeps expansion, slicing and substring search in C.  A substitution is given
by an ordered alphabet and the image of every letter::

    >>> beta = chacon_beta()
    >>> apply_power(beta, "0", 2)
    '0012001212012'
    >>> substitution_matrix(beta).tolist()
    [[2, 0, 1], [1, 1, 1], [1, 1, 1]]
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy

from .errors import (
    AmbiguousContext,
    CapExceeded,
    DimensionMismatch,
    NotAFactor,
    SeedNotExtendable,
    UnknownSymbol,
)

DEFAULT_CAP = 10**8

# Upper bound for D_N / log_theta(N)^2.  The Chacon sweep (N in 3^5..3^10,
# ranks <= 5, 256 starts) measures a max of 0.08; kept generous on purpose.
DISCREPANCY_CONSTANT = 0.5


@dataclass(frozen=True)
class SubstitutionSystem:
    """A substitution on a finite alphabet of single-character symbols."""

    alphabet: tuple[str, ...]
    images: tuple[str, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.alphabet) != len(self.images):
            raise ValueError("one image per letter is required")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet symbols must be distinct")
        for a in self.alphabet:
            if len(a) != 1:
                raise ValueError(f"symbols must be single characters, got {a!r}")
        known = set(self.alphabet)
        for img in self.images:
            if not img:
                raise ValueError("images must be nonempty")
            bad = set(img) - known
            if bad:
                raise UnknownSymbol(f"image uses symbols outside the alphabet: {sorted(bad)}")

    @classmethod
    def from_rules(cls, rules: Mapping[str, str], alphabet: Sequence[str] | None = None,
                   name: str = "") -> "SubstitutionSystem":
        if alphabet is None:
            alphabet = list(rules)
        return cls(tuple(alphabet), tuple(rules[a] for a in alphabet), name)

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "SubstitutionSystem":
        data = json.loads(text)
        return cls.from_rules(data["rules"], data.get("alphabet"), name or data.get("name", ""))

    def to_json(self) -> str:
        return json.dumps({"alphabet": list(self.alphabet), "rules": self.rules})

    @property
    def rules(self) -> dict[str, str]:
        return dict(zip(self.alphabet, self.images))

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownSymbol(symbol) from None

    def image(self, symbol: str) -> str:
        return self.images[self.index(symbol)]

    @cached_property
    def matrix(self) -> np.ndarray:
        return substitution_matrix(self)

    @property
    def L_max(self) -> int:
        return max(len(img) for img in self.images)

    @cached_property
    def _translation(self) -> dict[int, str]:
        return str.maketrans(self.rules)

    def apply(self, w: str) -> str:
        """One round of substitution, without any cap check."""
        return w.translate(self._translation)

    def lengths(self, m: int) -> list[int]:
        """Exact lengths ``[|beta^m(b)| for b in alphabet]``."""
        return list(_lengths(self, m))

    def population(self, w: str) -> list[int]:
        return population_vector(self, w)

    def sort_key(self, w: str) -> tuple[int, ...]:
        return tuple(self.index(c) for c in w)


@lru_cache(maxsize=None)
def _lengths(subst: SubstitutionSystem, m: int) -> tuple[int, ...]:
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return (1,) * subst.size
    prev = _lengths(subst, m - 1)
    return tuple(sum(prev[subst.index(c)] for c in img) for img in subst.images)


def chacon_beta() -> SubstitutionSystem:
    """The primitive substitution 0 -> 0012, 1 -> 12, 2 -> 012."""
    return SubstitutionSystem(("0", "1", "2"), ("0012", "12", "012"), "beta")


def chacon_alpha() -> SubstitutionSystem:
    """The coding substitution 0 -> 0010, 1 -> 1 of the Chacon map."""
    return SubstitutionSystem(("0", "1"), ("0010", "1"), "alpha")


def fibonacci() -> SubstitutionSystem:
    return SubstitutionSystem(("a", "b"), ("ab", "a"), "fibonacci")


def resolve_substitution(name: str) -> SubstitutionSystem:
    """Map a CLI-style name (``alpha``, ``beta``, ``fibonacci``) or JSON path."""
    named = {"alpha": chacon_alpha, "beta": chacon_beta, "fibonacci": fibonacci}
    if name in named:
        return named[name]()
    with open(name, encoding="utf-8") as fh:
        return SubstitutionSystem.from_json(fh.read())


def _check_word(subst: SubstitutionSystem, w: str) -> None:
    bad = set(w) - set(subst.alphabet)
    if bad:
        raise UnknownSymbol(f"symbols not in alphabet: {sorted(bad)}")


def population_vector(subst: SubstitutionSystem, w: str) -> list[int]:
    _check_word(subst, w)
    return [w.count(a) for a in subst.alphabet]


def predicted_length(subst: SubstitutionSystem, w: str, m: int) -> int:
    lens = _lengths(subst, m)
    return sum(k * lens[i] for i, k in enumerate(population_vector(subst, w)))


def apply_power(subst: SubstitutionSystem, w: str, m: int, cap: int = DEFAULT_CAP) -> str:
    """Return ``beta^m(w)`` by m-fold expansion.

    Raises ``CapExceeded`` before expanding if the length predicted by the
    substitution matrix is above ``cap``.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    size = predicted_length(subst, w, m)
    if size > cap:
        raise CapExceeded(f"|beta^{m}(w)| = {size} exceeds cap {cap}")
    for _ in range(m):
        w = subst.apply(w)
    return w


def substitution_matrix(subst: SubstitutionSystem) -> np.ndarray:
    """Column j counts the letters of the image of letter j."""
    p = subst.size
    S = np.zeros((p, p), dtype=np.int64)
    for j, img in enumerate(subst.images):
        for c in img:
            S[subst.index(c), j] += 1
    return S


def is_primitive(S: np.ndarray) -> bool:
    p = S.shape[0]
    B = (S > 0).astype(np.int64)
    P = B.copy()
    for _ in range(p * p):
        if P.all():
            return True
        P = ((P @ B) > 0).astype(np.int64)
    return bool(P.all())


@dataclass(frozen=True)
class PFData:
    theta: float
    right_eigvec: np.ndarray
    primitive: bool
    theta_exact: object = None
    frequencies_exact: tuple | None = None

    @property
    def frequencies(self) -> np.ndarray:
        return self.right_eigvec


def pf_data(subst: SubstitutionSystem) -> PFData:
    """Dominant eigenvalue and letter frequencies of the substitution matrix.

    For alphabets of size at most 3 the eigendata is computed exactly from
    the integer characteristic polynomial; larger alphabets use numpy with a
    residual check of 1e-12.
    """
    S = subst.matrix
    primitive = is_primitive(S)
    p = S.shape[0]
    if p <= 3:
        M = sympy.Matrix(S.tolist())
        roots = list(M.eigenvals())
        theta_exact = max(roots, key=lambda r: (abs(complex(sympy.N(r, 30))), sympy.re(r)))
        theta_exact = sympy.nsimplify(theta_exact)
        null = (M - theta_exact * sympy.eye(p)).nullspace()
        vec = null[0]
        total = sum(vec)
        vec = [sympy.simplify(v / total) for v in vec]
        freqs = np.array([float(v) for v in vec])
        exact = tuple(Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1]))
                      if v.is_rational else v for v in vec)
        return PFData(float(theta_exact), freqs, primitive, theta_exact, exact)
    w, V = np.linalg.eig(S.astype(float))
    k = int(np.argmax(np.abs(w)))
    theta = float(w[k].real)
    v = V[:, k].real
    v = v / v.sum()
    if np.max(np.abs(S @ v - theta * v)) > 1e-12:
        raise ArithmeticError("eigensolve residual above 1e-12")
    return PFData(theta, v, primitive)


def fixed_point_prefix(subst: SubstitutionSystem, seed: str, N: int,
                       cap: int = DEFAULT_CAP) -> str:
    """First ``N`` symbols of the one-sided fixed point starting with ``seed``."""
    img = subst.image(seed)
    if img[0] != seed:
        raise SeedNotExtendable(f"image of {seed!r} does not start with it")
    if N > cap:
        raise CapExceeded(f"N={N} exceeds cap {cap}")
    if N <= 1:
        return seed[:N]
    if len(img) == 1:
        raise SeedNotExtendable(f"{seed!r} is a fixed letter; the fixed point is constant")
    w = seed
    while len(w) < N:
        # only the part that feeds the first N symbols needs expanding
        w = subst.apply(w[:N])
    return w[:N]


@dataclass(frozen=True)
class FactorTable:
    """Length-n factors in lexicographic (alphabet) order; index k is 0-based."""

    n: int
    factors: tuple[str, ...]

    @property
    def J(self) -> int:
        return len(self.factors)

    @cached_property
    def index(self) -> dict[str, int]:
        return {w: k for k, w in enumerate(self.factors)}

    def __contains__(self, w: str) -> bool:
        return w in self.index

    def __len__(self) -> int:
        return len(self.factors)


def _factor_set(text: str, n: int) -> set[str]:
    return {text[i:i + n] for i in range(len(text) - n + 1)}


@lru_cache(maxsize=256)
def enumerate_factors(subst: SubstitutionSystem, n: int, seed: str | None = None,
                      cap: int = DEFAULT_CAP) -> FactorTable:
    """All length-n factors of the language generated by ``seed``.

    Factors of ``beta^m(seed)`` are collected for increasing m, starting once
    the word is at least n long, until two consecutive m give the same set.
    """
    if n < 1:
        raise ValueError("rank n must be >= 1")
    seed = subst.alphabet[0] if seed is None else seed
    m = 0
    while predicted_length(subst, seed, m) < n:
        m += 1
        if m > 200:
            raise CapExceeded(f"images of {seed!r} never reach length {n}")
    word = apply_power(subst, seed, m, cap)
    prev = _factor_set(word, n)
    while True:
        if predicted_length(subst, seed, m + 1) > cap:
            raise CapExceeded(f"factor enumeration of rank {n} did not saturate under cap")
        word = subst.apply(word)
        m += 1
        cur = _factor_set(word, n)
        if cur == prev:
            break
        prev = cur
    return FactorTable(n, tuple(sorted(cur, key=subst.sort_key)))


def count_occurrences(text: str, w: str) -> int:
    """Number of (possibly overlapping) occurrences of ``w`` in ``text``."""
    if not w:
        raise ValueError("empty pattern")
    if len(w) == 1:
        return text.count(w)
    return sum(1 for _ in re.finditer("(?=" + re.escape(w) + ")", text))


@lru_cache(maxsize=4096)
def image_prefix(subst: SubstitutionSystem, b: str, m: int, K: int) -> str:
    """First ``K`` symbols of ``beta^m(b)`` (the whole word if shorter)."""
    if m == 0:
        return b[:K]
    out = []
    got = 0
    lens = _lengths(subst, m - 1)
    for c in subst.image(b):
        if got >= K:
            break
        piece = image_prefix(subst, c, m - 1, K - got)
        out.append(piece)
        got += min(K - got, lens[subst.index(c)])
    return "".join(out)[:K]


@lru_cache(maxsize=4096)
def image_suffix(subst: SubstitutionSystem, b: str, m: int, K: int) -> str:
    """Last ``K`` symbols of ``beta^m(b)`` (the whole word if shorter)."""
    if K <= 0:
        return ""
    if m == 0:
        return b[-K:]
    out = []
    got = 0
    lens = _lengths(subst, m - 1)
    for c in reversed(subst.image(b)):
        if got >= K:
            break
        out.append(image_suffix(subst, c, m - 1, K - got))
        got += min(K - got, lens[subst.index(c)])
    return "".join(reversed(out))[-K:]


def base_level(subst: SubstitutionSystem, n: int, limit: int = 200) -> int | None:
    """Smallest m with ``min_b |beta^m(b)| >= n``, or None if never reached."""
    for m in range(limit):
        if min(_lengths(subst, m)) >= n:
            return m
    return None


def image_counts(subst: SubstitutionSystem, w: str, m: int) -> list[int]:
    """Occurrence counts of ``w`` in ``beta^m(b)`` for every letter b.

    Uses the concatenation recursion once every image is at least
    ``len(w) - 1`` long, so very deep levels never get materialized.
    """
    n = len(w)
    m0 = base_level(subst, max(n - 1, 1))
    if m0 is None or m <= m0:
        return [count_occurrences(apply_power(subst, b, m), w) for b in subst.alphabet]
    counts = [count_occurrences(apply_power(subst, b, m0), w) for b in subst.alphabet]
    k = n - 1
    for level in range(m0, m):
        new = []
        for b, img in zip(subst.alphabet, subst.images):
            c = sum(counts[subst.index(u)] for u in img)
            if k > 0:
                for u, v in zip(img, img[1:]):
                    seam = image_suffix(subst, u, level, k) + image_prefix(subst, v, level, k)
                    c += count_occurrences(seam, w)
            new.append(c)
        counts = new
    return counts


@dataclass(frozen=True)
class FrequencyEstimate:
    freq: float
    err_bound: float
    count: int
    length: int


def factor_frequency(subst: SubstitutionSystem, w: str, seed: str | None = None,
                     min_length: int = 10**12, check_factor: bool = True) -> FrequencyEstimate:
    """Occurrence frequency of ``w`` in a long prefix of the fixed point.

    The prefix is ``beta^m(seed)`` for the first m with length at least
    ``min_length``; the count is obtained from the concatenation recursion so
    the prefix is never materialized.  ``err_bound`` comes from the fitted
    discrepancy constant: ``(C log_theta(L)^2 + n) / L``.
    """
    _check_word(subst, w)
    n = len(w)
    seed = subst.alphabet[0] if seed is None else seed
    if check_factor and w not in enumerate_factors(subst, n, seed):
        raise NotAFactor(w)
    if base_level(subst, max(n - 1, 1)) is None:
        # non-primitive image growth: count on a materialized prefix instead
        L = min(max(3**13, 50 * n), DEFAULT_CAP)
        text = fixed_point_prefix(subst, seed, L)
        count = count_occurrences(text, w)
    else:
        m = 0
        while predicted_length(subst, seed, m) < min_length:
            m += 1
        L = predicted_length(subst, seed, m)
        count = image_counts(subst, w, m)[subst.index(seed)]
    theta = max(pf_theta(subst), 1.0 + 1e-9)
    windows = L - n + 1
    err = (DISCREPANCY_CONSTANT * math.log(L, theta) ** 2 + n) / windows
    return FrequencyEstimate(count / windows, err, count, L)


@lru_cache(maxsize=None)
def pf_theta(subst: SubstitutionSystem) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(subst.matrix.astype(float)))))


@lru_cache(maxsize=256)
def frequency_table(subst: SubstitutionSystem, n: int) -> np.ndarray:
    """Frequencies of every factor of ``enumerate_factors(subst, n)``, in order."""
    table = enumerate_factors(subst, n)
    return np.array([factor_frequency(subst, w, check_factor=False).freq for w in table.factors])


def alpha_beta_conjugacy(w: str, direction: str, left: str | None = None,
                         fresh: bool = False) -> str:
    """Recode words between the Chacon alphabets.

    ``direction`` is ``"beta->alpha"`` (every 2 becomes 0) or
    ``"alpha->beta"`` (every 0 right after a 1 becomes 2).  For the latter a
    leading 0 needs ``left``, the preceding alpha symbol, unless ``fresh`` says
    the word starts the sequence.
    """
    if direction in ("beta->alpha", "b2a"):
        bad = set(w) - set("012")
        if bad:
            raise UnknownSymbol(f"not a beta word: {sorted(bad)}")
        return w.replace("2", "0")
    if direction not in ("alpha->beta", "a2b"):
        raise ValueError(f"unknown direction {direction!r}")
    bad = set(w) - set("01")
    if bad:
        raise UnknownSymbol(f"not an alpha word: {sorted(bad)}")
    if not w:
        return w
    if w[0] == "0" and left is None and not fresh:
        raise AmbiguousContext("leading 0 needs the preceding symbol")
    prev = left if left is not None else ""
    out = []
    for c in w:
        out.append("2" if c == "0" and prev == "1" else c)
        prev = c
    return "".join(out)


def find_return_words(subst: SubstitutionSystem, power: int, max_len: int) -> list[str]:
    """Words v, |v| <= max_len, such that v v[0] occurs in beta^power(b) for all b."""
    if power < 1:
        raise ValueError("power must be >= 1")
    images = [apply_power(subst, b, power) for b in subst.alphabet]
    found = []
    for n in range(1, max_len + 1):
        for v in enumerate_factors(subst, n).factors:
            if all((v + v[0]) in img for img in images):
                found.append(v)
    return found


def lattice_span_check(vectors: Iterable[Sequence[int]]) -> bool:
    """True iff the integer vectors generate all of Z^p.

    Uses the fact that a full-rank lattice generated by the rows is Z^p iff the
    gcd of all maximal minors is 1.
    """
    vecs = [list(map(int, v)) for v in vectors]
    if not vecs:
        return False
    p = len(vecs[0])
    if any(len(v) != p for v in vecs):
        raise DimensionMismatch("vectors must share a dimension")
    if len(vecs) < p:
        return False
    g = 0
    for rows in combinations(range(len(vecs)), p):
        det = int(sympy.Matrix([vecs[r] for r in rows]).det())
        g = math.gcd(g, det)
        if g == 1:
            return True
    return g == 1
