"""Twisted sums over cylinders, the concatenation cocycle and the matrix recursion.

For a word v, a cylinder word u of rank n and a frequency ω,

    phi_u(v, ω) = sum over occurrences of u at position j in v of e^{-2πiωj}.

Concatenation is handled by a small monoid of ``Segment`` values which keep
the twisted sum, the length, and the first and last ``n - 1`` symbols: two
segments combine by shifting the phase of the right one and adding the
windows straddling the seam.  The same rule, applied to the pieces
``beta^{m-1}(u_1) ... beta^{m-1}(u_L)`` of ``beta^m(b)``, gives

    Pi_m(ω) = M_m(ω) Pi_{m-1}(ω) + E_m(ω)

where ``M_m`` carries the phases of the piece offsets and ``E_m`` the seams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DepthTooShallow, DimensionMismatch, NoReturnWords, NotAFactor, WordTooShort
from .substitution import (
    FactorTable,
    SubstitutionSystem,
    apply_power,
    base_level,
    chacon_beta,
    enumerate_factors,
    find_return_words,
    frequency_table,
    image_prefix,
    image_suffix,
    population_vector,
)

TWO_PI = 2.0 * math.pi


def int_dist(v) -> float:
    """``max_i`` distance of ``v_i`` to the nearest integer."""
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ValueError("entries must be finite")
    return float(np.max(np.abs(a - np.rint(a)))) if a.size else 0.0


def _frac_dist(x: Fraction) -> Fraction:
    r = x - math.floor(x)
    return min(r, 1 - r)


_SPLIT = 134217729.0  # 2^27 + 1


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def frac_product(omega: float, positions) -> np.ndarray:
    """``(ω j) mod 1`` for integer positions j, without losing the low bits.

    The float product is corrected by its exact rounding error (Dekker's
    two-product), so the result is accurate to about 1e-16 even when ω j is
    large; feeding ``2π ω j`` straight to ``exp`` would lose ``ulp(ω j)``.
    """
    x = float(omega)
    j = np.asarray(positions, dtype=float)
    p = x * j
    xh, xl = _split(np.float64(x))
    jh, jl = _split(j)
    err = ((xh * jh - p) + xh * jl + xl * jh) + xl * jl
    return (p - np.floor(p)) + err


def _phases(positions, omega: float) -> np.ndarray:
    """``e^{-2πiωj}`` for each position j."""
    return np.exp(-1j * TWO_PI * frac_product(omega, positions))


def _phase(position: int, omega: float) -> complex:
    return complex(_phases(np.array([position]), omega)[0])


def _occurrences(v: str, u: str) -> np.ndarray:
    out = []
    i = v.find(u)
    while i != -1:
        out.append(i)
        i = v.find(u, i + 1)
    return np.array(out, dtype=np.int64)


def _cyl_word(cyl, table: FactorTable | None) -> str:
    if isinstance(cyl, str):
        return cyl
    if table is None:
        raise TypeError("an integer cylinder index needs a FactorTable")
    return table.factors[cyl]


def phi_cyl(v: str, cyl, omega: float, table: FactorTable | None = None) -> complex:
    """Twisted count of the cylinder word ``cyl`` (or index into ``table``) in v."""
    u = _cyl_word(cyl, table)
    if len(v) < len(u):
        raise WordTooShort(f"|v|={len(v)} < n={len(u)}")
    return complex(np.sum(_phases(_occurrences(v, u), omega)))


def boundary_H(v: str, w: str, omega: float, n: int, cyl, table: FactorTable | None = None) -> complex:
    """``sum_{j=1}^{n-1} 1_u(v_{p-j+1..p} w_{1..n-j}) e^{-2πiωj}``, p = |v|."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(v) < n - 1 or len(w) < n - 1:
        raise WordTooShort("both words need at least n-1 symbols")
    u = _cyl_word(cyl, table)
    p = len(v)
    total = 0j
    for j in range(1, n):
        if v[p - j:] + w[:n - j] == u:
            total += _phase(j, omega)
    return complex(total)


def phi_concat(v: str, w: str, omega: float, n: int, cyl, phi_v: complex | None = None,
               phi_w: complex | None = None, table: FactorTable | None = None) -> complex:
    """``phi(vw)`` assembled from ``phi(v)``, ``phi(w)`` and the seam sum.

    The seam windows start at positions ``|v| - j`` of vw, so the boundary
    sum enters with the phase of |v| and frequency reversed:
    ``phi(v) + e^{-2πiω|v|} (phi(w) + H(v, w, -ω))``.
    """
    u = _cyl_word(cyl, table)
    if len(v) < n or len(w) < n:
        raise WordTooShort("both words need at least n symbols")
    if phi_v is None:
        phi_v = phi_cyl(v, u, omega)
    if phi_w is None:
        phi_w = phi_cyl(w, u, omega)
    shift = _phase(len(v), omega)
    return complex(phi_v + shift * (phi_w + boundary_H(v, w, -omega, n, u)))


@dataclass(frozen=True)
class Segment:
    """Twisted-sum summary of a word for all cylinders of one rank at one ω.

    ``phi`` is a length-J vector indexed like the factor table; ``head`` and
    ``tail`` are the first and last ``n - 1`` symbols (all of them if the
    word is shorter).
    """

    phi: np.ndarray
    length: int
    head: str
    tail: str

    @classmethod
    def of_word(cls, v: str, table: FactorTable, omega: float) -> "Segment":
        k = table.n - 1
        phi = _window_sums(v, table, _phases(np.arange(max(len(v) - table.n + 1, 0)), omega))
        return cls(phi, len(v), v[:k], v[max(len(v) - k, 0):] if k else "")

    def join(self, other: "Segment", table: FactorTable, omega: float) -> "Segment":
        n = table.n
        k = n - 1
        shift = _phase(self.length, omega)
        phi = self.phi + shift * other.phi
        if k:
            phi = phi + _seam(self.tail, other.head, self.length, table, omega)
        head = (self.head + other.head)[:k]
        tail = (self.tail + other.tail)[-k:] if k else ""
        return Segment(phi, self.length + other.length, head, tail)


def _seam(tail: str, head: str, left_len: int, table: FactorTable, omega: float) -> np.ndarray:
    """Windows of rank n starting in ``tail`` and ending in ``head``."""
    n = table.n
    out = np.zeros(table.J, dtype=complex)
    s = tail + head
    t = len(tail)
    for i in range(max(0, t - n + 1), t):
        if i + n > len(s):
            break
        w = s[i:i + n]
        idx = table.index.get(w)
        if idx is None:
            raise NotAFactor(w)
        out[idx] += _phase(left_len - t + i, omega)
    return out


def window_index(v: str, table: FactorTable) -> np.ndarray:
    """Table index of the rank-n window starting at each position of v."""
    n = table.n
    L = len(v) - n + 1
    if L <= 0:
        return np.zeros(0, dtype=np.int64)
    if n <= 7:
        b = np.frombuffer(v.encode("latin-1"), dtype=np.uint8).astype(np.int64)
        code = np.zeros(L, dtype=np.int64)
        for t in range(n):
            code = code * 256 + b[t:t + L]
        fac = np.array([sum(ord(ch) << (8 * (n - 1 - t)) for t, ch in enumerate(w))
                        for w in table.factors], dtype=np.int64)
        order = np.argsort(fac)
        pos = np.searchsorted(fac[order], code)
        pos = np.minimum(pos, len(fac) - 1)
        hit = fac[order][pos] == code
        if not hit.all():
            bad = int(np.flatnonzero(~hit)[0])
            raise NotAFactor(v[bad:bad + n])
        return order[pos]
    idx = table.index
    try:
        return np.array([idx[v[i:i + n]] for i in range(L)], dtype=np.int64)
    except KeyError as e:
        raise NotAFactor(str(e)) from None


def _window_sums(v: str, table: FactorTable, weights: np.ndarray) -> np.ndarray:
    idx = window_index(v, table)
    out = np.zeros(table.J, dtype=complex)
    if idx.size:
        out.real = np.bincount(idx, weights=weights.real, minlength=table.J)
        out.imag = np.bincount(idx, weights=weights.imag, minlength=table.J)
    return out


@dataclass(frozen=True)
class CylFunction:
    """``f = sum_k r_k 1_[k,n]`` over the rank-n cylinders of a substitution."""

    subst: SubstitutionSystem
    n: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.table.J,):
            raise DimensionMismatch(f"need {self.table.J} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_mapping(cls, subst: SubstitutionSystem, n: int, values: Mapping[str, float]) -> "CylFunction":
        table = enumerate_factors(subst, n)
        for w in values:
            if w not in table:
                raise NotAFactor(w)
        return cls(subst, n, np.array([values.get(w, 0.0) for w in table.factors]))

    @classmethod
    def indicator(cls, subst: SubstitutionSystem, word: str) -> "CylFunction":
        return cls.from_mapping(subst, len(word), {word: 1.0})

    @property
    def table(self) -> FactorTable:
        return enumerate_factors(self.subst, self.n)

    @cached_property
    def measures(self) -> np.ndarray:
        return frequency_table(self.subst, self.n)

    @property
    def mean(self) -> float:
        return float(self.coeffs @ self.measures)

    def centered(self) -> "CylFunction":
        """Subtract the mean; the exact mean would need exact frequencies."""
        return CylFunction(self.subst, self.n, self.coeffs - self.mean / self.measures.sum())

    @property
    def is_zero_mean(self) -> bool:
        from .substitution import factor_frequency
        errs = [factor_frequency(self.subst, w, check_factor=False).err_bound for w in self.table.factors]
        return abs(self.mean) <= float(np.abs(self.coeffs) @ np.array(errs)) + 1e-15

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    @property
    def l2_norm(self) -> float:
        return float(math.sqrt(self.coeffs ** 2 @ self.measures))

    @property
    def lipschitz_constant(self) -> float:
        """Smallest C with ``osc(f, [u]) <= C mu([u])`` for every shorter cylinder u."""
        words = self.table.factors
        best = float(np.ptp(self.coeffs))
        for r in range(1, self.n):
            groups: dict[str, list[int]] = {}
            for k, w in enumerate(words):
                groups.setdefault(w[:r], []).append(k)
            for ks in groups.values():
                mu = float(self.measures[ks].sum())
                osc = float(np.ptp(self.coeffs[ks]))
                if osc > 0:
                    best = max(best, osc / mu)
        return best

    @property
    def weak_lipschitz_norm(self) -> float:
        return self.sup_norm + self.lipschitz_constant

    def __call__(self, sequence: str) -> float:
        return float(self.coeffs[self.table.index[sequence[:self.n]]])


def phi_f(v: str, omega: float, f: CylFunction) -> complex:
    """``sum_k r_k phi_[k,n](v, ω)``, the twisted Birkhoff sum of f along v."""
    if len(v) < f.n:
        raise WordTooShort(f"|v|={len(v)} < n={f.n}")
    idx = window_index(v, f.table)
    return complex(np.sum(f.coeffs[idx] * _phases(np.arange(idx.size), omega)))


@dataclass(frozen=True)
class TwistedMatrix:
    entries: np.ndarray
    m: int
    omega: float

    def __abs__(self) -> np.ndarray:
        return np.abs(self.entries)


def build_twisted_matrix(subst: SubstitutionSystem, m: int, omega: float) -> TwistedMatrix:
    """``M(b, c) = sum over letters u_j = c of beta(b) of e^{-2πiω(|β^{m-1}(u_1..u_{j-1})|)}``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    lens = subst.lengths(m - 1)
    p = subst.size
    A = np.zeros((p, p), dtype=complex)
    for b, img in enumerate(subst.images):
        acc = 0
        for ch in img:
            c = subst.index(ch)
            A[b, c] += _phase(acc, omega)
            acc += lens[c]
    return TwistedMatrix(A, m, omega)


@dataclass(frozen=True)
class PiState:
    """Rows are letters b, columns the rank-n cylinders: ``phi_[k,n](β^m(b), ω)``."""

    columns: np.ndarray
    m: int
    n: int
    omega: float


def _check_depth(subst: SubstitutionSystem, m: int, n: int) -> None:
    if min(subst.lengths(m)) < n:
        raise DepthTooShallow(f"min_b |β^{m}(b)| = {min(subst.lengths(m))} < n = {n}")


def pi_direct(subst: SubstitutionSystem, m: int, n: int, omega: float, cap: int = 10**7) -> PiState:
    """Pi_m(ω) by scanning the fully expanded words ``β^m(b)``."""
    _check_depth(subst, m, n)
    table = enumerate_factors(subst, n)
    rows = []
    for b in subst.alphabet:
        v = apply_power(subst, b, m, cap)
        rows.append(_window_sums(v, table, _phases(np.arange(len(v) - n + 1), omega)))
    return PiState(np.array(rows), m, n, omega)


def error_vector(subst: SubstitutionSystem, m: int, n: int, omega: float) -> np.ndarray:
    """Seam corrections ``E_m``: windows straddling two pieces of ``β^m(b)``."""
    table = enumerate_factors(subst, n)
    lens = subst.lengths(m - 1)
    E = np.zeros((subst.size, table.J), dtype=complex)
    if n == 1:
        return E
    for b, img in enumerate(subst.images):
        acc = 0
        for u, v in zip(img, img[1:]):
            acc += lens[subst.index(u)]
            tail = image_suffix(subst, u, m - 1, n - 1)
            head = image_prefix(subst, v, m - 1, n - 1)
            E[b] += _seam(tail, head, acc, table, omega)
    return E


def pi_recursive(subst: SubstitutionSystem, m: int, n: int, omega: float) -> PiState:
    """Pi_m(ω) from the base level by ``Pi <- M Pi + E``, never expanding deep words."""
    m0 = base_level(subst, n)
    if m0 is None or m < m0:
        raise DepthTooShallow(f"m={m} is below the base level {m0} for rank {n}")
    P = pi_direct(subst, m0, n, omega).columns
    for level in range(m0 + 1, m + 1):
        M = build_twisted_matrix(subst, level, omega).entries
        P = M @ P + error_vector(subst, level, n, omega)
    return PiState(P, m, n, omega)


def cosine_gap_holds(t) -> np.ndarray:
    """Pointwise ``|1 + e^{2πit}| <= 2 - ||t||^2 / 2``."""
    t = np.asarray(t, dtype=float)
    d = np.abs(t - np.rint(t))
    return np.abs(1 + np.exp(2j * np.pi * t)) <= 2 - d ** 2 / 2 + 1e-15


def xhat_lattice_bound(k: int, omega, subst: SubstitutionSystem | None = None) -> dict:
    """``x̂_k = ω (|β^k(0)|, |β^k(1)|, |β^k(2)|)`` against ``||ω||/3``, exactly.

    Since ``|β^k(1)| + |β^k(2)| - |β^k(0)| = 1`` the integer combination
    (-1, 1, 1) of the coordinates equals ω, giving the bound with α = 1/3.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    subst = chacon_beta() if subst is None else subst
    w = Fraction(omega).limit_denominator(10**12) if isinstance(omega, float) else Fraction(omega)
    lens = subst.lengths(k)
    xhat = [w * L for L in lens]
    dist = max(_frac_dist(x) for x in xhat)
    return {"xhat": [float(x) for x in xhat], "dist": float(dist),
            "ok": dist >= _frac_dist(w) / 3, "exact_dist": dist}


def _ones_power(subst: SubstitutionSystem, k: int) -> np.ndarray:
    return np.array(subst.lengths(k), dtype=float)


def matrix_product(subst: SubstitutionSystem, lo: int, hi: int, omega: float) -> np.ndarray:
    """``M_hi ... M_lo`` where ``M_j`` carries the phases of the lengths of β^j."""
    P = np.eye(subst.size, dtype=complex)
    for j in range(lo, hi + 1):
        P = build_twisted_matrix(subst, j + 1, omega).entries @ P
    return P


def return_word_schedule(subst: SubstitutionSystem, words: Sequence[str], lo: int, hi: int,
                         omega: float) -> list[tuple[int, str, float]]:
    """Per step k, the return word maximizing ``||ω |β^k(v)|||``."""
    out = []
    for k in range(lo, hi + 1):
        lens = subst.lengths(k)
        best = max(words, key=lambda v: (_frac_dist(Fraction(omega) * _dot(population_vector(subst, v), lens)), v))
        out.append((k, best, float(_frac_dist(Fraction(omega) * _dot(population_vector(subst, best), lens)))))
    return out


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def weight_c(subst: SubstitutionSystem, x: np.ndarray, c_letter: int, m_count: int) -> float:
    """``x_c / (2 m max_j S^t_{b,j} max_j x_j)``, minimized over rows b."""
    St = subst.matrix.T
    return float(min(x[c_letter] / (2 * m_count * St[b].max() * x.max()) for b in range(subst.size)))


@dataclass
class VeechResult:
    n: int
    omega: float
    rows: list[dict]
    c_fit: float
    lhs: np.ndarray
    rhs: np.ndarray
    schedule: list[tuple[int, str, float]]
    schedule_weight: float


def veech_product_check(subst: SubstitutionSystem, n: int, m: int, omega: float,
                        return_words: Iterable[str] | None = None, m_min: int | None = None,
                        power: int = 3) -> VeechResult:
    """Compare ``|(M_m ... M_{n+1}) 1̂|`` with ``(1 - c ||ω||^2)^{m-n} (S^t)^{m-n} 1̂``.

    For each m' in ``[m_min, m]`` (default n+1) the largest admissible c is
    ``min_b (1 - (lhs_b / rhs_b)^{1/(m'-n)}) / ||ω||^2``; ``c_fit`` is the
    minimum over m', clipped to [0, 1].  A value of 0 means some step attains
    the unperturbed bound exactly.
    """
    if m <= n:
        raise ValueError("need m > n")
    valid = set(find_return_words(subst, power, 6))
    words = list(return_words) if return_words is not None else ["12", "012"]
    if not words or any(v not in valid for v in words):
        raise NoReturnWords(f"{words} are not return words of the power-{power} substitution")
    d = float(_frac_dist(Fraction(omega).limit_denominator(10**12)))
    m_min = n + 1 if m_min is None else m_min
    rows = []
    c_fit = 1.0
    lhs = rhs = None
    for mm in range(m_min, m + 1):
        L = mm - n
        lhs = np.abs(matrix_product(subst, n + 1, mm, omega) @ np.ones(subst.size))
        base = _ones_power(subst, L)
        ratio = lhs / base
        if d == 0:
            c_here = 1.0 if np.all(ratio <= 1 + 1e-12) else 0.0
        else:
            c_here = float(np.min((1 - np.minimum(ratio, 1.0) ** (1.0 / L)) / d ** 2))
            c_here = float(np.clip(c_here, 0.0, 1.0))
        c_fit = min(c_fit, c_here)
        rows.append({"m": mm, "max_ratio": float(ratio.max()), "c_step": c_here})
    rhs = (1 - c_fit * d ** 2) ** (m - n) * _ones_power(subst, m - n)
    schedule = return_word_schedule(subst, words, n + 1, m, omega)
    weight = min(weight_c(subst, _ones_power(subst, j), 0, len(words)) for j in range(m - n + 1))
    return VeechResult(n, omega, rows, c_fit, lhs, rhs, schedule, weight)


@dataclass
class GrowthFit:
    omega: float
    N: list[int]
    m: list[int]
    n: list[int]
    max_abs: list[float]
    slope: float
    c2: float
    C_S: float
    residuals: list[float]
    C_bound: float
    stable: bool


def corollary_growth_check(omega: float, N_list: Sequence[int],
                           subst: SubstitutionSystem | None = None) -> GrowthFit:
    """Fit ``max |Pi_m(ω)| <= C_S N^{1 - c'' ||ω||^2} + C_S m n`` over N = 3^k.

    Levels are ``m = round(log_3 N)`` and ranks ``n = max(1, floor(m / 2))``.
    A least-squares line through ``(log N, log max|Pi|)`` gives the exponent
    ``1 - c'' ||ω||^2`` and ``C_S = e^intercept``; ``residuals`` are the
    per-N ratios ``max|Pi| / (C_S N^slope)`` and the fit is stable when all
    of them lie in [0.5, 1.5].  ``C_bound`` is the smallest constant for which
    the two-term bound holds at every N of the list.
    """
    subst = chacon_beta() if subst is None else subst
    d = float(_frac_dist(Fraction(omega).limit_denominator(10**12)))
    ms, ns, vals = [], [], []
    for N in N_list:
        m = max(1, round(math.log(N, 3)))
        n = max(1, m // 2)
        m = max(m, base_level(subst, n))
        P = pi_recursive(subst, m, n, omega).columns
        ms.append(m)
        ns.append(n)
        vals.append(float(np.max(np.abs(P))))
    x = np.log(np.asarray(N_list, dtype=float))
    y = np.log(np.asarray(vals))
    if len(N_list) > 1:
        slope, icpt = (float(t) for t in np.polyfit(x, y, 1))
    else:
        slope, icpt = 1.0, float(y[0] - x[0])
    c2 = (1 - slope) / d ** 2 if d > 0 else 0.0
    C_S = math.exp(icpt)
    resid = [float(v / (C_S * N ** slope)) for v, N in zip(vals, N_list)]
    C_bound = max(v / (N ** slope + m * n) for v, N, m, n in zip(vals, N_list, ms, ns))
    stable = all(0.5 <= r <= 1.5 for r in resid)
    return GrowthFit(omega, list(N_list), ms, ns, vals, slope, c2, C_S, resid, C_bound, stable)


def veech_sweep_rows(subst: SubstitutionSystem, omegas: Sequence[float], n: int,
                     m_max: int) -> list[dict]:
    """Rows ``(omega, m, n, max_abs_entry, bound_value, c_fit)`` for CSV export."""
    out = []
    for w in omegas:
        res = veech_product_check(subst, n, m_max, w)
        d = float(_frac_dist(Fraction(w).limit_denominator(10**12)))
        for mm in range(n + 1, m_max + 1):
            lhs = np.abs(matrix_product(subst, n + 1, mm, w) @ np.ones(subst.size))
            bound = (1 - res.c_fit * d ** 2) ** (mm - n) * _ones_power(subst, mm - n)
            out.append({"omega": w, "m": mm, "n": n, "max_abs_entry": float(lhs.max()),
                        "bound_value": float(bound.max()), "c_fit": res.c_fit})
    return out
