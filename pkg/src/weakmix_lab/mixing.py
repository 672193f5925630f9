"""Correlations of the Chacon map, weak-mixing averages and the lower-bound experiment.

Interval-side integrals use the midpoint rule on ``x_i = (2i+1) / (2 * 3^q)``.
Every grid point lies strictly inside a level of the stage-S tower (S >= q),
so its orbit is read off exactly from the integer level table:
``C^k(x_i) = lo(j_i + k) + delta_i`` while ``j_i + k`` stays below the top.
Points close to the top are pushed to higher stages first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .chacon import (
    TABLE_STAGE_CAP,
    base_interval,
    coding_cell,
    empty_intersection_times,
    height,
    level_lo_num,
    level_table,
    map_interval_set,
    width,
)
from .errors import BumpConditionFailed, CesaroBoundViolated, StageCapExceeded
from .intervals import IntervalSet
from .observables import IntervalObservable, raised_cosine_bump
from .report import ExperimentReport
from .substitution import DISCREPANCY_CONSTANT, SubstitutionSystem, chacon_alpha, enumerate_factors
from .twisted import CylFunction, window_index

DEFAULT_Q = 9
_CHUNK_ELEMENTS = 4 * 10**6


@dataclass(frozen=True)
class CodedObservable:
    """A cylindrical function of the α-coding, viewed as a function on [0, 1)."""

    cyl: CylFunction

    @property
    def n(self) -> int:
        return self.cyl.n

    @property
    def mean(self) -> float:
        return self.cyl.mean

    @property
    def l2(self) -> float:
        return self.cyl.l2_norm


class QuadratureGrid:
    """Midpoints of a ``3^q`` grid, located in a tower tall enough for K steps."""

    def __init__(self, q: int = DEFAULT_Q, K: int = 1):
        self.q = q
        self.M = 3**q
        self.K = max(K, 1)
        S = q
        while height(S) < 8 * self.K and S < TABLE_STAGE_CAP:
            S += 1
        self.S = S
        t = level_table(S)
        order = np.argsort(t, kind="stable")
        i = np.arange(self.M, dtype=np.int64)
        X2 = (2 * i + 1) * 3 ** (S + 1 - q)
        pos = np.searchsorted(2 * t[order], X2, side="right") - 1
        j = order[pos]
        d2 = X2 - 2 * t[j]
        assert np.all((d2 >= 0) & (d2 < 4))
        self.x = (2 * i + 1) / (2 * self.M)
        self.stage = np.full(self.M, S, dtype=np.int64)
        self.j = j.astype(np.int64)
        self.d2 = d2.astype(np.int64)
        self._escalate()

    def _escalate(self) -> None:
        need = self.j + self.K - 1 > height(self.S) - 1
        for i in np.flatnonzero(need):
            s, j, d2 = int(self.stage[i]), int(self.j[i]), int(self.d2[i])
            while j + self.K - 1 > height(s) - 1:
                if s >= 20:
                    raise StageCapExceeded(f"grid point {i} needs a stage above 20")
                qq = (3 * d2) // 4
                j += qq * height(s) + (1 if qq == 2 else 0)
                d2 = 3 * d2 - 4 * qq
                s += 1
            self.stage[i], self.j[i], self.d2[i] = s, j, d2
        self.main = np.flatnonzero(self.stage == self.S)
        self.high = np.flatnonzero(self.stage != self.S)

    def lo_block(self, pts: np.ndarray, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Level numerators of ``C^k`` for points ``pts`` (all at one stage) and offsets ks."""
        s = int(self.stage[pts[0]])
        idx = self.j[pts][:, None] + ks[None, :]
        if s == self.S:
            lo = level_table(s)[idx]
        else:
            lo = level_lo_num(s, idx.ravel()).reshape(idx.shape)
        return lo, np.full(len(pts), s)

    def blocks(self, ks: np.ndarray):
        """Yield ``(pts, y, codes)`` with orbit coordinates for offsets ks.

        ``y[p, t] = C^{ks[t]}(x_pts[p])`` and ``codes`` is True on I_1.
        """
        size = max(1, _CHUNK_ELEMENTS // max(len(ks), 1))
        for a in range(0, len(self.main), size):
            yield self._block(self.main[a:a + size], ks)
        for pt in self.high:
            yield self._block(np.array([pt]), ks)

    def _block(self, pts: np.ndarray, ks: np.ndarray):
        lo, st = self.lo_block(pts, ks)
        den = (2.0 * 3.0 ** (st + 1))[:, None]
        y = (2 * lo + self.d2[pts][:, None]) / den
        codes = lo >= (2 * 3 ** st)[:, None]
        return pts, y, codes


def _values(obs, y: np.ndarray, codes: np.ndarray, n_out: int) -> np.ndarray:
    if isinstance(obs, IntervalObservable):
        return obs(y[:, :n_out])
    if isinstance(obs, CodedObservable):
        n = obs.n
        # rank-n windows of the itinerary, packed as binary numbers
        packed = np.zeros((codes.shape[0], n_out), dtype=np.int64)
        for t in range(n):
            packed = packed * 2 + codes[:, t:t + n_out]
        lut = _binary_lut(obs.cyl)
        return lut[packed]
    raise TypeError("unsupported observable")


def _binary_lut(f: CylFunction) -> np.ndarray:
    lut = np.full(2 ** f.n, np.nan)
    for k, w in enumerate(f.table.factors):
        lut[int(w, 2)] = f.coeffs[k]
    return lut


def _extra(obs) -> int:
    return obs.n - 1 if isinstance(obs, CodedObservable) else 0


def correlation_series(f, g, K: int, q: int = DEFAULT_Q, grid: QuadratureGrid | None = None) -> np.ndarray:
    """``<f o C^k, g> - (∫f)(∫g)`` for k < K by midpoint quadrature with exact orbits."""
    ef, eg = _extra(f), _extra(g)
    grid = grid or QuadratureGrid(q, K + max(ef, eg))
    ks = np.arange(K + ef)
    acc = np.zeros(K)
    g0 = np.zeros(grid.M)
    for pts, y, codes in grid.blocks(np.arange(eg + 1)):
        g0[pts] = _values(g, y, codes, 1)[:, 0]
    for pts, y, codes in grid.blocks(ks):
        acc += g0[pts] @ _values(f, y, codes, K)
    return acc / grid.M - f.mean * g.mean


def correlation(f, g, k: int, q: int = DEFAULT_Q, side: str = "interval", L: int = 3**12) -> dict:
    """One correlation ``<f o T^k, g> - ∫f ∫g`` with an error bar.

    ``side="interval"`` uses exact orbits and midpoint quadrature (error bar
    from the Lipschitz constants and the number of translation pieces);
    ``side="subshift"`` averages along a length-L prefix of the fixed point of
    the observables' substitution with a discrepancy-based error bar.
    """
    if side == "interval":
        val = float(correlation_series(f, g, k + 1, q)[k])
        return {"value": val, "error_bar": _quad_error(f, g, k, q)}
    if side == "subshift":
        from .spectral import fixed_point

        if not (isinstance(f, CylFunction) and isinstance(g, CylFunction)) or f.subst != g.subst:
            raise TypeError("subshift correlations need CylFunctions of one substitution")
        n = max(f.n, g.n)
        text = fixed_point(f.subst, L + k + n)
        a = f.coeffs[window_index(text[:L + k + f.n - 1], f.table)]
        b = g.coeffs[window_index(text[:L + g.n - 1], g.table)]
        val = float(np.dot(a[k:k + L], b[:L]) / L - f.mean * g.mean)
        r = n + k
        p = _complexity(f.subst, r)
        theta = max(float(np.max(np.abs(np.linalg.eigvals(f.subst.matrix.astype(float))))), 1.0 + 1e-9)
        err = f.sup_norm * g.sup_norm * p * (DISCREPANCY_CONSTANT * math.log(L, theta) ** 2 + r) / L
        return {"value": val, "error_bar": float(err)}
    raise ValueError(f"unknown side {side!r}")


def _complexity(subst: SubstitutionSystem, r: int) -> int:
    if r <= 48:
        return enumerate_factors(subst, r).J
    return math.ceil(enumerate_factors(subst, 48).J * r / 48)


def _quad_error(f, g, k: int, q: int) -> float:
    M = 3**q
    sup = lambda o: o.sup_norm if isinstance(o, IntervalObservable) else o.cyl.sup_norm
    lip = lambda o: o.lipschitz if isinstance(o, IntervalObservable) else math.inf
    # smooth part: midpoint rule error on each translation piece; jumps: one
    # grid cell per piece boundary, at most k + 2 pieces for C^k
    smooth = (lip(f) + lip(g)) * sup(f) * sup(g) / (2 * M) if math.isfinite(lip(f) + lip(g)) else math.inf
    jumps = 2 * (k + 2) * sup(f) * sup(g) / M
    return float(smooth + jumps)


def _square_error(cmax: float, eps: float) -> float:
    # | |c + e|^2 - |c|^2 | <= 2 |c| e + e^2
    return 2 * cmax * eps + eps * eps


def weakmix_average(f, g, N_list: Sequence[int], q: int = DEFAULT_Q) -> ExperimentReport:
    """``V_N = N^{-1} sum_{k<N} |<U^k f, g>|^2`` over N_list with the K_C fit.

    ``K_C = max_N V_N log_3(N)^{1/6} / (||f||_L ||f||_2 ||g||_2^2)``.
    """
    N_list = sorted(int(N) for N in N_list)
    c = correlation_series(f, g, N_list[-1], q)
    csum = np.cumsum(c ** 2)
    V = [float(csum[N - 1] / N) for N in N_list]
    fl = f.lipschitz_norm if isinstance(f, IntervalObservable) else f.cyl.weak_lipschitz_norm
    scale = fl * f.l2 * g.l2 ** 2
    norm = [v * math.log(N, 3) ** (1 / 6) / scale if scale else 0.0 for v, N in zip(V, N_list)]
    rep = ExperimentReport(
        "weakmix_upper",
        {"f": getattr(f, "name", "cyl"), "g": getattr(g, "name", "cyl"), "N_list": N_list, "q": q},
        [(N, v, _square_error(float(np.abs(c[:N]).max()), _quad_error(f, g, N, q)))
         for N, v in zip(N_list, V)],
        columns=("N", "value", "error_bar"),
    )
    rep.fit("K_C", max(norm) if norm else 0.0)
    top = norm[len(norm) // 2:]
    rep.extra["K_C_top_half_spread"] = max(top) / min(top) if top and min(top) > 0 else math.inf
    rep.extra["rate_reference"] = [(N, math.log(N, 3) ** (-1 / 6)) for N in N_list]
    rep.flags["decreasing"] = V[-1] < V[0]
    rep.flags["cauchy_schwarz"] = all(0 <= v <= (f.l2 * g.l2) ** 2 + 1e-12 for v in V)
    rep.extra["correlations_head"] = [float(x) for x in c[:16]]
    rep.extra["_series"] = c
    return rep


@dataclass
class CylApproximation:
    cyl: CylFunction
    sup_error: float
    C: float
    n: int


def cyl_approximation(f: IntervalObservable, n: int, stage: int | None = None,
                      sample_q: int = 7, gauss: int = 8) -> CylApproximation:
    """Cylinder averages ``r_w = mu(cell_w)^{-1} ∫_{cell_w} f`` on the α-coding.

    ``sup_error`` is ``max |f(x) - r_{w(x)}|`` over a ``3^sample_q`` midpoint
    grid, and ``C = n sup_error / ||f||_L``.
    """
    alpha = chacon_alpha()
    table = enumerate_factors(alpha, n)
    nodes, weights = np.polynomial.legendre.leggauss(gauss)
    coeffs = np.zeros(table.J)
    for k, w in enumerate(table.factors):
        cell = coding_cell(w, stage)
        lo = np.array([float(iv.lo) for iv in cell])
        hi = np.array([float(iv.hi) for iv in cell])
        half = (hi - lo) / 2
        pts = (lo + hi)[:, None] / 2 + half[:, None] * nodes[None, :]
        integral = float(np.sum(half[:, None] * weights[None, :] * f(pts)))
        coeffs[k] = integral / float(cell.total_measure)
    g = CylFunction(alpha, n, coeffs)
    grid = QuadratureGrid(sample_q, n)
    err = 0.0
    for pts, y, codes in grid.blocks(np.arange(n)):
        approx = _values(CodedObservable(g), y, codes, 1)[:, 0]
        err = max(err, float(np.max(np.abs(f(y[:, 0]) - approx))))
    return CylApproximation(g, err, n * err / f.lipschitz_norm, n)


def choose_k(N: int) -> int:
    """k with h_k in [log(N)/4, log(N)/2], else the k with h_k nearest to that window."""
    lg = math.log(N)
    best, dist = 0, math.inf
    for k in range(0, 16):
        h = height(k)
        d = 0.0 if lg / 4 <= h <= lg / 2 else min(abs(h - lg / 4), abs(h - lg / 2))
        if d < dist:
            best, dist = k, d
    return best


def lower_bound_experiment(N: int, k: int | None = None, c: float = 1.0,
                           verify: int = 20, checkpoints: Sequence[int] | None = None) -> ExperimentReport:
    """Lower-bound sum over the empty-intersection times of ``A_k``.

    ``g = 1_{A_k}`` and ``f_N = c sin^2(π x / w)`` on ``A_k`` (w = |A_k|).
    For n in E_k the correlation is exactly ``-∫f ∫g``, so the sum over
    ``E_k ∩ [1, N)`` is ``|E_k ∩ [1, N)| c w^2 / 2``; it is compared with
    ``(N / log^2 N) ||f||_L^{1/2} ||f||_2^{1/2} ||g||_2``.
    Disjointness is re-verified for the first ``verify`` times by exact
    interval arithmetic.
    """
    k = choose_k(N) if k is None else k
    wF = width(k)
    w = float(wF)
    f = raised_cosine_bump(0.0, w, c)
    int_f, int_g = Fraction(c).limit_denominator() * wF / 2, wF
    bump_lhs = math.log(N) * float(int_f)
    bump_rhs = (f.lipschitz + f.sup_norm) / 100
    bump_ok = bump_lhs >= bump_rhs
    E = empty_intersection_times(k, max(N - 1, 1))
    E = [n for n in E if n < N]
    term = abs(int_f * int_g)
    A = IntervalSet((base_interval(k),))
    verified = []
    for n in E[:verify]:
        img = map_interval_set(A, n)
        verified.append(img.intersect(A).total_measure == 0)
    checkpoints = sorted(set(checkpoints or [3**i for i in range(1, 40) if 3**i < N] + [N]))
    rows = []
    f_norm = math.sqrt(f.lipschitz_norm) * math.sqrt(f.l2) * math.sqrt(w)
    arr = np.array(E, dtype=np.int64)
    for Np in checkpoints:
        cnt = int(np.searchsorted(arr, Np))
        total = cnt * float(term)
        denom = Np / math.log(Np) ** 2 * f_norm if Np > 1 else math.inf
        rows.append((Np, cnt, total, total / denom))
    rep = ExperimentReport("weakmix_lower", {"N": N, "k": k, "c": c, "verify": verify}, rows,
                           columns=("N", "E_count", "sum", "ratio"))
    rep.fit("ratio", rows[-1][3])
    rep.flags["bump_condition"] = bump_ok
    rep.flags["disjointness_verified"] = all(verified)
    rep.flags["feasible_k"] = math.log(N) / 4 <= height(k) <= math.log(N) / 2
    rep.extra.update({"term_exact": f"{term.numerator}/{term.denominator}", "bump_lhs": bump_lhs,
                      "bump_rhs": bump_rhs, "E_head": [int(n) for n in E[:20]], "h_k": height(k)})
    if not bump_ok:
        rep.extra["warning"] = str(BumpConditionFailed(f"log N |∫f| = {bump_lhs} < {bump_rhs}"))
    return rep


@dataclass
class ExceptionalSet:
    J: np.ndarray
    b: np.ndarray
    tau: np.ndarray
    density: dict[int, float] = field(default_factory=dict)
    guarantee: dict[int, bool] = field(default_factory=dict)


def decreasing_envelope(means: np.ndarray) -> np.ndarray:
    """Smallest non-increasing sequence lying above ``means``."""
    return np.maximum.accumulate(means[::-1])[::-1]


def exceptional_set(a_series, b_N=None, tau_rule: Callable[[np.ndarray], np.ndarray] | None = None,
                    N_list: Sequence[int] | None = None, rtol: float = 1e-12) -> ExceptionalSet:
    """``J = {n : a_n > τ_{n+1}}`` with ``τ_N = sqrt(b_N)`` by default.

    ``b_N`` (indexed by N >= 1, a callable or array) must dominate the Cesàro
    means ``N^{-1} sum_{j<N} a_j`` and be non-increasing; by default it is the
    decreasing envelope of those means.  Markov's inequality then gives
    ``|J ∩ [0, N)| / N <= sqrt(b_N)``, checked for every N in ``N_list``.
    """
    a = np.asarray(a_series, dtype=float)
    if np.any(a < 0):
        raise ValueError("a_n must be non-negative")
    L = len(a)
    Ns = np.arange(1, L + 1)
    means = np.cumsum(a) / Ns
    if b_N is None:
        b = decreasing_envelope(means)
    elif callable(b_N):
        b = np.asarray([b_N(int(N)) for N in Ns], dtype=float)
    else:
        b = np.asarray(b_N, dtype=float)[:L]
    if np.any(means > b * (1 + rtol) + 1e-300):
        bad = int(np.flatnonzero(means > b * (1 + rtol))[0]) + 1
        raise CesaroBoundViolated(f"Cesaro mean {means[bad - 1]} exceeds b_N = {b[bad - 1]} at N={bad}")
    if np.any(np.diff(b) > rtol * np.abs(b[1:])):
        raise CesaroBoundViolated("b_N must be non-increasing")
    tau = np.sqrt(b) if tau_rule is None else np.asarray(tau_rule(b), dtype=float)
    inJ = a > tau
    J = np.flatnonzero(inJ)
    counts = np.cumsum(inJ)
    N_list = sorted(N_list) if N_list is not None else [int(3**i) for i in range(1, 40) if 3**i <= L]
    out = ExceptionalSet(J, b, tau)
    for N in N_list:
        dens = counts[N - 1] / N
        out.density[N] = float(dens)
        out.guarantee[N] = bool(dens <= math.sqrt(b[N - 1]) * (1 + 1e-12))
    return out
