"""Discrepancy, twisted Birkhoff sums and the spectral density G_N.

Twisted sums use the convention ``S_N^x(f, ω) = sum_{k<N} e^{+2πikω} f(T^k x)``,
so for a real cylindrical f along a word v, ``S_N = conj(phi_f(v, ω))``.

``G_N(f, ω) = N^{-1} ∫ |S_N^x(f, ω)|^2 dμ(x)`` is available in two forms:
the autocorrelation form ``sum_{|k|<N} (1 - |k|/N) ρ(k) e^{2πikω}`` and an
orbit-sampled average over starting points along the fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .chacon import orbit
from .observables import IntervalObservable
from .report import ExperimentReport
from .substitution import (
    SubstitutionSystem,
    enumerate_factors,
    fixed_point_prefix,
    frequency_table,
    pf_theta,
)
from .twisted import CylFunction, _phases, window_index

AUTOCORR_LENGTH = 3**12


@lru_cache(maxsize=16)
def fixed_point(subst: SubstitutionSystem, L: int) -> str:
    return fixed_point_prefix(subst, subst.alphabet[0], L)


def _value_sequence(f: CylFunction, L: int) -> np.ndarray:
    """``f(T^j u)`` for j < L along the fixed point u."""
    text = fixed_point(f.subst, L + f.n - 1)
    return f.coeffs[window_index(text, f.table)]


def discrepancy(subst: SubstitutionSystem, N_list, n_max: int, n_starts: int = 256,
                seed: int = 0, start_range: int | None = None) -> ExperimentReport:
    """``D_N = max_x max_{|w| <= n_max} |#{k < N : T^k x in [w]} - N μ([w])|``.

    x ranges over the fixed point itself and ``n_starts - 1`` shifts of it
    drawn with the given seed from ``[0, start_range)``.  The fitted
    constant is ``C = max_N D_N / log_θ(N)^2``.
    """
    N_list = sorted(int(N) for N in N_list)
    theta = pf_theta(subst)
    start_range = start_range or 2 * N_list[-1]
    rng = np.random.default_rng(seed)
    starts = np.unique(np.concatenate([[0], rng.integers(0, start_range, n_starts - 1)]))
    L = int(starts.max()) + N_list[-1] + n_max
    text = fixed_point(subst, L)
    D = np.zeros(len(N_list))
    for n in range(1, n_max + 1):
        table = enumerate_factors(subst, n)
        mu = frequency_table(subst, n)
        idx = window_index(text, table)
        for k in range(table.J):
            cum = np.concatenate([[0], np.cumsum(idx == k)])
            for t, N in enumerate(N_list):
                counts = cum[starts + N] - cum[starts]
                D[t] = max(D[t], float(np.max(np.abs(counts - N * mu[k]))))
    ratios = [d / math.log(N, theta) ** 2 for d, N in zip(D, N_list)]
    rep = ExperimentReport(
        "discrepancy",
        {"subst": subst.name, "N_list": N_list, "n_max": n_max, "n_starts": int(len(starts)),
         "seed": seed, "start_range": start_range},
        [(N, float(d), float(r)) for N, d, r in zip(N_list, D, ratios)],
        columns=("N", "D_N", "D_N_over_log2"),
    )
    rep.fit("C", max(ratios))
    half = len(ratios) // 2
    if half:
        lo, hi = max(ratios[:half]), max(ratios[half:])
        rep.extra["bottom_half_max"] = lo
        rep.extra["top_half_max"] = hi
        rep.flags["bounded"] = hi <= 2 * lo
    return rep


def twisted_birkhoff(x_source, f, N: int, omega: float, max_stage: int = 20) -> complex:
    """``sum_{k<N} e^{2πikω} f(T^k x)``.

    For a ``CylFunction`` the source is a symbol word (at least N + n - 1
    long) or an integer start position along the fixed point.  For an
    ``IntervalObservable`` it is a point of [0, 1) and the orbit is exact.
    """
    phases = np.conj(_phases(np.arange(N), omega))
    if isinstance(f, CylFunction):
        if isinstance(x_source, (int, np.integer)):
            text = fixed_point(f.subst, int(x_source) + N + f.n - 1)[int(x_source):]
        else:
            text = x_source
        text = text[:N + f.n - 1]
        if len(text) < N + f.n - 1:
            raise ValueError("source word too short")
        vals = f.coeffs[window_index(text, f.table)]
    elif isinstance(f, IntervalObservable):
        pts = orbit(Fraction(x_source), N - 1, max_stage)
        vals = f(np.array([float(p) for p in pts]))
    else:
        raise TypeError("f must be a CylFunction or IntervalObservable")
    return complex(np.sum(phases * vals))


@lru_cache(maxsize=64)
def _autocorr_cached(f_key, n_lags: int, L: int):
    f = _AC_REGISTRY[f_key]
    a = _value_sequence(f, L)
    size = 1 << int(math.ceil(math.log2(2 * L)))
    F = np.fft.rfft(a, size)
    r = np.fft.irfft(F * np.conj(F), size)[:n_lags] / L
    exact0 = float(f.coeffs ** 2 @ f.measures)
    # rescaling keeps the sequence positive definite and makes ρ(0) exact
    r = r * (exact0 / r[0]) if r[0] > 0 else r
    r[0] = exact0
    r.setflags(write=False)
    return r


_AC_REGISTRY: dict = {}


def autocorrelation(f: CylFunction, n_lags: int, L: int = AUTOCORR_LENGTH) -> np.ndarray:
    """``ρ(k) = <f o T^k, f>`` for k < n_lags.

    ``ρ(0) = sum_k r_k^2 μ([k, n])`` from the frequency table; the other lags
    come from an FFT along a length-L prefix of the fixed point, rescaled by
    the same factor that takes the prefix estimate of ρ(0) to the exact one.
    """
    key = (f.subst, f.n, f.coeffs.tobytes())
    _AC_REGISTRY[key] = f
    L = max(L, 4 * n_lags)
    return _autocorr_cached(key, n_lags, L)


@dataclass(frozen=True)
class SpectralGrid:
    M: int
    N: int
    omegas: np.ndarray
    values: np.ndarray
    form: str

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def fejer_density(rho: np.ndarray, N: int, omegas) -> np.ndarray:
    """``sum_{|k|<N} (1 - |k|/N) ρ(k) e^{2πikω}`` evaluated at arbitrary ω."""
    k = np.arange(1, N)
    w = (1 - k / N) * rho[1:N]
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    return rho[0] + 2 * np.cos(2 * np.pi * np.outer(om, k)) @ w


def spectral_density(f: CylFunction, N: int, M: int | None = None, form: str = "autocorrelation",
                     n_starts: int = 64, seed: int = 0, L: int = AUTOCORR_LENGTH) -> SpectralGrid:
    """``G_N(f, i/M)`` for i < M (M defaults to 2N)."""
    M = 2 * N if M is None else M
    if M < 2 * N:
        raise ValueError("need M >= 2N for exact trigonometric quadrature")
    omegas = np.arange(M) / M
    if form == "autocorrelation":
        rho = autocorrelation(f, N, L)
        c = np.zeros(M)
        c[:N] = (1 - np.arange(N) / N) * rho
        vals = 2 * np.real(np.fft.ifft(c) * M) - rho[0]
    elif form == "orbit":
        rng = np.random.default_rng(seed)
        starts = rng.integers(0, L, n_starts)
        a = _value_sequence(f, L + N)
        segs = np.stack([a[s:s + N] for s in starts])
        S = np.fft.ifft(segs, M, axis=1) * M
        vals = np.mean(np.abs(S) ** 2, axis=0) / N
    else:
        raise ValueError(f"unknown form {form!r}")
    return SpectralGrid(M, N, omegas, vals, form)


def ball_bound_diagnostic(f: CylFunction, omega: float, N: int, M_fine: int | None = None) -> dict:
    """Compare a proxy for ``σ_f(B(ω, 1/(2N)))`` with ``π^2/(4N) G_N(f, ω)``.

    The proxy integrates ``G_{M_fine}`` (default ``M_fine = 32 N``) over the
    ball on a uniform grid of ``2 M_fine`` points.
    """
    M_fine = 32 * N if M_fine is None else M_fine
    grid = spectral_density(f, M_fine, 2 * M_fine)
    r = 1 / (2 * N)
    d = np.abs(grid.omegas - omega)
    d = np.minimum(d % 1, 1 - d % 1)
    proxy = float(np.sum(grid.values[d <= r + 1e-15]) / grid.M)
    gN = float(fejer_density(autocorrelation(f, N), N, omega)[0])
    rhs = np.pi ** 2 / (4 * N) * gN
    return {"omega": omega, "N": N, "M_fine": M_fine, "proxy_mass": proxy, "G_N": gN,
            "bound": rhs, "ratio": proxy / rhs if rhs > 0 else math.inf,
            "total_mass": grid.mean, "l2_sq": float(f.coeffs ** 2 @ f.measures)}


__all__ = [
    "SpectralGrid",
    "autocorrelation",
    "ball_bound_diagnostic",
    "discrepancy",
    "fejer_density",
    "fixed_point",
    "spectral_density",
    "twisted_birkhoff",
]
