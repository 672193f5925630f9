"""Functions on [0, 1) used as observables for the Chacon map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class IntervalObservable:
    """A vectorized function on [0, 1) with known sup norm and Lipschitz constant.

    ``mean`` and ``l2`` are the Lebesgue integral and L² norm (Lebesgue
    measure is the invariant measure of the Chacon map).
    """

    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sup_norm: float
    lipschitz: float
    mean: float
    l2: float
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float))

    @property
    def lipschitz_norm(self) -> float:
        """``||f||_L = ||f||_inf + Lip(f)``."""
        return self.sup_norm + self.lipschitz

    @property
    def zero_mean(self) -> bool:
        return abs(self.mean) <= 1e-12 * max(1.0, self.sup_norm)

    def check_mean(self, M: int = 3**9) -> float:
        """Midpoint-rule mean, for comparison with the declared one."""
        x = (2 * np.arange(M) + 1) / (2 * M)
        return float(np.mean(self(x)))


def cosine(freq: int = 1) -> IntervalObservable:
    """``cos(2π freq x)``: mean 0, L² norm 1/√2."""
    return IntervalObservable(lambda x: np.cos(2 * np.pi * freq * x), 1.0, 2 * np.pi * freq,
                              0.0, 1 / math.sqrt(2), f"cos(2pi*{freq}x)")


def raised_cosine_bump(lo: float, w: float, c: float = 1.0) -> IntervalObservable:
    """``c sin^2(π(x - lo)/w)`` on ``[lo, lo + w)``, zero elsewhere.

    Integral ``c w / 2``, ``max|f'| = c π / w``, ``||f||_2^2 = 3 c^2 w / 8``.
    """
    def f(x):
        inside = (x >= lo) & (x < lo + w)
        return np.where(inside, c * np.sin(np.pi * (x - lo) / w) ** 2, 0.0)

    return IntervalObservable(f, c, c * np.pi / w, c * w / 2, math.sqrt(3 * c * c * w / 8),
                              f"bump[{lo},{lo + w})")


def indicator(lo: float, hi: float) -> IntervalObservable:
    """``1_[lo, hi)``; not Lipschitz, so the Lipschitz constant is reported as inf."""
    def f(x):
        return ((x >= lo) & (x < hi)).astype(float)

    return IntervalObservable(f, 1.0, math.inf, hi - lo, math.sqrt(hi - lo), f"1[{lo},{hi})")


def centered(f: IntervalObservable) -> IntervalObservable:
    m = f.mean
    return IntervalObservable(lambda x: f(x) - m, f.sup_norm + abs(m), f.lipschitz, 0.0,
                              math.sqrt(max(f.l2 ** 2 - m * m, 0.0)), f"{f.name}-mean")
