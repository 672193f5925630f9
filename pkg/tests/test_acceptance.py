"""Acceptance criteria, one test each; every test prints a PASS/FAIL line with its runtime.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the lines are also
printed without ``-s``), or as a script: ``python3 tests/test_acceptance.py``.
"""

import math
import random
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from weakmix_lab.chacon import (
    apply_map,
    base_interval,
    build_stage,
    code_orbit,
    empty_intersection_times,
    map_interval_set,
)
from weakmix_lab.intervals import IntervalSet
from weakmix_lab.mixing import exceptional_set, weakmix_average
from weakmix_lab.observables import cosine
from weakmix_lab.spectral import ball_bound_diagnostic, discrepancy, spectral_density
from weakmix_lab.substitution import (
    apply_power,
    base_level,
    chacon_alpha,
    chacon_beta,
    enumerate_factors,
    fixed_point_prefix,
    substitution_matrix,
)
from weakmix_lab.twisted import (
    CylFunction,
    build_twisted_matrix,
    corollary_growth_check,
    matrix_product,
    phi_concat,
    phi_cyl,
    pi_direct,
    pi_recursive,
    veech_product_check,
)

BETA = chacon_beta()
ALPHA = chacon_alpha()
WEAKMIX_N = [3**k for k in range(4, 11)]
_cache: dict = {}


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line past pytest's capture, then assert."""

    def emit(number: int, title: str, ok: bool, start: float, budget: float, detail: str = "") -> None:
        elapsed = time.perf_counter() - start
        ok = ok and elapsed < budget
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title} ({elapsed:.1f}s / {budget:.0f}s) {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def _weakmix_series():
    if "c" not in _cache:
        f = cosine(1)
        _cache["rep"] = weakmix_average(f, f, WEAKMIX_N)
        _cache["c"] = _cache["rep"].extra["_series"]
    return _cache["rep"], _cache["c"]


def test_criterion_01_algebra(report):
    t = time.perf_counter()
    S = substitution_matrix(BETA)
    ok = S.tolist() == [[2, 0, 1], [1, 1, 1], [1, 1, 1]]
    eig = sympy.Matrix(S.tolist()).eigenvals()
    ok &= set(eig) == {0, 1, 3}
    b = np.array([-1, 1, 1])
    ok &= (S @ b).tolist() == b.tolist()
    report(1, "substitution matrix, exact eigenvalues, eigenvector (-1,1,1)", ok, t, 1,
            f"eigenvalues={sorted(eig)}")


def test_criterion_02_lengths(report):
    t = time.perf_counter()
    S = substitution_matrix(BETA).astype(object)
    P = np.identity(3, dtype=object)
    ok = True
    for m in range(21):
        pred = [int(x) for x in np.ones(3, dtype=object).dot(P)]
        if m <= 10:
            ok &= pred == [len(apply_power(BETA, a, m)) for a in "012"]
        ok &= pred[1] + pred[2] - pred[0] == 1
        P = S.dot(P)
    report(2, "expansion lengths equal matrix powers; length identity to m=20", ok, t, 1)


def test_criterion_03_cocycle(report):
    t = time.perf_counter()
    rng = random.Random(2024)
    u = fixed_point_prefix(BETA, "0", 30000)
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(1, 4)
        a = rng.randrange(0, 29000)
        lv, lw = rng.randint(n, 200), rng.randint(n, 200)
        v, w = u[a:a + lv], u[a + lv:a + lv + lw]
        table = enumerate_factors(BETA, n)
        cyl = table.factors[rng.randrange(table.J)]
        omega = rng.random()
        worst = max(worst, abs(phi_concat(v, w, omega, n, cyl) - phi_cyl(v + w, cyl, omega)))
    report(3, "cocycle identity on 1000 random cases", worst <= 1e-12, t, 10, f"max_err={worst:.2e}")


def test_criterion_04_recursion(report):
    t = time.perf_counter()
    worst = 0.0
    for n in range(1, 6):
        for m in range(base_level(BETA, n), 8):
            for omega in np.arange(64) / 64:
                a = pi_recursive(BETA, m, n, float(omega)).columns
                b = pi_direct(BETA, m, n, float(omega)).columns
                worst = max(worst, float(np.max(np.abs(a - b))))
    report(4, "matrix recursion vs direct evaluation, m<=7, n<=5, 64 frequencies", worst <= 1e-9, t, 120,
            f"max_err={worst:.2e}")


def test_criterion_05_veech_ingredients(report):
    t = time.perf_counter()
    grid = np.arange(10**4) / 10**4
    d = np.abs(grid - np.rint(grid))
    gap = np.abs(1 + np.exp(2j * np.pi * grid))
    ok_gap = bool(np.all(gap[1:] < 2 - d[1:] ** 2 / 2)) and gap[0] <= 2
    St = substitution_matrix(BETA).T
    ok_mat = all(np.all(np.abs(build_twisted_matrix(BETA, m, float(w)).entries) <= St + 1e-12)
                 for m in range(1, 13) for w in grid[::10])
    ok_lat = True
    for k in range(21):
        lens = BETA.lengths(k)
        for i in range(10**4):
            w = Fraction(i, 10**4)
            dist = lambda x: min(x - math.floor(x), math.ceil(x) - x)
            if max(dist(w * L) for L in lens) < dist(w) / 3:
                ok_lat = False
    report(5, "cosine gap, |M| <= S^t, lattice bound ||x_k|| >= ||w||/3", ok_gap and ok_mat and ok_lat, t, 30,
            f"gap={ok_gap} matrix={ok_mat} lattice={ok_lat}")


def test_criterion_06_veech_product(report):
    t = time.perf_counter()
    n = 2
    c_values = {}
    entrywise = True
    for w in [i / 10 for i in range(1, 10)]:
        res = veech_product_check(BETA, n, 12, w)
        c_values[w] = res.c_fit
        dist = min(w, 1 - w)
        for mm in range(n + 1, 13):
            lhs = np.abs(matrix_product(BETA, n + 1, mm, w) @ np.ones(3))
            rhs = (1 - res.c_fit * dist ** 2) ** (mm - n) * np.ones(3) @ np.linalg.matrix_power(
                substitution_matrix(BETA), mm - n)
            entrywise &= bool(np.all(lhs <= rhs + 1e-9))
    c_prime = min(c_values.values())
    fit = corollary_growth_check(0.5, [3**k for k in range(4, 10)])
    ok = c_prime > 0 and entrywise and fit.c2 > 0 and fit.stable
    report(6, "Veech product c' > 0 for m = n+1..12; growth fit c'' > 0 with stable C_S", ok, t, 300,
            f"c'={c_prime:.3g} (at w=0.5: {c_values[0.5]:.3g}) entrywise={entrywise} "
            f"c''={fit.c2:.3g} C_S={fit.C_S:.3g} stable={fit.stable}")


def test_criterion_07_tower_conjugacy(report):
    t = time.perf_counter()
    ok_measure = all(build_stage(k)[0].total_measure == 1 - Fraction(1, 3 ** (k + 1)) for k in range(13))
    ok_code = code_orbit(0, 1000) == fixed_point_prefix(ALPHA, "0", 1000)
    ok_shift = True
    for i in range(100):
        x = Fraction(2 * (7 * i) + 1, 2 * 3**6)
        ok_shift &= code_orbit(apply_map(x), 200) == code_orbit(x, 201)[1:]
    report(7, "tower measures, coding of 0, shift conjugacy", ok_measure and ok_code and ok_shift, t, 60,
            f"measure={ok_measure} coding={ok_code} shift={ok_shift}")


def test_criterion_08_lower_bound_machinery(report):
    t = time.perf_counter()
    ok_example = empty_intersection_times(1, 4) == [1, 2, 3]
    ok_disjoint = True
    ok_monotone = True
    for k in range(5):
        E = empty_intersection_times(k, 2000)
        A = IntervalSet((base_interval(k),))
        for n in E[:40]:
            # for f supported on A, <f o C^n, 1_A> is an integral over C^n(A) ∩ A
            ok_disjoint &= map_interval_set(A, n).intersect(A).total_measure == 0
        counts = [sum(1 for n in E if n <= N) for N in range(1, 2001)]
        ok_monotone &= all(a <= b for a, b in zip(counts, counts[1:]))
        for N in (1, 10, 250, 999, 2000):
            ok_monotone &= len(empty_intersection_times(k, N)) == counts[N - 1]
    report(8, "E_1 example, exact disjointness, monotone counts for k<=4, N<=2000",
            ok_example and ok_disjoint and ok_monotone, t, 120,
            f"example={ok_example} disjoint={ok_disjoint} monotone={ok_monotone}")


def test_criterion_09_discrepancy(report):
    t = time.perf_counter()
    rep = discrepancy(BETA, [3**k for k in range(5, 11)], n_max=5)
    ok = rep.flags["bounded"]
    report(9, "discrepancy over log^2 bounded (top half <= 2x bottom half)", ok, t, 120,
            f"C={rep.fitted_constants['C']['value']:.3g} top={rep.extra['top_half_max']:.3g} "
            f"bottom={rep.extra['bottom_half_max']:.3g}")


def test_criterion_10_spectral(report):
    t = time.perf_counter()
    f = CylFunction.from_mapping(BETA, 2, {"00": 1.0, "01": -1.0, "12": 0.5}).centered()
    worst = 0.0
    for N in [1, 2, 3, 8, 27, 64, 128, 243, 400, 512]:
        g = spectral_density(f, N, 2 * N)
        worst = max(worst, abs(g.mean - f.l2_norm ** 2))
    diag = ball_bound_diagnostic(f, 0.25, 64)
    ok = worst <= 1e-10 and math.isfinite(diag["ratio"])
    report(10, "Parseval grid mean of G_N for N <= 512; ball diagnostic emitted", ok, t, 120,
            f"max_err={worst:.2e} ball_ratio={diag['ratio']:.3g}")


def test_criterion_11_weakmix_decay(report):
    t = time.perf_counter()
    rep, _ = _weakmix_series()
    V = dict((N, v) for N, v, _ in rep.series)
    K_C = rep.fitted_constants["K_C"]["value"]
    ok = V[3**10] < V[3**4] and math.isfinite(K_C)
    report(11, "weak-mixing average at 3^10 below 3^4; K_C finite", ok, t, 600,
            f"V(81)={V[81]:.4g} V(59049)={V[3**10]:.4g} K_C={K_C:.3g}")


def test_criterion_12_exceptional_set(report):
    # the shared series is built (and timed) by criterion 11
    _, c = _weakmix_series()
    t = time.perf_counter()
    ex = exceptional_set(c ** 2, N_list=WEAKMIX_N)
    ok_series = all(ex.guarantee.values()) and all(
        ex.density[N] <= math.sqrt(ex.b[N - 1]) for N in WEAKMIX_N)
    a = np.zeros(10**4)
    a[:100] = 1.0
    syn = exceptional_set(a, lambda N: min(1.0, 100 / N), N_list=[10, 100, 1000, 10**4])
    ok_syn = all(syn.guarantee.values()) and all(
        syn.density[N] <= math.sqrt(min(1.0, 100 / N)) for N in syn.density)
    report(12, "Markov density guarantee on the weak-mixing series and synthetic data",
            ok_series and ok_syn, t, 30, f"series={ok_series} synthetic={ok_syn}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
