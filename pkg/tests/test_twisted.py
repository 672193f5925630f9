import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakmix_lab.errors import DepthTooShallow, NoReturnWords, WordTooShort
from weakmix_lab.substitution import (
    apply_power,
    base_level,
    chacon_beta,
    enumerate_factors,
    fixed_point_prefix,
)
from weakmix_lab.twisted import (
    CylFunction,
    Segment,
    boundary_H,
    build_twisted_matrix,
    corollary_growth_check,
    cosine_gap_holds,
    error_vector,
    int_dist,
    matrix_product,
    phi_concat,
    phi_cyl,
    phi_f,
    pi_direct,
    pi_recursive,
    veech_product_check,
    window_index,
    xhat_lattice_bound,
)

BETA = chacon_beta()
U = fixed_point_prefix(BETA, "0", 20000)
S = BETA.matrix


def brute_phi(v, u, omega):
    """Direct definition: sum over window starts j with v[j:j+n] == u."""
    n = len(u)
    return sum(cmath.exp(-2j * math.pi * omega * j) for j in range(len(v) - n + 1) if v[j:j + n] == u)


def test_int_dist_examples():
    assert int_dist([0.4]) == pytest.approx(0.4)
    assert int_dist([1.9]) == pytest.approx(0.1)
    assert int_dist([0.4, 1.9, 3.0]) == pytest.approx(0.4)


def test_phi_cyl_examples():
    assert phi_cyl("0012", "0", 0) == pytest.approx(2)
    assert abs(phi_cyl("0012", "0", 0.5)) < 1e-15
    assert phi_cyl("0012001212012", "12", 0) == pytest.approx(4)
    with pytest.raises(WordTooShort):
        phi_cyl("0", "00", 0.1)


def test_boundary_examples():
    assert boundary_H("00", "12", 0.0, 2, "01") == pytest.approx(1)
    for w in (0.0, 0.3, 0.77):
        assert boundary_H("00", "12", w, 2, "12") == 0
        assert boundary_H("0012", "012", w, 1, "0") == 0


def test_phi_concat_examples():
    assert phi_concat("00", "12", 0.0, 1, "0") == pytest.approx(2)
    v, w = "001200", "1212012"
    for u in enumerate_factors(BETA, 2).factors:
        total = phi_cyl(v, u, 0) + phi_cyl(w, u, 0) + boundary_H(v, w, 0, 2, u)
        assert phi_concat(v, w, 0.0, 2, u) == pytest.approx(total)


@st.composite
def cocycle_case(draw):
    n = draw(st.integers(1, 4))
    a = draw(st.integers(0, 15000))
    lv = draw(st.integers(n, 60))
    lw = draw(st.integers(n, 60))
    v = U[a:a + lv]
    w = U[a + lv:a + lv + lw]
    k = draw(st.integers(0, 3 * n))
    table = enumerate_factors(BETA, n)
    omega = draw(st.floats(0, 1, allow_nan=False))
    return v, w, n, table.factors[k % table.J], omega


@settings(max_examples=300, deadline=None)
@given(cocycle_case())
def test_cocycle_identity(case):
    v, w, n, u, omega = case
    assert abs(phi_concat(v, w, omega, n, u) - phi_cyl(v + w, u, omega)) <= 1e-12
    assert abs(phi_cyl(v + w, u, omega) - brute_phi(v + w, u, omega)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 5000), st.integers(1, 80), st.integers(1, 80),
       st.floats(0, 1, allow_nan=False))
def test_segment_join_matches_direct(n, a, l1, l2, omega):
    table = enumerate_factors(BETA, n)
    v, w = U[a:a + l1], U[a + l1:a + l1 + l2]
    joined = Segment.of_word(v, table, omega).join(Segment.of_word(w, table, omega), table, omega)
    direct = Segment.of_word(v + w, table, omega)
    assert np.max(np.abs(joined.phi - direct.phi)) <= 1e-11
    assert (joined.head, joined.tail, joined.length) == (direct.head, direct.tail, direct.length)


def test_window_index_short_and_long_ranks():
    for n in (3, 9):
        table = enumerate_factors(BETA, n)
        idx = window_index(U[:500], table)
        assert [table.factors[i] for i in idx] == [U[j:j + n] for j in range(500 - n + 1)]


def test_phi_f_examples():
    ind = CylFunction.indicator(BETA, "12")
    v = U[:300]
    assert phi_f(v, 0.37, ind) == pytest.approx(phi_cyl(v, "12", 0.37))
    zero = CylFunction(BETA, 3, np.zeros(enumerate_factors(BETA, 3).J))
    assert phi_f(v, 0.2, zero) == 0
    rng = np.random.default_rng(5)
    f = CylFunction(BETA, 3, rng.normal(size=enumerate_factors(BETA, 3).J))
    birkhoff = sum(f(v[j:]) for j in range(len(v) - 2))
    assert phi_f(v, 0.0, f) == pytest.approx(birkhoff)
    assert abs(phi_f(v, 0.41, f)) <= f.sup_norm * (len(v) - 3 + 1) + 1e-9


def test_cyl_function_norms():
    f = CylFunction.from_mapping(BETA, 1, {"0": 1.0, "1": -1.0, "2": 0.0})
    assert f.is_zero_mean
    assert f.sup_norm == 1.0
    assert f.l2_norm == pytest.approx(math.sqrt(2 / 3), abs=1e-9)
    g = CylFunction.indicator(BETA, "00").centered()
    assert abs(g.mean) < 1e-9


def test_twisted_matrix_examples():
    for m in (1, 2, 5):
        assert np.array_equal(build_twisted_matrix(BETA, m, 0.0).entries.real, S.T)
    M = build_twisted_matrix(BETA, 2, 1 / 8).entries
    assert abs(M[0, 0]) < 1e-15
    w = 0.31
    assert M.shape == (3, 3)
    assert build_twisted_matrix(BETA, 2, w).entries[0, 0] == pytest.approx(1 + cmath.exp(-2j * math.pi * w * 4))


def test_twisted_matrix_entrywise_bound():
    for m in range(1, 8):
        for w in np.arange(1000) / 1000:
            assert np.all(np.abs(build_twisted_matrix(BETA, m, w).entries) <= S.T + 1e-12)


def test_pi_direct_properties():
    for m in range(1, 8):
        n = 2
        if min(BETA.lengths(m)) < n:
            continue
        P = pi_direct(BETA, m, n, 0.0).columns
        table = enumerate_factors(BETA, n)
        for b, letter in enumerate("012"):
            v = apply_power(BETA, letter, m)
            counts = [sum(1 for j in range(len(v) - 1) if v[j:j + 2] == u) for u in table.factors]
            assert np.allclose(P[b].real, counts)
            assert P[b].real.sum() == len(v) - n + 1
        assert np.all(np.abs(pi_direct(BETA, m, n, 0.3).columns) <= np.array(BETA.lengths(m))[:, None] - n + 1 + 1e-9)


def test_pi_direct_depth_precondition():
    n = 5
    m0 = base_level(BETA, n)
    pi_direct(BETA, m0, n, 0.1)
    with pytest.raises(DepthTooShallow):
        pi_direct(BETA, m0 - 1, n, 0.1)
    with pytest.raises(DepthTooShallow):
        pi_recursive(BETA, m0 - 1, n, 0.1)


def test_pi_recursive_example_and_base_case():
    a = pi_recursive(BETA, 5, 2, 0.3).columns
    b = pi_direct(BETA, 5, 2, 0.3).columns
    assert np.max(np.abs(a - b)) <= 1e-9
    m0 = base_level(BETA, 3)
    assert np.array_equal(pi_recursive(BETA, m0, 3, 0.2).columns, pi_direct(BETA, m0, 3, 0.2).columns)


def test_seam_vector_bound():
    for n in (2, 3, 5):
        for m in range(2, 7):
            for w in (0.0, 0.17, 0.5):
                E = error_vector(BETA, m, n, w)
                assert np.max(np.abs(E)) <= BETA.L_max * (n - 1)


def test_xhat_examples():
    assert BETA.lengths(2) == [13, 5, 9]
    r = xhat_lattice_bound(4, 3)
    assert r["dist"] == 0 and r["ok"]
    for k in (0, 7, 20):
        for i in range(0, 1000, 37):
            assert xhat_lattice_bound(k, i / 1000)["ok"]


def test_cosine_gap_grid():
    t = np.arange(10**4) / 10**4
    assert cosine_gap_holds(t).all()


def test_veech_trivial_frequency():
    r = veech_product_check(BETA, 2, 8, 0.0)
    lens = np.array(BETA.lengths(6), dtype=float)
    assert np.allclose(r.lhs, lens) and np.allclose(r.rhs, lens)


def test_veech_strict_at_half():
    lhs = np.abs(matrix_product(BETA, 3, 10, 0.5) @ np.ones(3))
    assert np.all(lhs < np.array(BETA.lengths(8)))


def test_veech_rejects_non_return_words():
    with pytest.raises(NoReturnWords):
        veech_product_check(BETA, 2, 5, 0.3, return_words=["01201"])


def test_veech_bound_after_second_step():
    # from m = n + 2 on, every tested frequency has a positive constant
    for w in np.arange(1, 10) / 10:
        r = veech_product_check(BETA, 2, 12, float(w), m_min=4)
        assert r.c_fit > 0
        assert np.all(np.abs(matrix_product(BETA, 3, 12, float(w)) @ np.ones(3)) <= r.rhs + 1e-9)


def test_growth_fit_at_trivial_frequency():
    fit = corollary_growth_check(0.0, [3**4, 3**5, 3**6])
    assert all(v <= fit.C_bound * (N + m * n) + 1e-9 for v, N, m, n in zip(fit.max_abs, fit.N, fit.m, fit.n))
