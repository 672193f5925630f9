from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from weakmix_lab.chacon import (
    apply_map,
    base_interval,
    build_stage,
    code_orbit,
    coding_cell,
    empty_intersection_times,
    height,
    map_interval_set,
    orbit,
    tower_word,
    width,
)
from weakmix_lab.errors import EmptyCell, StageCapExceeded, UndefinedPoint
from weakmix_lab.intervals import IntervalSet, RationalInterval
from weakmix_lab.substitution import chacon_alpha, enumerate_factors, factor_frequency, fixed_point_prefix

F = Fraction
ALPHA = chacon_alpha()


def cap_residue(n):
    """At most one stage-20 sliver per level within |n| of a tower top."""
    return (abs(n) + 1) * width(20)


def test_stage_one_by_hand():
    tower, T = build_stage(1)
    assert tower.levels == [RationalInterval(0, F(2, 9)), RationalInterval(F(2, 9), F(4, 9)),
                            RationalInterval(F(2, 3), F(8, 9)), RationalInterval(F(4, 9), F(2, 3))]
    assert [off for _, off in T.pieces] == [F(2, 9), F(4, 9), F(-2, 9)]


def test_stage_zero_and_three():
    tower, T = build_stage(0)
    assert tower.levels == [RationalInterval(0, F(2, 3))]
    assert list(T.pieces) == []
    tower3, _ = build_stage(3)
    assert (tower3.height, tower3.width, tower3.total_measure) == (40, F(2, 81), 1 - F(1, 81))


def test_stage_cap():
    with pytest.raises(StageCapExceeded):
        build_stage(21)


@pytest.mark.parametrize("k", range(0, 13))
def test_tower_closed_forms(k):
    tower, _ = build_stage(k)
    assert tower.height == (3 ** (k + 1) - 1) // 2
    assert tower.width == F(2, 3 ** (k + 1))
    assert tower.total_measure == 1 - F(1, 3 ** (k + 1))
    lo = sorted(int(a) for a in tower.lo_numerators)
    # pairwise disjoint levels of width 2 over a common denominator
    assert all(b - a >= 2 for a, b in zip(lo, lo[1:]))
    assert tower.levels[0] == base_interval(k)


@pytest.mark.parametrize("n,m", [(1, 2), (1, 5), (2, 6), (3, 8), (4, 12)])
def test_stage_consistency(n, m):
    _, Tn = build_stage(n)
    _, Tm = build_stage(m)
    for dom, off in Tn.pieces:
        for x in (dom.lo, dom.lo + dom.length / 3, dom.hi - dom.length / 7):
            assert Tm(x) == x + off == Tn(x)


def test_apply_map_examples():
    assert apply_map(F(0)) == F(2, 9)
    assert apply_map(F(1, 4)) == F(25, 36)
    assert apply_map(F(3, 4)) == F(19, 36)


def test_apply_map_undefined():
    with pytest.raises(UndefinedPoint):
        apply_map(F(1))
    with pytest.raises(UndefinedPoint):
        apply_map(1 - F(1, 3**25))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 3**9 - 1))
def test_inverse_undoes_forward(i):
    x = F(2 * i + 1, 2 * 3**9)
    assert apply_map(apply_map(x), "inverse") == x
    assert apply_map(apply_map(x, "inverse")) == x


def test_code_orbit_examples():
    assert code_orbit(0, 4) == "0010"
    assert code_orbit(0, 13) == "0010001010010"


def test_code_orbit_matches_alpha_fixed_point():
    assert code_orbit(0, 1000) == fixed_point_prefix(ALPHA, "0", 1000)
    assert tower_word(5) == fixed_point_prefix(ALPHA, "0", height(5))


def test_shift_conjugacy_on_grid():
    for i in range(100):
        x = F(2 * (7 * i) + 1, 2 * 3**6)
        assert code_orbit(apply_map(x), 200) == code_orbit(x, 201)[1:]


def test_orbit_agrees_with_repeated_map():
    x = F(5, 17)
    pts = orbit(x, 60)
    y = x
    for p in pts:
        assert p == y
        y = apply_map(y)


def test_map_interval_set_examples():
    s = IntervalSet.of((0, F(2, 9)))
    assert map_interval_set(s, 1) == IntervalSet.of((F(2, 9), F(4, 9)))
    assert map_interval_set(s, 0) == s
    for n in range(1, 51):
        img = map_interval_set(s, n)
        assert img.total_measure + img.unresolved == s.total_measure
        assert img.unresolved <= cap_residue(n)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 200), st.integers(1, 30), st.integers(-100, 100))
def test_measure_preserved_and_invertible(a, length, n):
    s = IntervalSet.of((F(a, 243), F(a + length, 243)))
    img = map_interval_set(s, n)
    assert img.total_measure + img.unresolved == s.total_measure
    back = map_interval_set(img, -n)
    assert back.difference(s).total_measure == 0
    assert s.difference(back).total_measure <= img.unresolved + back.unresolved


def test_image_agrees_with_pointwise_map():
    s = IntervalSet.of((F(1, 27), F(5, 27)), (F(20, 27), F(22, 27)))
    img = map_interval_set(s, 7)
    for i in range(40):
        x = F(1, 27) + F(4 * i + 1, 27 * 40)
        assert orbit(x, 7)[-1] in img


def _oracle_empty_times(k, N):
    A = IntervalSet((base_interval(k),))
    out = []
    for n in range(1, N + 1):
        img = map_interval_set(A, n)
        assert img.unresolved <= cap_residue(n)
        if img.intersect(A).total_measure == 0:
            out.append(n)
    return out


def test_empty_times_example():
    assert empty_intersection_times(1, 4) == [1, 2, 3]


@pytest.mark.parametrize("k,N", [(0, 30), (1, 60), (2, 120), (3, 130)])
def test_empty_times_against_interval_oracle(k, N):
    assert empty_intersection_times(k, N) == _oracle_empty_times(k, N)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_fft_route_matches_exact(k):
    assert (empty_intersection_times(k, 800, method="fft")
            == empty_intersection_times(k, 800, method="exact"))


def test_empty_times_prefix_stable():
    big = empty_intersection_times(2, 500)
    for N in (5, 50, 137, 400):
        assert empty_intersection_times(2, N) == [n for n in big if n <= N]
    assert 0 not in big


def test_coding_cell_examples():
    c = coding_cell("1")
    assert c.total_measure <= F(1, 3) <= c.total_measure + c.unresolved
    assert all(iv.lo >= F(2, 3) for iv in c)
    with pytest.raises(EmptyCell):
        coding_cell("11")


def test_coding_cell_points_have_the_word():
    w = "0010100"
    cell = coding_cell(w)
    for iv in list(cell)[:30]:
        x = iv.lo + iv.length / 2
        assert code_orbit(x, len(w)) == w


def test_coding_cell_measure_matches_frequency():
    for w in ("0010", "0100010", "00100010100"):
        cell = coding_cell(w)
        est = factor_frequency(ALPHA, w)
        m = float(cell.total_measure)
        assert m - est.err_bound <= est.freq <= m + float(cell.unresolved) + est.err_bound


def test_coding_cell_components_are_weakly_lipschitz():
    ratios = []
    for n in (1, 2, 4, 8, 16):
        for w in enumerate_factors(ALPHA, n).factors:
            freq = factor_frequency(ALPHA, w, check_factor=False).freq
            ratios.append(float(max(coding_cell(w).component_lengths())) / freq)
    # fitted C_cell: the geometry gives one level per component
    assert max(ratios) <= 1.0 + 1e-6


def test_width_and_height_helpers():
    assert height(1) == 4 and width(1) == F(2, 9)
