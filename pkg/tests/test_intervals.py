from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from weakmix_lab.intervals import IntervalSet, RationalInterval

DEN = 81


@st.composite
def interval_sets(draw):
    ends = draw(st.lists(st.integers(0, DEN), min_size=0, max_size=10, unique=True))
    ends.sort()
    pairs = [(Fraction(a, DEN), Fraction(b, DEN)) for a, b in zip(ends[::2], ends[1::2])]
    return IntervalSet.of(*pairs)


def members(s: IntervalSet) -> set[int]:
    """Indices of the grid midpoints (2i+1)/(2 DEN) lying in s."""
    return {i for i in range(DEN) if Fraction(2 * i + 1, 2 * DEN) in s}


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        RationalInterval(Fraction(1, 3), Fraction(1, 3))


def test_normalization_merges_touching_pieces():
    s = IntervalSet.of((0, Fraction(1, 3)), (Fraction(1, 3), Fraction(1, 2)), (Fraction(2, 3), 1))
    assert len(s) == 2
    assert s.total_measure == Fraction(5, 6)


def test_half_open_membership():
    s = IntervalSet.of((0, Fraction(2, 3)))
    assert 0 in s and Fraction(2, 3) not in s


@settings(max_examples=300, deadline=None)
@given(interval_sets(), interval_sets())
def test_set_operations_match_grid_oracle(a, b):
    ma, mb = members(a), members(b)
    assert members(a.union(b)) == ma | mb
    assert members(a.intersect(b)) == ma & mb
    assert members(a.difference(b)) == ma - mb
    assert a.intersect(b).total_measure + a.difference(b).total_measure == a.total_measure


@settings(max_examples=200, deadline=None)
@given(interval_sets())
def test_normalized_and_json_round_trip(s):
    ivs = s.intervals
    assert all(x.hi < y.lo for x, y in zip(ivs, ivs[1:]))
    assert s.total_measure == sum((iv.length for iv in ivs), Fraction(0))
    assert IntervalSet.from_json(s.to_json()) == s


def test_json_layout():
    s = IntervalSet.of((0, Fraction(2, 9)))
    assert s.to_json() == "[[0, 0, 2, 2]]"
