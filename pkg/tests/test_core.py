from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughham.core import (
    DomainError,
    Grid,
    MultiIndex,
    Trajectory,
    index_stats,
    multi_indices_up_to,
    ordered_decompositions,
    unit_sequences,
)


def entries(idx):
    return [a.entries for a in idx]


def test_enumeration_small_cases():
    assert entries(multi_indices_up_to(1, 1)) == [(1, 0), (0, 1)]
    assert entries(multi_indices_up_to(2, 1)) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    two = multi_indices_up_to(2, 2)
    assert len(two) == 9
    assert sum(a.order == 2 for a in two) == 6


def test_enumeration_snapshot_d2_cap2():
    # frozen order: grade first, then descending lexicographic entries
    assert [str(a) for a in multi_indices_up_to(2, 2)] == [
        "1,0,0", "0,1,0", "0,0,1",
        "2,0,0", "1,1,0", "1,0,1", "0,2,0", "0,1,1", "0,0,2",
    ]


@pytest.mark.parametrize("d,cap", [(0, 1), (1, 0)])
def test_enumeration_rejects_bad_arguments(d, cap):
    with pytest.raises(DomainError):
        multi_indices_up_to(d, cap)


@given(st.integers(1, 3), st.integers(1, 4))
def test_enumeration_unique_and_graded(d, cap):
    idx = multi_indices_up_to(d, cap)
    assert len(set(idx)) == len(idx)
    orders = [a.order for a in idx]
    assert orders == sorted(orders)
    assert all(1 <= o <= cap for o in orders)
    from math import comb

    assert len(idx) == comb(d + 1 + cap, cap) - 1


def test_index_stats_examples():
    assert index_stats(MultiIndex((1, 0, 0))) == (1, 1, 0)
    assert index_stats(MultiIndex((0, 1, 1))) == (2, 1, 1)
    assert index_stats(MultiIndex((2, 0, 1))) == (3, Fraction(5, 2), 0)
    with pytest.raises(DomainError):
        index_stats(MultiIndex((0, 0, 0)))


def test_theta_is_exact_half_integer():
    theta = MultiIndex((0, 1, 0)).theta
    assert isinstance(theta, Fraction) and theta == Fraction(1, 2)


def test_parse_and_str_roundtrip():
    a = MultiIndex.parse("0,1,1")
    assert a == MultiIndex((0, 1, 1)) and str(a) == "0,1,1"
    with pytest.raises(DomainError):
        MultiIndex((1, -1))


def test_monomial_broadcasts():
    row = np.array([[0.5, 0.25], [2.0, 3.0], [1.0, -1.0]])
    np.testing.assert_allclose(MultiIndex((1, 2, 1)).monomial(row), [2.0, -2.25])


@given(st.lists(st.integers(0, 2), min_size=3, max_size=3).filter(lambda e: 2 <= sum(e) <= 4))
def test_decompositions_sum_and_stay_in_enumeration(ent):
    alpha = MultiIndex(tuple(ent))
    listed = set(multi_indices_up_to(2, alpha.order))
    for parts in range(2, alpha.order + 1):
        for dec in ordered_decompositions(alpha, parts):
            assert len(dec) == parts
            assert all(p in listed for p in dec)
            total = dec[0]
            for p in dec[1:]:
                total = total + p
            assert total == alpha


def test_decomposition_counts():
    # (1,1): ordered pairs ((1,0),(0,1)) and ((0,1),(1,0))
    assert len(list(ordered_decompositions(MultiIndex((1, 1)), 2))) == 2
    # (0,2,0) into 2 parts: only ((0,1,0),(0,1,0))
    assert len(list(ordered_decompositions(MultiIndex((0, 2, 0)), 2))) == 1
    assert unit_sequences(MultiIndex((1, 0, 2))) == [(0, 2, 2), (2, 0, 2), (2, 2, 0)]


def test_grid_and_trajectory():
    g = Grid(1.0, 4)
    assert g.h == 0.25
    t = g.times
    assert t[-1] == 1.0 and np.all(np.diff(t) > 0)
    assert g.coarsen(2) == Grid(1.0, 2)
    with pytest.raises(DomainError):
        g.coarsen(3)
    with pytest.raises(DomainError):
        Grid(1.0, 0)
    with pytest.raises(DomainError):
        Trajectory(g, np.zeros((4, 2)))
    assert Trajectory(g, np.arange(10.0).reshape(5, 2)).final.tolist() == [8.0, 9.0]
