import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment

from xprecode.hungarian import assign


def brute(c, maximize=False):
    n = c.shape[0]
    sums = [c[range(n), p].sum() for p in itertools.permutations(range(n))]
    return max(sums) if maximize else min(sums)


def test_small_known():
    c = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    col = assign(c)
    assert c[range(3), col].sum() == 5.0
    assert sorted(col) == [0, 1, 2]


def test_trivial_sizes():
    assert assign(np.zeros((0, 0))).size == 0
    assert list(assign([[3.0]])) == [0]


def test_errors():
    with pytest.raises(ValueError):
        assign(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        assign([[np.inf, 0.0], [0.0, 1.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-100, 100, allow_nan=False))))
def test_matches_brute_force(c):
    for maximize in (False, True):
        col = assign(c, maximize)
        assert sorted(col) == list(range(c.shape[0]))
        assert c[range(c.shape[0]), col].sum() == pytest.approx(brute(c, maximize), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10_000))
def test_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.integers(0, 5, size=(n, n)).astype(float)  # many ties
    r, k = linear_sum_assignment(c)
    assert c[range(n), assign(c)].sum() == pytest.approx(c[r, k].sum())
