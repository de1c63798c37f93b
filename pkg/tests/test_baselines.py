import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from xprecode.baselines import (
    NonConvergenceError,
    discrete_waterfill_mi,
    fixed_point_precoder,
    gaussian_waterfill,
    mercury_waterfill,
    water_level,
)
from xprecode.channel import PairChannel, random_mimo
from xprecode.constellations import make_qam, uniform_alphabet
from xprecode.mi import scalar_mi
from xprecode.pair_opt import optimize_pair

Q4, Q16 = make_qam(4), make_qam(16)


def test_waterfill_equal_gains():
    p2, cap = gaussian_waterfill([0.7] * 4, 10.0)
    assert np.allclose(p2, 0.25)
    assert cap == pytest.approx(4 * math.log2(1 + 0.49 * 10.0 / 4))


def test_waterfill_low_power_single_channel():
    # second channel opens once P_T > 1/l2^2 - 1/l1^2 = 5 - 1.25
    pc = PairChannel.from_beta(2.0)
    p2, _ = gaussian_waterfill([pc.strong, pc.weak], 2.0)
    assert np.array_equal(p2, [1.0, 0.0])
    p2, _ = gaussian_waterfill([pc.strong, pc.weak], 5.0)
    assert p2[1] > 0


def test_waterfill_bisection_oracle():
    g = np.array([0.8, 0.4, 0.4, 0.2])
    P = 10.0
    inv = 1.0 / (g**2 * P)
    mu = brentq(lambda m: np.maximum(0.0, m - inv).sum() - 1.0, 0.0, 10.0, xtol=1e-15)
    p2, cap = gaussian_waterfill(g, P)
    assert np.allclose(p2, np.maximum(0.0, mu - inv), atol=1e-9)
    assert cap == pytest.approx(np.log2(1 + g**2 * p2 * P).sum(), abs=1e-12)


@given(st.lists(st.floats(0.05, 3.0), min_size=1, max_size=16), st.floats(-10.0, 30.0))
def test_waterfill_kkt(gains, snr_db):
    P = 10 ** (snr_db / 10)
    p2, _ = gaussian_waterfill(gains, P)
    assert np.all(p2 >= 0) and abs(p2.sum() - 1) < 1e-9
    lv = water_level(gains, P, p2)
    act = p2 > 0
    assert np.ptp(lv[act]) < 1e-9 * max(1.0, lv[act].max())
    assert np.all(lv[~act] >= lv[act].max() - 1e-9)


def test_discrete_waterfill_limits():
    v = discrete_waterfill_mi([0.9, 0.5, 0.3], 1e6, Q16).value
    assert v == pytest.approx(12.0, abs=1e-6)
    assert discrete_waterfill_mi([0.6], 7.0, Q4).value == pytest.approx(scalar_mi(7.0 * 0.36, Q4))


def test_mercury_equal_gains_uniform():
    p2, _ = mercury_waterfill([0.5] * 4, 10.0, Q16)
    assert np.allclose(p2, 0.25, atol=1e-6)


def test_mercury_beta1_uniform():
    p2, _ = mercury_waterfill([1.0, 1.0], 3.0, Q4)
    assert np.allclose(p2, 0.5, atol=1e-6)


def test_mercury_low_snr_strong_only():
    pc = PairChannel.from_beta(4.0)
    p2, _ = mercury_waterfill([pc.strong, pc.weak], 10 ** (-0.5), Q4)
    assert p2[0] == pytest.approx(1.0, abs=1e-9)


def test_mercury_matches_brute_force_grid():
    pc = PairChannel.from_beta(2.0)
    g2 = np.array([pc.strong, pc.weak]) ** 2 * 10.0
    grid = np.linspace(0.0, 1.0, 1001)
    brute = max(scalar_mi(g2[0] * x, Q4) + scalar_mi(g2[1] * (1 - x), Q4) for x in grid)
    _, est = mercury_waterfill([pc.strong, pc.weak], 10.0, Q4)
    assert abs(est.value - brute) < 1e-3
    assert est.value >= brute - 1e-9


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(0.1, 2.0), min_size=2, max_size=6), st.floats(-5.0, 25.0))
def test_mercury_simplex_and_dominance(gains, snr_db):
    g = np.sort(gains)[::-1]
    P = 10 ** (snr_db / 10)
    p2, est = mercury_waterfill(g, P, Q4)
    assert np.all(p2 >= 0) and abs(p2.sum() - 1) < 1e-9
    assert est.value >= discrete_waterfill_mi(g, P, Q4).value - 1e-7


def test_mercury_non_convergence():
    with pytest.raises(NonConvergenceError):
        mercury_waterfill([1.0, 0.3, 0.2], 10.0, Q4, max_sweeps=1)


def test_fixed_point_scalar_channel():
    H = np.array([[0.7 + 0.2j, 0.1j]])  # n_r = 1, n_t = 2
    res = fixed_point_precoder(H, Q4, 5.0, max_iter=10, n_samples=5000, eval_samples=50_000)
    assert np.linalg.norm(res.T) == pytest.approx(1.0, abs=1e-9)
    lam2 = np.linalg.norm(H) ** 2
    assert abs(res.mi.value - scalar_mi(5.0 * lam2, Q4)) <= 3 * res.mi.std_error
    assert res.converged


def test_fixed_point_dominates_xcode():
    pc = PairChannel.from_beta(2.0)
    P = 10 ** 1.2
    res = fixed_point_precoder(np.diag([pc.strong, pc.weak]), Q4, P, max_iter=40)
    x = optimize_pair(pc, P, uniform_alphabet(Q4, 2)).mi.value
    assert res.mi.value >= x - 3 * res.mi.std_error
    assert np.linalg.norm(res.T) == pytest.approx(1.0, abs=1e-9)


def test_fixed_point_is_reproducible():
    H = random_mimo(2, 2, 5)
    a = fixed_point_precoder(H, Q4, 4.0, max_iter=5, n_samples=2000, eval_samples=5000, seed=3)
    b = fixed_point_precoder(H, Q4, 4.0, max_iter=5, n_samples=2000, eval_samples=5000, seed=3)
    assert np.array_equal(a.T, b.T) and a.mi == b.mi


def test_fixed_point_guard():
    with pytest.raises(ValueError):
        fixed_point_precoder(random_mimo(5, 5, 0), Q4, 1.0)
    with pytest.raises(ValueError):
        fixed_point_precoder(random_mimo(3, 3, 0), Q16, 1.0)
