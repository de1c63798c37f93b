"""Reference schemes: Gaussian and discrete waterfilling, Mercury/waterfilling,
and the fixed-point optimal linear precoder."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import svd
from .constellations import Constellation, ProductAlphabet, uniform_alphabet
from .mi import MiEstimate, MixtureChannel, mi_mixture_mc, mmse_matrix, scalar_mi, scalar_mmse

LOG2E = 1.0 / math.log(2.0)


class NonConvergenceError(RuntimeError):
    pass


def _per_channel(alph, n):
    if isinstance(alph, Constellation):
        return [alph] * n
    if len(alph.components) != n:
        raise ValueError(f"alphabet has {len(alph.components)} components for {n} subchannels")
    return list(alph.components)


def gaussian_waterfill(gains, P_T: float):
    """Waterfilling powers (summing to 1) and the Gaussian-input capacity in bits."""
    g2 = np.asarray(gains, dtype=float) ** 2 * P_T
    if np.any(g2 <= 0.0):
        raise ValueError("gains and P_T must be positive")
    inv = 1.0 / g2
    order = np.argsort(inv, kind="stable")
    csum = np.cumsum(inv[order])
    n = g2.size
    level = None
    for k in range(n, 0, -1):
        mu = (1.0 + csum[k - 1]) / k
        if mu > inv[order[k - 1]]:
            level = mu
            break
    p2 = np.maximum(level - inv, 0.0)
    p2 /= p2.sum()
    cap = float(np.sum(np.log2(1.0 + g2 * p2)))
    return p2, cap


def water_level(gains, P_T, p2) -> np.ndarray:
    """``1 / (gain^2 P_T) + p^2`` per subchannel (equal on the active set)."""
    return 1.0 / (np.asarray(gains, dtype=float) ** 2 * P_T) + np.asarray(p2)


def diagonal_mi(gains, p2, P_T: float, alph) -> MiEstimate:
    """Sum of per-subchannel discrete-input MI for a diagonal power allocation."""
    g2 = np.asarray(gains, dtype=float) ** 2 * P_T
    consts = _per_channel(alph, g2.size)
    v = sum(scalar_mi(float(g * p), c) for g, p, c in zip(g2, p2, consts))
    return MiEstimate(float(v), 0.0, "quadrature", 0)


def discrete_waterfill_mi(gains, P_T: float, alph) -> MiEstimate:
    """Discrete inputs sent with the Gaussian waterfilling powers (no rotation)."""
    p2, _ = gaussian_waterfill(gains, P_T)
    return diagonal_mi(gains, p2, P_T, alph)


def mercury_waterfill(gains, P_T: float, alph, tol: float = 1e-6, max_sweeps: int = 10_000):
    """MI-optimal diagonal power allocation for discrete inputs.

    The objective ``sum_i I_i(g_i p_i)`` is concave on the power simplex.
    Each step moves power between the coordinates with the largest and the
    smallest marginal gain ``g_i mmse_i(g_i p_i)`` (the smallest taken over
    coordinates that still hold power), with an exact line search on the
    derivative. A sweep is ``n`` such steps; iteration stops once a sweep
    moves the power vector by less than ``tol`` (max-norm).

    Returns ``(p2, MiEstimate)``.
    """
    g = np.asarray(gains, dtype=float) ** 2 * P_T
    n = g.size
    consts = _per_channel(alph, n)
    p = np.full(n, 1.0 / n)
    if n == 1:
        return np.ones(1), diagonal_mi(gains, p, P_T, alph)

    def grad(i, x):
        return g[i] * scalar_mmse(g[i] * x, consts[i])

    for sweep in range(max_sweeps):
        start = p.copy()
        for _ in range(n):
            d = np.array([grad(i, p[i]) for i in range(n)])
            hi = int(np.argmax(d))
            active = np.flatnonzero(p > 0.0)
            lo = int(active[np.argmin(d[active])])
            if hi == lo or d[hi] - d[lo] <= 1e-14 * max(d[hi], 1.0):
                break
            tot = p[hi] + p[lo]

            def slope(t):
                return grad(hi, t) - grad(lo, tot - t)

            if slope(tot) >= 0.0:
                x = tot
            else:
                x = brentq(slope, p[hi], tot, xtol=1e-14, rtol=1e-14)
            p[hi], p[lo] = x, tot - x
        if np.max(np.abs(p - start)) < tol:
            p = np.maximum(p, 0.0)
            p /= p.sum()
            return p, diagonal_mi(gains, p, P_T, alph)
    raise NonConvergenceError(
        f"Mercury/waterfilling did not converge in {max_sweeps} sweeps; "
        f"last move {np.max(np.abs(p - start)):.3g}, powers {p}"
    )


# -------------------------------------------------------- fixed point ---


@dataclass
class FixedPointResult:
    T: np.ndarray
    mi: MiEstimate
    converged: bool
    iterations: int
    history: list = field(default_factory=list)


def fixed_point_precoder(
    H,
    alph,
    P_T: float,
    max_iter: int = 100,
    tol: float = 1e-4,
    seed=0,
    n_samples: int = 20_000,
    eval_samples: int = 100_000,
    damping: float = 0.5,
    init=None,
) -> FixedPointResult:
    """Damped iteration of ``T <- H^H H T E / ||H^H H T E||_F``.

    ``E`` is the MMSE matrix of the current precoder, estimated with the same
    Monte-Carlo draws at every iteration so the update is a deterministic
    map. Each start in ``init`` (the waterfilling precoder ``V^H P`` is
    always included) is iterated until ``||T_new - T||_F < tol`` or
    ``max_iter``. The iterate with the highest MI and every start are then
    re-evaluated with one set of independent draws and the best is returned,
    so a noisy in-loop estimate cannot select a precoder worse than a start.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    dec = svd(H)
    n = dec.n
    pa = uniform_alphabet(alph, n) if isinstance(alph, Constellation) else alph
    if n > 4 or len(pa) > 256:
        raise ValueError("fixed-point precoder limited to n <= 4 and |alphabet| <= 256")

    p2, _ = gaussian_waterfill(dec.gains, P_T)
    starts = [dec.V.conj().T * np.sqrt(p2)[None, :]]
    if init is not None:
        starts.extend(init if isinstance(init, (list, tuple)) else [init])
    G = H.conj().T @ H
    ss = np.random.SeedSequence(seed)
    e_seed, mi_seed, final_seed = ss.spawn(3)

    def mi_of(T, s, ns):
        return mi_mixture_mc(MixtureChannel(math.sqrt(P_T) * H @ T, pa), ns, s)

    best_T, best_v = None, -np.inf
    converged_any, iters = False, 0
    history = []
    for T0 in starts:
        T = np.asarray(T0, dtype=complex)
        T = T / np.linalg.norm(T)
        for it in range(max_iter):
            v = mi_of(T, mi_seed, n_samples).value
            history.append(v)
            if v > best_v:
                best_T, best_v = T, v
            E = mmse_matrix(T, H, pa, P_T, n_samples, e_seed)
            step = G @ T @ E
            nrm = np.linalg.norm(step)
            if nrm == 0.0:
                break
            T_new = (1.0 - damping) * T + damping * step / nrm
            T_new /= np.linalg.norm(T_new)
            iters += 1
            if np.linalg.norm(T_new - T) < tol:
                T = T_new
                converged_any = True
                v = mi_of(T, mi_seed, n_samples).value
                history.append(v)
                if v > best_v:
                    best_T, best_v = T, v
                break
            T = T_new
    finalists = [best_T] + [np.asarray(T0, dtype=complex) / np.linalg.norm(T0) for T0 in starts]
    scored = [(mi_of(T, final_seed, eval_samples), T) for T in finalists]
    mi, best_T = max(scored, key=lambda c: c[0].value)
    return FixedPointResult(best_T, mi, converged_any, iters, history)
