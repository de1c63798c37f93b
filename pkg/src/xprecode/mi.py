"""Mutual information and MMSE of discrete-input Gaussian vector channels.

A :class:`MixtureChannel` is ``y = M u + w`` with ``u`` uniform over a
product alphabet, ``M`` a complex ``(d, m)`` matrix that already contains the
``sqrt(P_T)`` scaling, and ``w ~ CN(0, I_d)``. The output density is then a
Gaussian mixture and ``I(u; y) = h(y) - d log2(pi e)``.

Two estimators are provided. Gauss-Hermite tensor quadrature is used for
``d <= 2``; when ``M`` is real and every input is a square QAM, the in-phase
and quadrature rails are independent copies of the same real channel with
PAM inputs, so the integral drops to ``d`` real dimensions. Monte Carlo
handles any ``d`` and is reproducible from its seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .channel import PairChannel
from .constellations import Constellation, ProductAlphabet

LOG2E = 1.0 / math.log(2.0)
DEFAULT_NODES = 32
MAX_NODES_2D = 128
DEFAULT_NODES_4D = 8
MAX_NODES_4D = 32
POWER_TOL = 1e-9


class UnsupportedDimensionError(ValueError):
    pass


class PowerConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class MiEstimate:
    """Mutual information in bits with an error figure.

    For Monte Carlo ``std_error`` is the standard error of the mean; for
    adaptive quadrature it is the change from the last node doubling, and it
    is ``0.0`` when a fixed node count was requested.
    """

    value: float
    std_error: float
    method: str
    samples_used: int

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "std_error", float(self.std_error))
        object.__setattr__(self, "samples_used", int(self.samples_used))

    def __add__(self, other: "MiEstimate") -> "MiEstimate":
        method = self.method if self.method == other.method else "mixed"
        return MiEstimate(
            self.value + other.value,
            math.hypot(self.std_error, other.std_error),
            method,
            self.samples_used + other.samples_used,
        )


@dataclass(frozen=True)
class MixtureChannel:
    mapping: np.ndarray
    alphabet: ProductAlphabet

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.mapping, dtype=complex))
        if M.shape[1] != self.alphabet.dim:
            raise ValueError(f"mapping has {M.shape[1]} columns, alphabet has dimension {self.alphabet.dim}")
        if not np.all(np.isfinite(M)):
            raise ValueError("mapping must be finite")
        object.__setattr__(self, "mapping", M)

    @property
    def dim(self) -> int:
        return self.mapping.shape[0]

    @property
    def means(self) -> np.ndarray:
        """Noiseless outputs ``M u`` for every ``u`` in alphabet order, ``(|S|, d)``."""
        return self.alphabet.points @ self.mapping.T

    @property
    def separable(self) -> bool:
        return self.alphabet.is_square_qam and not np.any(self.mapping.imag)


def rotation(theta: float) -> np.ndarray:
    """Pair rotation ``[[cos, sin], [-sin, cos]]``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def as_real(z: np.ndarray) -> np.ndarray:
    """Stack complex ``(..., d)`` as real ``(..., 2d)`` with ``[re, im]``."""
    return np.concatenate([z.real, z.imag], axis=-1)


@lru_cache(maxsize=64)
def _gh_grid(n_nodes: int, dim: int):
    """Tensor Gauss-Hermite grid for a standard normal vector in ``dim`` dims."""
    x, w = np.polynomial.hermite.hermgauss(n_nodes)
    x = x * math.sqrt(2.0)
    w = w / math.sqrt(math.pi)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wgrid = np.meshgrid(*([w] * dim), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _real_problem(ch: MixtureChannel):
    """``(means, s2, rails)`` of the equivalent real Gaussian-mixture problem."""
    if ch.separable:
        return ch.alphabet.pam_points() @ ch.mapping.real.T, 0.5, 2
    return as_real(ch.means), 0.5, 1


def _antipodal(means) -> bool:
    K = means.shape[0]
    return K % 2 == 0 and np.allclose(means[::-1], -means, rtol=0.0, atol=1e-12)


def _quad_bits(means, s2, rails, n_nodes):
    K, D = means.shape
    if K == 1:
        return 0.0
    nodes, weights = _gh_grid(n_nodes, D)
    means = np.ascontiguousarray(means)
    ls = kernels.gh_logsum(means, nodes * math.sqrt(s2), weights, 0.5 / s2, _antipodal(means))
    return rails * (math.log(K) - ls) * LOG2E


def mi_mixture_quad(ch: MixtureChannel, nodes: int | None = None, tol: float = 1e-4) -> MiEstimate:
    """Quadrature MI for ``d <= 2`` complex dimensions.

    With ``nodes=None`` the per-axis node count starts at 32 (8 for a
    four-real-dimensional grid) and doubles until successive values differ
    by less than ``tol`` bits or the cap is reached.
    """
    if ch.dim > 2:
        raise UnsupportedDimensionError(f"quadrature supports d <= 2, got d={ch.dim}; use mi_mixture_mc")
    means, s2, rails = _real_problem(ch)
    D = means.shape[1]
    if nodes is not None:
        v = _quad_bits(means, s2, rails, nodes)
        return MiEstimate(v, 0.0, "quadrature", nodes**D)
    n, cap = (DEFAULT_NODES, MAX_NODES_2D) if D <= 2 else (DEFAULT_NODES_4D, MAX_NODES_4D)
    prev = _quad_bits(means, s2, rails, n)
    while True:
        n2 = 2 * n
        cur = _quad_bits(means, s2, rails, n2)
        delta = abs(cur - prev)
        if delta < tol or n2 >= cap:
            return MiEstimate(cur, delta, "quadrature", n2**D)
        n, prev = n2, cur


def mc_draws(n_symbols: int, real_dim: int, n_samples: int, seed):
    """Input indices and unit-variance real noise shared by every MC call."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n_symbols, size=n_samples)
    noise = rng.standard_normal((n_samples, real_dim))
    return idx, noise


def mi_mixture_mc(ch: MixtureChannel, n_samples: int = 100_000, seed=0) -> MiEstimate:
    """Monte-Carlo MI: average of ``-log2 p(y)`` minus the noise entropy.

    The same ``seed`` produces the same inputs and noise for every channel
    of the same alphabet size and dimension, so differences between
    geometries are evaluated with common random numbers.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    means = as_real(ch.means)
    K, D = means.shape
    idx, noise = mc_draws(K, D, n_samples, seed)
    vals = kernels.mc_logsum(np.ascontiguousarray(means), idx, noise * math.sqrt(0.5), 1.0)
    value = (math.log(K) - vals.mean()) * LOG2E
    se = vals.std(ddof=1) / math.sqrt(n_samples) * LOG2E
    return MiEstimate(value, se, "monte_carlo", n_samples)


def pair_mapping(pc: PairChannel, P_T: float, pbar2: float, f: float, theta: float) -> np.ndarray:
    """``sqrt(P_T pbar2) diag(strong, weak) diag(sqrt f, sqrt(1-f)) A(theta)``."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"power fraction f={f} outside [0, 1]")
    if pbar2 < 0.0:
        raise ValueError("pair power must be non-negative")
    scale = math.sqrt(P_T * pbar2)
    lf = np.array([pc.strong * math.sqrt(f), pc.weak * math.sqrt(1.0 - f)])
    return scale * lf[:, None] * rotation(theta)


def pair_mi(
    pc: PairChannel,
    P_T: float,
    pbar2: float,
    f: float,
    theta: float,
    alph: ProductAlphabet,
    method: str = "quadrature",
    nodes: int | None = None,
    n_samples: int = 100_000,
    seed=0,
) -> MiEstimate:
    """MI of one pair with power share ``pbar2``, fraction ``f`` and angle ``theta``."""
    ch = MixtureChannel(pair_mapping(pc, P_T, pbar2, f, theta), alph)
    if method == "quadrature":
        return mi_mixture_quad(ch, nodes=nodes)
    if method == "monte_carlo":
        return mi_mixture_mc(ch, n_samples=n_samples, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def system_mi(gains, pairing, params, alph, P_T: float, **kw) -> MiEstimate:
    """Total MI of an X-coded system as the sum over its pairs.

    ``pairing`` is a sequence of 1-based ``(i, j)`` subchannel indices and
    ``params`` a matching sequence of objects with ``theta``, ``f`` and
    ``pbar2``. ``alph`` is either one constellation used on every subchannel
    or a :class:`ProductAlphabet` with one component per subchannel.
    """
    gains = np.asarray(gains, dtype=float)
    pairs = list(pairing)
    params = list(params)
    if len(pairs) != len(params):
        raise ValueError("one parameter set per pair required")
    total_power = sum(p.pbar2 for p in params)
    if abs(total_power - 1.0) > POWER_TOL:
        raise PowerConstraintError(f"pair powers sum to {total_power!r}, expected 1")
    total = None
    for (i, j), p in zip(pairs, params):
        if gains[i - 1] < gains[j - 1]:
            raise ValueError(f"pair {(i, j)}: first index must carry the stronger gain")
        a = _pair_alphabet(alph, i, j)
        est = pair_mi(PairChannel(gains[i - 1], gains[j - 1]), P_T, p.pbar2, p.f, p.theta, a, **kw)
        total = est if total is None else total + est
    return total


def _pair_alphabet(alph, i, j) -> ProductAlphabet:
    if isinstance(alph, Constellation):
        return ProductAlphabet((alph, alph))
    return ProductAlphabet((alph.components[i - 1], alph.components[j - 1]))


# ------------------------------------------------------------------ MMSE ---


def mmse_matrix(T, H, alph: ProductAlphabet, P_T: float, n_samples: int = 20_000, seed=0) -> np.ndarray:
    """Monte-Carlo estimate of ``E[(u - E[u|y])(u - E[u|y])^H]``.

    ``y = sqrt(P_T) H T u + w`` with ``u`` uniform over ``alph``. The
    posterior mean is exact over the finite alphabet; the returned matrix is
    Hermitian by construction.
    """
    M = math.sqrt(P_T) * (np.asarray(H, dtype=complex) @ np.asarray(T, dtype=complex))
    symbols = alph.points
    means = as_real(symbols @ M.T)
    K, D = means.shape
    idx, noise = mc_draws(K, D, n_samples, seed)
    w = np.full(n_samples, 1.0 / n_samples)
    E = kernels.mmse_accumulate(symbols, np.ascontiguousarray(means), idx, noise * math.sqrt(0.5), w, 1.0)
    return 0.5 * (E + E.conj().T)


def mmse_matrix_quad(mapping, alph: ProductAlphabet, nodes: int = 16) -> np.ndarray:
    """Quadrature MMSE matrix for ``y = mapping @ u + w`` with ``d <= 2``."""
    M = np.atleast_2d(np.asarray(mapping, dtype=complex))
    if M.shape[0] > 2:
        raise UnsupportedDimensionError("quadrature MMSE needs d <= 2")
    symbols = alph.points
    means = as_real(symbols @ M.T)
    K, D = means.shape
    x, w = _gh_grid(nodes, D)
    Q = x.shape[0]
    idx = np.repeat(np.arange(K), Q)
    noise = np.tile(x, (K, 1)) * math.sqrt(0.5)
    weights = np.tile(w, K) / K
    E = kernels.mmse_accumulate(symbols, np.ascontiguousarray(means), idx, noise, weights, 1.0)
    return 0.5 * (E + E.conj().T)


# ------------------------------------------------------- scalar channels ---


def scalar_mi(snr: float, const: Constellation, nodes: int = 64) -> float:
    """MI in bits of ``y = sqrt(snr) u + w`` with ``u`` uniform on ``const``."""
    if snr <= 0.0:
        return 0.0
    a = math.sqrt(snr)
    if const.pam is not None:
        return _quad_bits((a * const.pam)[:, None], 0.5, 2, nodes)
    return _quad_bits(as_real((a * const.points)[:, None]), 0.5, 1, nodes)


def scalar_mmse(snr: float, const: Constellation, nodes: int = 64) -> float:
    """MMSE ``E|u - E[u|y]|^2`` of the scalar channel; equals ``dI/dsnr`` in nats."""
    if snr <= 0.0:
        return float(np.mean(np.abs(const.points) ** 2) - abs(np.mean(const.points)) ** 2)
    a = math.sqrt(snr)
    if const.pam is not None:
        syms = const.pam.astype(complex)[:, None]
        means = (a * const.pam)[:, None]
        rails = 2.0
    else:
        syms = const.points[:, None]
        means = as_real((a * const.points)[:, None])
        rails = 1.0
    K, D = means.shape
    x, w = _gh_grid(nodes, D)
    Q = x.shape[0]
    idx = np.repeat(np.arange(K), Q)
    noise = np.tile(x, (K, 1)) * math.sqrt(0.5)
    weights = np.tile(w, K) / K
    E = kernels.mmse_accumulate(syms, np.ascontiguousarray(means), idx, noise, weights, 1.0)
    return rails * float(E[0, 0].real)
