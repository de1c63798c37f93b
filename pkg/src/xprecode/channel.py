"""Channel matrices, their SVD, and the scenario generators.

Only ``n_r <= n_t`` is supported: projecting onto the left singular vectors
is then lossless and the channel reduces to ``n = n_r`` parallel subchannels.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RANK_TOL = 1e-10

# Five-tap impulse response of the 32-carrier OFDM example.
OFDM_EXAMPLE_TAPS = np.array(
    [-0.454 + 0.145j, -0.258 + 0.198j, 0.0783 + 0.069j, -0.408 - 0.396j, -0.532 - 0.224j]
)


class DegenerateChannelError(ValueError):
    pass


class UnsupportedShapeError(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelDecomposition:
    """``H = U @ diag(gains) @ V`` with ``U`` (n_r, n) and ``V`` (n, n_t)."""

    U: np.ndarray
    gains: np.ndarray
    V: np.ndarray

    @property
    def n(self) -> int:
        return self.gains.size

    @property
    def n_r(self) -> int:
        return self.U.shape[0]

    @property
    def n_t(self) -> int:
        return self.V.shape[1]

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.gains) @ self.V


@dataclass(frozen=True)
class PairChannel:
    """Two subchannel gains seen by one pair, strong first."""

    strong: float
    weak: float

    def __post_init__(self):
        s, w = float(self.strong), float(self.weak)
        if s < w:
            s, w = w, s
        if w <= 0.0:
            raise DegenerateChannelError("pair gains must be positive")
        object.__setattr__(self, "strong", s)
        object.__setattr__(self, "weak", w)

    @property
    def alpha(self) -> float:
        """Pair power gain ``strong**2 + weak**2``."""
        return self.strong**2 + self.weak**2

    @property
    def beta(self) -> float:
        """Condition number ``strong / weak`` (>= 1)."""
        return self.strong / self.weak

    @classmethod
    def from_beta(cls, beta: float, alpha: float = 1.0) -> "PairChannel":
        if beta < 1.0 or alpha <= 0.0:
            raise ValueError("need beta >= 1 and alpha > 0")
        scale = math.sqrt(alpha / (1.0 + beta**2))
        return cls(beta * scale, scale)

    def normalized(self) -> "PairChannel":
        """Same ``beta`` with ``alpha = 1``."""
        return PairChannel.from_beta(self.beta, 1.0)


def sort_desc(values) -> np.ndarray:
    """Permutation sorting ``values`` descending; ties keep original order."""
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")


def svd(H) -> ChannelDecomposition:
    """Compact SVD with descending, deterministically ordered singular values."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    n_r, n_t = H.shape
    if n_r > n_t:
        raise UnsupportedShapeError(
            f"n_r={n_r} > n_t={n_t}: receiver projection would lose information"
        )
    U, s, V = np.linalg.svd(H, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        raise DegenerateChannelError(f"channel is rank deficient (singular values {s})")
    # Within a group of equal singular values the basis is arbitrary; order it
    # by the input coordinate each right singular vector mostly uses.
    rs = np.round(s / s[0], 12)
    lead = np.argmax(np.abs(V), axis=1)
    order = np.lexsort((lead, -rs))
    return ChannelDecomposition(U=U[:, order], gains=s[order], V=V[order, :])


def diagonal(gains) -> np.ndarray:
    return np.diag(np.asarray(gains, dtype=complex))


def ofdm_gains(impulse_response, n: int):
    """Subcarrier gain magnitudes of an impulse response on an ``n``-point DFT.

    Returns ``(gains, order)``: ``gains`` sorted descending and ``order`` the
    subcarrier index of each sorted gain. The DFT is unnormalised.
    """
    h = np.asarray(impulse_response, dtype=complex).ravel()
    if n <= 0 or n & (n - 1):
        raise ConfigError(f"OFDM size must be a power of two, got {n}")
    if h.size > n:
        raise ConfigError(f"impulse response ({h.size} taps) longer than n={n}")
    mags = np.abs(np.fft.fft(h, n))
    order = sort_desc(mags)
    return mags[order], order


def random_mimo(n_t: int, n_r: int, seed) -> np.ndarray:
    """I.i.d. CN(0, 1) entries, shape ``(n_r, n_t)``."""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))) / math.sqrt(2.0)


def _complex_list(items) -> np.ndarray:
    arr = np.asarray(items, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ConfigError("complex values must be given as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_channel(path) -> np.ndarray:
    """Read a channel JSON file and return the equivalent channel matrix.

    Accepted layouts: ``{"matrix": [[[re, im], ...], ...]}``,
    ``{"diagonal": [g, ...]}`` and
    ``{"impulse_response": [[re, im], ...], "n": 32}``; the OFDM form yields
    the diagonal matrix of its subcarrier gains.
    """
    doc = json.loads(Path(path).read_text())
    return channel_from_dict(doc)


def channel_from_dict(doc: dict) -> np.ndarray:
    if "matrix" in doc:
        return np.atleast_2d(_complex_list(doc["matrix"]))
    if "diagonal" in doc:
        return diagonal(np.asarray(doc["diagonal"], dtype=float))
    if "impulse_response" in doc:
        g, _ = ofdm_gains(_complex_list(doc["impulse_response"]), int(doc.get("n", 32)))
        return diagonal(g)
    raise ConfigError("channel file needs one of 'matrix', 'diagonal', 'impulse_response'")


def channel_to_dict(H) -> dict:
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    return {"matrix": [[[float(v.real), float(v.imag)] for v in row] for row in H]}
