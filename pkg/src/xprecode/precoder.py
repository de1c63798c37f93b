"""X-Code generator matrices and the full precoder ``T = V^H P G``."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelDecomposition, ConfigError
from .mi import POWER_TOL, PowerConstraintError


@dataclass(frozen=True)
class XCodeGenerator:
    """Real orthogonal ``G`` with a 2x2 rotation on the rows/columns of each pair."""

    G: np.ndarray
    pairing: tuple
    angles: tuple


def build_generator(pairing, angles) -> XCodeGenerator:
    """Place ``[[cos, sin], [-sin, cos]]`` of each pair at rows/columns ``(i, j)``."""
    pairs = [tuple(int(x) for x in p) for p in pairing]
    angles = tuple(float(a) for a in angles)
    if len(angles) != len(pairs):
        raise ConfigError(f"{len(angles)} angles for {len(pairs)} pairs")
    n = 2 * len(pairs)
    G = np.zeros((n, n))
    for (i, j), th in zip(pairs, angles):
        c, s = math.cos(th), math.sin(th)
        i, j = i - 1, j - 1
        G[i, i], G[i, j], G[j, i], G[j, j] = c, s, -s, c
    return XCodeGenerator(G, tuple(pairs), angles)


@dataclass(frozen=True)
class FullPrecoder:
    """``T = Vh @ diag(sqrt(powers)) @ G`` with the factors kept."""

    T: np.ndarray
    Vh: np.ndarray
    powers: np.ndarray
    generator: XCodeGenerator

    @property
    def G(self) -> np.ndarray:
        return self.generator.G

    def equivalent_residual(self, H, dec: ChannelDecomposition) -> float:
        """``||U^H H T - Lambda P G||_F``."""
        lhs = dec.U.conj().T @ np.asarray(H) @ self.T
        rhs = (dec.gains * np.sqrt(self.powers))[:, None] * self.G
        return float(np.linalg.norm(lhs - rhs))

    def to_dict(self) -> dict:
        return {
            "T": {"re": self.T.real.tolist(), "im": self.T.imag.tolist()},
            "pairing": [list(p) for p in self.generator.pairing],
            "angles_deg": [math.degrees(a) for a in self.generator.angles],
            "powers": self.powers.tolist(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def subchannel_powers(pairing, params, n: int) -> np.ndarray:
    """Route ``pbar2 f`` to the stronger and ``pbar2 (1 - f)`` to the weaker index."""
    p2 = np.zeros(n)
    for (i, j), prm in zip(pairing, params):
        p2[i - 1] = prm.pbar2 * prm.f
        p2[j - 1] = prm.pbar2 * (1.0 - prm.f)
    return p2


def build_precoder(dec: ChannelDecomposition, plan) -> FullPrecoder:
    """Assemble ``T`` from a plan (anything with ``pairing`` and ``params``)."""
    pairing = [tuple(p) for p in plan.pairing]
    params = list(plan.params)
    if 2 * len(pairing) != dec.n:
        raise ConfigError(f"plan covers {2 * len(pairing)} subchannels, channel has {dec.n}")
    p2 = subchannel_powers(pairing, params, dec.n)
    if np.any(p2 < 0.0) or abs(p2.sum() - 1.0) > POWER_TOL:
        raise PowerConstraintError(f"subchannel powers sum to {p2.sum()!r}, expected 1")
    gen = build_generator(pairing, [p.theta for p in params])
    Vh = dec.V.conj().T
    T = (Vh * np.sqrt(p2)[None, :]) @ gen.G
    return FullPrecoder(T, Vh, p2, gen)
