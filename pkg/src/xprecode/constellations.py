"""Discrete input alphabets: unit-energy square QAM and Cartesian products."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SUPPORTED_QAM = (4, 16, 64, 256)


class InvalidOrderError(ValueError):
    """Raised for a constellation order that is not a supported square QAM."""


@dataclass(frozen=True)
class Constellation:
    """A finite complex signal set with uniform prior and unit mean energy.

    ``pam`` holds the in-phase levels when the set is a square QAM built from
    two identical PAM alphabets in quadrature, otherwise ``None``.
    """

    points: np.ndarray
    name: str = "custom"
    pam: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.pam is not None:
            pam = np.asarray(self.pam, dtype=float).ravel()
            pam.setflags(write=False)
            object.__setattr__(self, "pam", pam)

    @property
    def order(self) -> int:
        return self.points.size

    def __len__(self):
        return self.order

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.name, self.points.tobytes()))


def make_qam(M: int) -> Constellation:
    """Square M-QAM scaled to unit average energy.

    Point ``k`` is ``(I[k // r] + j Q[k % r])`` with ``r = sqrt(M)`` and both
    level lists ascending, so the enumeration order is fixed.
    """
    if M not in SUPPORTED_QAM:
        raise InvalidOrderError(f"unsupported QAM order {M!r}; expected one of {SUPPORTED_QAM}")
    r = math.isqrt(M)
    levels = np.arange(-(r - 1), r, 2, dtype=float)
    pam = levels / math.sqrt(2.0 * (M - 1) / 3.0)
    pts = (pam[:, None] + 1j * pam[None, :]).ravel()
    return Constellation(points=pts, name=f"qam{M}", pam=pam)


def bpsk() -> Constellation:
    """Real antipodal alphabet {-1, +1}; handy for scalar sanity checks."""
    return Constellation(points=np.array([-1.0, 1.0]), name="bpsk")


@dataclass(frozen=True)
class ProductAlphabet:
    """Cartesian product of per-dimension constellations.

    Tuples are enumerated lexicographically with the last dimension varying
    fastest (``itertools.product`` order).
    """

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self) -> int:
        return len(self.components)

    def __len__(self):
        return math.prod(c.order for c in self.components)

    @property
    def points(self) -> np.ndarray:
        """All tuples as a ``(|S|, dim)`` complex array."""
        return _tuples([c.points for c in self.components])

    @property
    def is_square_qam(self) -> bool:
        return all(c.pam is not None for c in self.components)

    def pam_points(self) -> np.ndarray:
        """Real tuples of the in-phase PAM components, ``(prod r_i, dim)``."""
        if not self.is_square_qam:
            raise ValueError("alphabet is not a product of square QAMs")
        return _tuples([c.pam for c in self.components]).real

    @property
    def label(self) -> str:
        names = {c.name for c in self.components}
        return names.pop() if len(names) == 1 else "x".join(c.name for c in self.components)


def _tuples(axes: Sequence[np.ndarray]) -> np.ndarray:
    return np.array(list(itertools.product(*axes)), dtype=complex).reshape(-1, len(axes))


def product(*parts) -> ProductAlphabet:
    """Product alphabet of constellations (or of other product alphabets)."""
    comps = []
    for p in parts:
        comps.extend(p.components if isinstance(p, ProductAlphabet) else [p])
    return ProductAlphabet(tuple(comps))


def uniform_alphabet(c: Constellation, n: int) -> ProductAlphabet:
    return ProductAlphabet((c,) * n)


def parse_alphabet(name: str | int) -> Constellation:
    """``"qam16"``, ``"16"`` or ``16`` -> :func:`make_qam` (``"bpsk"`` accepted)."""
    s = str(name).strip().lower()
    if s == "bpsk":
        return bpsk()
    s = s.removeprefix("qam")
    try:
        return make_qam(int(s))
    except ValueError as exc:
        raise InvalidOrderError(f"cannot parse alphabet {name!r}") from exc
