"""Per-pair rotation angle and power split: grid optimisation and lookup tables.

A pair with gains ``(l1, l2)`` and power ``P`` is equivalent to the pair
with gains ``(beta, 1) / sqrt(1 + beta**2)`` and power ``P * alpha``, so the
optimum depends on ``beta`` and the effective SNR only. Tables are indexed
by exactly those two quantities.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .channel import PairChannel
from .constellations import ProductAlphabet, parse_alphabet, uniform_alphabet
from .mi import LOG2E, MiEstimate, MixtureChannel, _gh_grid, mi_mixture_quad, pair_mapping

DEFAULT_BETA_BINS = (1.0, 1.5, 2.0, 4.0, 8.0)
DEFAULT_SNR_DB = tuple(float(x) for x in range(-5, 36))
SCAN_NODES = 12
REFINE_NODES = 16
TIE_TOL = 1e-6


@dataclass(frozen=True)
class PairParams:
    """Rotation ``theta`` (radians), fraction ``f`` on the stronger
    subchannel, and the pair's share ``pbar2`` of the total power."""

    theta: float
    f: float
    pbar2: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"f={self.f} outside [0, 1]")
        if not 0.0 <= self.pbar2 <= 1.0 + 1e-9:
            raise ValueError(f"pbar2={self.pbar2} outside [0, 1]")

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


@dataclass(frozen=True)
class PairOptimum:
    theta: float
    f: float
    mi: MiEstimate

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


class _Scorer:
    """Batched quadrature scoring of ``(theta, f)`` candidates for one pair."""

    def __init__(self, beta: float, snr_eff: float, alph: ProductAlphabet):
        self.pc = PairChannel.from_beta(beta, 1.0)
        self.snr = snr_eff
        self.alph = alph
        if alph.is_square_qam:
            self.pts = np.ascontiguousarray(alph.pam_points())
            self.rails, self.block = 2, False
        else:
            u = alph.points
            self.pts = np.ascontiguousarray(np.concatenate([u.real, u.imag], axis=1))
            self.rails, self.block = 1, True
        self.K = self.pts.shape[0]
        # a linear map keeps -u at the mirrored index, so half the inputs suffice
        self.half = bool(self.K % 2 == 0 and np.allclose(self.pts[::-1], -self.pts, atol=1e-12))

    def maps(self, thetas, fs):
        thetas = np.asarray(thetas, dtype=float)
        fs = np.asarray(fs, dtype=float)
        g = math.sqrt(self.snr) * np.array([self.pc.strong, self.pc.weak])
        c, s = np.cos(thetas), np.sin(thetas)
        a = np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)  # (T, 2, 2)
        amp = g[None, :] * np.sqrt(np.stack([fs, 1.0 - fs], -1))  # (F, 2)
        m = amp[None, :, :, None] * a[:, None, :, :]  # (T, F, 2, 2)
        m = m.reshape(-1, 2, 2)
        if self.block:
            z = np.zeros_like(m)
            m = np.concatenate([np.concatenate([m, z], 2), np.concatenate([z, m], 2)], 1)
        return np.ascontiguousarray(m)

    def score(self, thetas, fs, nodes):
        """MI in bits on the ``thetas x fs`` grid, shape ``(len(thetas), len(fs))``."""
        if self.K == 1 or self.snr <= 0.0:
            return np.zeros((len(thetas), len(fs)))
        maps = self.maps(thetas, fs)
        x, w = _gh_grid(nodes, maps.shape[1])
        ls = kernels.gh_logsum_batch(self.pts, maps, x * math.sqrt(0.5), w, 1.0, self.half)
        mi = self.rails * (math.log(self.K) - ls) * LOG2E
        return mi.reshape(len(thetas), len(fs))


def _pick(vals, thetas, fs):
    """Best cell of a ``(theta, f)`` grid.

    Cells within ``TIE_TOL`` bits of the maximum are tied. Among ties the
    smallest theta wins, then the middle of that theta's tied f values, which
    keeps ``f`` well defined once MI saturates and is flat in ``f``.
    """
    tied = vals >= vals.max() - TIE_TOL
    ti = int(np.flatnonzero(tied.any(axis=1))[0])
    cand = np.flatnonzero(tied[ti])
    fi = int(cand[(cand.size - 1) // 2])
    return thetas[ti], fs[fi], vals[ti, fi]


def _quarter_symmetric(alph: ProductAlphabet) -> bool:
    # MI(theta) = MI(pi/2 - theta) needs identical components closed under negation.
    a, b = alph.components
    if a != b:
        return False
    p = np.sort_complex(np.round(a.points, 12))
    return np.array_equal(p, np.sort_complex(np.round(-a.points, 12)))


def optimize_pair(
    pc: PairChannel,
    P_T: float,
    alph: ProductAlphabet,
    theta_step_deg: float = 1.0,
    f_step: float = 0.02,
    refine_rounds: int = 2,
    shrink: int = 5,
) -> PairOptimum:
    """Maximise pair MI over ``theta in [0, 90)`` degrees and ``f in [0, 1]``.

    ``P_T`` is the power delivered to this pair; the search runs on the
    unit-gain equivalent channel at effective SNR ``P_T * pc.alpha``. A full
    grid is followed by ``refine_rounds`` local grids, each ``shrink`` times
    finer and spanning one step of the previous grid on either side.
    """
    snr = P_T * pc.alpha
    scorer = _Scorer(pc.beta, snr, alph)
    n_theta = int(round(90.0 / theta_step_deg))
    thetas = np.deg2rad(np.arange(n_theta) * theta_step_deg)
    fs = np.linspace(0.0, 1.0, int(round(1.0 / f_step)) + 1)

    if _quarter_symmetric(alph):
        half = thetas[thetas <= math.pi / 4 + 1e-12]
        v = scorer.score(half, fs, SCAN_NODES)
        vals = np.empty((thetas.size, fs.size))
        vals[: half.size] = v
        # theta and 90deg - theta give the same constellation up to relabelling
        for k in range(half.size, thetas.size):
            j = int(round(90.0 / theta_step_deg)) - k
            vals[k] = v[j]
    else:
        vals = scorer.score(thetas, fs, SCAN_NODES)
    th, f, _ = _pick(vals, thetas, fs)

    dth, df = math.radians(theta_step_deg), f_step
    for _ in range(refine_rounds):
        dth, df = dth / shrink, df / shrink
        t_loc = th + dth * np.arange(-shrink, shrink + 1)
        t_loc = t_loc[(t_loc >= 0.0) & (t_loc < math.pi / 2)]
        f_loc = np.clip(f + df * np.arange(-shrink, shrink + 1), 0.0, 1.0)
        f_loc = np.unique(f_loc)
        vals = scorer.score(t_loc, f_loc, REFINE_NODES)
        th, f, _ = _pick(vals, t_loc, f_loc)

    mi = mi_mixture_quad(MixtureChannel(pair_mapping(scorer.pc, snr, 1.0, f, th), alph))
    return PairOptimum(float(th), float(f), mi)


def mi_slices(pc: PairChannel, P_T: float, alph: ProductAlphabet, theta: float, f: float,
              theta_step_deg: float = 1.0, f_step: float = 0.02):
    """MI versus theta at fixed ``f`` and versus f at fixed ``theta``."""
    scorer = _Scorer(pc.beta, P_T * pc.alpha, alph)
    thetas = np.deg2rad(np.arange(0.0, 90.0, theta_step_deg))
    fs = np.linspace(0.0, 1.0, int(round(1.0 / f_step)) + 1)
    by_theta = scorer.score(thetas, [f], REFINE_NODES)[:, 0]
    by_f = scorer.score([theta], fs, REFINE_NODES)[0]
    return thetas, by_theta, fs, by_f


# ----------------------------------------------------------------- tables ---


def _sig9(x: float) -> float:
    return float(f"{x:.9g}")


@dataclass
class LookupTable:
    """Optimal ``(theta*, f*, MI*)`` per (beta bin, effective SNR in dB).

    Arrays ``theta_deg``, ``f`` and ``mi_bits`` have shape
    ``(len(beta_bins), len(snr_db))``.
    """

    alphabet: str
    beta_bins: np.ndarray
    snr_db: np.ndarray
    theta_deg: np.ndarray
    f: np.ndarray
    mi_bits: np.ndarray

    def __post_init__(self):
        self.beta_bins = np.asarray(self.beta_bins, dtype=float)
        self.snr_db = np.asarray(self.snr_db, dtype=float)
        for name in ("theta_deg", "f", "mi_bits"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        shape = (self.beta_bins.size, self.snr_db.size)
        if self.beta_bins.size == 0 or self.snr_db.size == 0:
            raise ValueError("table grids must be non-empty")
        if np.any(np.diff(self.beta_bins) <= 0) or np.any(np.diff(self.snr_db) <= 0):
            raise ValueError("table grids must be strictly increasing")
        for name in ("theta_deg", "f", "mi_bits"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}")

    def to_dict(self) -> dict:
        cells = [
            [
                {"theta_deg": _sig9(t), "f": _sig9(f), "mi_bits": _sig9(m)}
                for t, f, m in zip(tr, fr, mr)
            ]
            for tr, fr, mr in zip(self.theta_deg, self.f, self.mi_bits)
        ]
        return {
            "alphabet": self.alphabet,
            "beta_bins": [_sig9(b) for b in self.beta_bins],
            "snr_dB": [_sig9(s) for s in self.snr_db],
            "cells": cells,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LookupTable":
        cells = doc["cells"]
        grab = lambda key: [[c[key] for c in row] for row in cells]  # noqa: E731
        return cls(
            alphabet=doc["alphabet"],
            beta_bins=doc["beta_bins"],
            snr_db=doc["snr_dB"],
            theta_deg=grab("theta_deg"),
            f=grab("f"),
            mi_bits=grab("mi_bits"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "LookupTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_table(beta_bins=DEFAULT_BETA_BINS, snr_grid_db=DEFAULT_SNR_DB, alph="qam16",
                progress=None, **opt_kw) -> LookupTable:
    """Run :func:`optimize_pair` on every (beta, SNR) cell.

    ``alph`` is a constellation name or object used on both subchannels.
    Cell values are rounded to nine significant digits so that the JSON
    form reproduces the table exactly.
    """
    const = parse_alphabet(alph) if isinstance(alph, (str, int)) else alph
    pa = uniform_alphabet(const, 2)
    betas = np.asarray(beta_bins, dtype=float)
    snrs = np.asarray(snr_grid_db, dtype=float)
    shape = (betas.size, snrs.size)
    th, ff, mm = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    for b, beta in enumerate(betas):
        pc = PairChannel.from_beta(beta, 1.0)
        for s, snr_db in enumerate(snrs):
            opt = optimize_pair(pc, 10.0 ** (snr_db / 10.0), pa, **opt_kw)
            th[b, s] = _sig9(opt.theta_deg)
            ff[b, s] = _sig9(opt.f)
            mm[b, s] = _sig9(opt.mi.value)
            if progress is not None:
                progress(beta, snr_db, opt)
    return LookupTable(const.name, betas, snrs, th, ff, mm)


def nearest_bin(bins: np.ndarray, beta: float) -> int:
    """Index of the closest bin; an exact tie goes to the smaller beta."""
    dist = np.abs(np.asarray(bins) - beta)
    return int(np.flatnonzero(dist <= dist.min())[0])


def lookup(table: LookupTable, alpha: float, beta: float, P_T: float, pbar2: float = 1.0):
    """Table parameters for a pair with gain ``alpha`` and condition ``beta``.

    The effective SNR ``P_T * pbar2 * alpha`` is interpolated linearly in dB
    between grid points and clamped at the top of the grid. Below the bottom
    grid point ``theta*`` and ``f*`` are clamped while ``MI*`` is scaled
    linearly with SNR towards zero, which is the exact low-SNR behaviour.
    Returns ``(PairParams, mi_bits)``.
    """
    b = nearest_bin(table.beta_bins, beta)
    grid = table.snr_db
    snr = P_T * pbar2 * alpha
    if snr <= 0.0:
        return PairParams(math.radians(table.theta_deg[b, 0]), float(table.f[b, 0]), pbar2), 0.0
    x = 10.0 * math.log10(snr)
    th = float(np.interp(x, grid, table.theta_deg[b]))
    f = float(np.interp(x, grid, table.f[b]))
    if x < grid[0]:
        mi = float(table.mi_bits[b, 0]) * snr / 10.0 ** (grid[0] / 10.0)
    else:
        mi = float(np.interp(x, grid, table.mi_bits[b]))
    return PairParams(math.radians(th), min(max(f, 0.0), 1.0), pbar2), mi


def table_filename(alphabet: str, beta_bins) -> str:
    tag = "-".join(f"{b:g}" for b in beta_bins)
    return f"table_{alphabet}_beta{tag}.json"


def cached_table(table_dir, alph="qam16", beta_bins=DEFAULT_BETA_BINS,
                 snr_grid_db=DEFAULT_SNR_DB, progress=None) -> LookupTable:
    """Load the table for ``alph`` from ``table_dir``, building and saving it
    first if the file is missing or its grids differ."""
    const = parse_alphabet(alph) if isinstance(alph, (str, int)) else alph
    path = Path(table_dir) / table_filename(const.name, beta_bins)
    if path.exists():
        table = LookupTable.load(path)
        if (np.array_equal(table.beta_bins, np.asarray(beta_bins, dtype=float))
                and np.array_equal(table.snr_db, np.asarray(snr_grid_db, dtype=float))):
            return table
    table = build_table(beta_bins, snr_grid_db, const, progress=progress)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.save(path)
    return table
