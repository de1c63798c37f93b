"""Subchannel pairings, power allocation among pairs, and full X-Code plans.

Subchannels are indexed ``1..n`` in order of descending gain, so in every
pair ``(i, j)`` with ``i < j`` the first index is the stronger subchannel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import diagonal_mi, gaussian_waterfill, mercury_waterfill
from .channel import ConfigError, PairChannel
from .constellations import Constellation, parse_alphabet, uniform_alphabet
from .hungarian import assign
from .mi import MiEstimate, pair_mi
from .pair_opt import LookupTable, PairParams, lookup, optimize_pair

MAX_ENUM_N = 10
STRATEGIES = ("exhaustive", "x", "conjectured", "hungarian", "random-best")
POWER_MODES = ("uniform", "waterfill_alpha", "exhaustive")


class UnsupportedError(ValueError):
    pass


class TooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class Pairing:
    """Perfect matching of ``1..n`` as pairs ``(i, j)``, ``i < j``, sorted by ``i``."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted((min(int(a), int(b)), max(int(a), int(b))) for a, b in self.pairs))
        flat = sorted(x for p in pairs for x in p)
        if flat != list(range(1, 2 * len(pairs) + 1)):
            raise ValueError(f"{pairs} is not a perfect matching of 1..{2 * len(pairs)}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return 2 * len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __str__(self):
        return "{" + ",".join(f"({i},{j})" for i, j in self.pairs) + "}"


def _check_even(n: int) -> None:
    if n <= 0 or n % 2:
        raise UnsupportedError(f"pairing needs a positive even number of subchannels, got {n}")


def x_pairing(n: int) -> Pairing:
    """k-th strongest with k-th weakest: ``(k, n - k + 1)``."""
    _check_even(n)
    return Pairing(tuple((k, n - k + 1) for k in range(1, n // 2 + 1)))


def conjectured_pairing(n: int) -> Pairing:
    """k-th with ``(n/2 + k)``-th subchannel."""
    _check_even(n)
    return Pairing(tuple((k, n // 2 + k) for k in range(1, n // 2 + 1)))


def _matchings(items):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        for tail in _matchings(rest[:k] + rest[k + 1:]):
            yield ((first, partner),) + tail


def enumerate_pairings(n: int) -> list:
    """All ``(n-1)(n-3)...1`` pairings: the X-pairing first, then the rest in
    lexicographic order."""
    _check_even(n)
    if n > MAX_ENUM_N:
        raise TooLargeError(f"enumerating pairings for n={n} > {MAX_ENUM_N} is not supported")
    xp = x_pairing(n)
    rest = [Pairing(m) for m in _matchings(tuple(range(1, n + 1)))]
    return [xp] + [p for p in rest if p != xp]


def random_pairings(n: int, count: int, seed=0) -> list:
    """``count`` uniformly random perfect matchings (consecutive entries of a
    random permutation)."""
    _check_even(n)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        perm = rng.permutation(n) + 1
        out.append(Pairing(tuple(zip(perm[0::2], perm[1::2]))))
    return out


def _pair_cost_matrix(gains, P_T: float, table: LookupTable) -> np.ndarray:
    g = np.asarray(gains, dtype=float)
    m = g.size // 2
    cost = np.empty((m, m))
    for i in range(m):  # Group-II workers
        weak = g[m + i]
        for j in range(m):  # Group-I jobs
            strong = g[j]
            _, mi = lookup(table, strong**2 + weak**2, strong / weak, P_T, 2.0 / g.size)
            cost[i, j] = mi
    return cost


def hungarian_pairing(gains, P_T: float, table: LookupTable) -> Pairing:
    """Pair the stronger half with the weaker half by maximum-total-MI assignment.

    The cost of pairing subchannel ``j <= n/2`` with ``n/2 + i`` is the table
    MI at the nearest beta bin and effective SNR ``2 P_T (l_j^2 + l_{n/2+i}^2) / n``.
    """
    if table is None:
        raise ConfigError("Hungarian pairing needs a lookup table")
    g = np.asarray(gains, dtype=float)
    _check_even(g.size)
    m = g.size // 2
    if m == 1:
        return Pairing(((1, 2),))
    col = assign(_pair_cost_matrix(g, P_T, table), maximize=True)
    return Pairing(tuple((int(col[i]) + 1, m + i + 1) for i in range(m)))


def pair_gains(pairing: Pairing, gains) -> list:
    g = np.asarray(gains, dtype=float)
    return [PairChannel(g[i - 1], g[j - 1]) for i, j in pairing]


def _table_score(pcs, pbar2, P_T, table) -> float:
    return sum(lookup(table, pc.alpha, pc.beta, P_T, float(p))[1] for pc, p in zip(pcs, pbar2))


def allocate_power_pairs(pairing: Pairing, gains, P_T: float, mode: str = "waterfill_alpha",
                         table: LookupTable | None = None) -> np.ndarray:
    """Pair power shares ``pbar2`` on the simplex.

    ``uniform`` gives ``2/n`` each; ``waterfill_alpha`` waterfills over pairs
    treated as scalar Gaussian channels with power gain ``alpha_k``;
    ``exhaustive`` (two pairs only) scans the single split with step 0.01
    then 0.001 around the best point, scoring by table MI.
    """
    pcs = pair_gains(pairing, gains)
    m = len(pcs)
    if mode == "uniform":
        return np.full(m, 1.0 / m)
    if mode == "waterfill_alpha":
        p2, _ = gaussian_waterfill(np.sqrt([pc.alpha for pc in pcs]), P_T)
        return p2
    if mode == "exhaustive":
        if m != 2:
            raise UnsupportedError("exhaustive pair-power search is only offered for n = 4")
        if table is None:
            raise ConfigError("exhaustive pair-power search needs a lookup table")
        best = 0.5
        for step, half_width in ((0.01, 0.5), (0.001, 0.01)):
            lo, hi = max(0.0, best - half_width), min(1.0, best + half_width)
            grid = np.round(np.arange(lo, hi + step / 2, step), 6)
            scores = [_table_score(pcs, (s, 1.0 - s), P_T, table) for s in grid]
            best = float(grid[int(np.argmax(scores))])
        return np.array([best, 1.0 - best])
    raise ValueError(f"unknown power mode {mode!r}; expected one of {POWER_MODES}")


# ------------------------------------------------------------------ plans ---


@dataclass
class Plan:
    strategy: str
    snr_db: float
    pairing: Pairing
    pbar2: np.ndarray
    params: list
    pair_mi: list
    total: MiEstimate
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        pairs = [
            {
                "i": i,
                "j": j,
                "theta_deg": p.theta_deg,
                "f": p.f,
                "pbar2": p.pbar2,
                "mi_bits": float(m.value),
            }
            for (i, j), p, m in zip(self.pairing, self.params, self.pair_mi)
        ]
        doc = {
            "strategy": self.strategy,
            "snr_dB": self.snr_db,
            "pairing": [list(p) for p in self.pairing],
            "pairs": pairs,
            "total_mi_bits": float(self.total.value),
            "total_mi_stderr": float(self.total.std_error),
        }
        doc.update(self.extra)
        return doc


def _as_const(alph) -> Constellation:
    return parse_alphabet(alph) if isinstance(alph, (str, int)) else alph


def realize(pairing: Pairing, pbar2, gains, P_T: float, alph, table=None, refine=False,
            strategy="", extra=None) -> Plan:
    """Per-pair ``(theta, f)`` for given pairing and shares, with actual pair MI.

    Parameters come from ``table`` (or from :func:`optimize_pair` when
    ``refine`` is set or no table is given). Each pair's MI is then evaluated
    by quadrature on the real pair channel, so the total is the MI of the
    precoder actually built rather than the table's estimate.
    """
    const = _as_const(alph)
    pa = uniform_alphabet(const, 2)
    params, mis = [], []
    for pc, p in zip(pair_gains(pairing, gains), pbar2):
        p = float(p)
        if p <= 0.0:
            prm = PairParams(0.0, 1.0, 0.0)
            mi = MiEstimate(0.0, 0.0, "quadrature", 0)
        elif refine or table is None:
            opt = optimize_pair(pc, P_T * p, pa)
            prm, mi = PairParams(opt.theta, opt.f, p), opt.mi
        else:
            prm, _ = lookup(table, pc.alpha, pc.beta, P_T, p)
            mi = pair_mi(pc, P_T, p, prm.f, prm.theta, pa)
        params.append(prm)
        mis.append(mi)
    total = mis[0]
    for m in mis[1:]:
        total = total + m
    return Plan(strategy, 10.0 * math.log10(P_T), pairing, np.asarray(pbar2, dtype=float),
                params, mis, total, dict(extra or {}))


def _theta0_plan(pairing, sub_p2, gains, P_T, const, strategy) -> Plan:
    """Uncoded plan reproducing a given diagonal power allocation exactly."""
    shares, params, mis = [], [], []
    for (i, j), pc in zip(pairing, pair_gains(pairing, gains)):
        pb = float(sub_p2[i - 1] + sub_p2[j - 1])
        f = float(sub_p2[i - 1] / pb) if pb > 0.0 else 1.0
        params.append(PairParams(0.0, min(max(f, 0.0), 1.0), pb))
        # at theta = 0 the pair is two independent scalar channels
        mis.append(diagonal_mi([pc.strong, pc.weak], [sub_p2[i - 1], sub_p2[j - 1]], P_T, const))
        shares.append(pb)
    total = mis[0]
    for m in mis[1:]:
        total = total + m
    return Plan(strategy, 10.0 * math.log10(P_T), pairing, np.asarray(shares), params, mis, total)


def plan(gains, P_T: float, alph, table: LookupTable | None = None, strategy: str = "hungarian",
         power_mode: str = "waterfill_alpha", refine: bool = False, n_random: int = 50,
         seed=0) -> Plan:
    """Choose pairing, pair powers and per-pair parameters (gains sorted descending).

    ``exhaustive`` (n <= 6) tries every pairing; for each it tries uniform,
    alpha-waterfilling and Mercury/waterfilling shares (the latter also with
    theta = 0, which reproduces Mercury/waterfilling exactly) and, at n = 4,
    the exhaustive split; the best by evaluated MI wins. At n = 2 it compares the
    optimized pair with the Mercury/waterfilling allocation. ``random-best``
    evaluates ``n_random`` random pairings and also reports their mean MI in ``extra``.
    """
    g = np.asarray(gains, dtype=float)
    if np.any(np.diff(g) > 0):
        raise ValueError("gains must be sorted in descending order")
    n = g.size
    _check_even(n)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    const = _as_const(alph)
    if table is not None and table.alphabet != const.name:
        raise ConfigError(f"table is for {table.alphabet}, plan asks for {const.name}")
    if n == 2:
        base = realize(Pairing(((1, 2),)), [1.0], g, P_T, const, table, refine, strategy)
        if strategy != "exhaustive":
            return base
        merc = _theta0_plan(base.pairing, mercury_waterfill(g, P_T, const)[0], g, P_T, const, strategy)
        return max([base, merc], key=lambda c: c.total.value)
    if table is None:
        raise ConfigError("plans with more than one pair need a lookup table")

    def build(pairing, mode):
        p2 = allocate_power_pairs(pairing, g, P_T, mode, table)
        return realize(pairing, p2, g, P_T, const, table, refine, strategy)

    if strategy == "exhaustive":
        if n > 6:
            raise TooLargeError("exhaustive pairing search is limited to n <= 6")
        modes = ["uniform", "waterfill_alpha"] + (["exhaustive"] if n == 4 else [])
        cands = [build(p, m) for p in enumerate_pairings(n) for m in modes]
        # Mercury/waterfilling is the theta = 0 member of every pairing's family
        sub_p2, _ = mercury_waterfill(g, P_T, const)
        for p in enumerate_pairings(n):
            cands.append(_theta0_plan(p, sub_p2, g, P_T, const, strategy))
            shares = [sub_p2[i - 1] + sub_p2[j - 1] for i, j in p]
            cands.append(realize(p, shares, g, P_T, const, table, refine, strategy))
        return max(cands, key=lambda c: c.total.value)
    if strategy == "x":
        return build(x_pairing(n), power_mode)
    if strategy == "conjectured":
        return build(conjectured_pairing(n), power_mode)
    if strategy == "hungarian":
        return build(hungarian_pairing(g, P_T, table), power_mode)
    cands = [build(p, power_mode) for p in random_pairings(n, n_random, seed)]
    vals = np.array([c.total.value for c in cands])
    best = cands[int(np.argmax(vals))]
    best.extra = {
        "random_count": n_random,
        "random_mean_mi_bits": float(vals.mean()),
        "random_mean_stderr": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0,
    }
    return best
