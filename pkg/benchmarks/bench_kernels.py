#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

Each case runs both backends on identical inputs, checks that the results
agree, and reports the best of ``--repeat`` wall-clock timings (numba is
warmed up first so compilation is excluded).

    python benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import math
import time

import numpy as np

from xprecode import kernels
from xprecode._accel import HAVE_NUMBA
from xprecode.constellations import make_qam, uniform_alphabet
from xprecode.mi import _gh_grid, as_real, mc_draws


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    rng = np.random.default_rng(1)
    q16 = make_qam(16)
    pam = uniform_alphabet(q16, 2).pam_points()  # (16, 2) real
    c, s = math.cos(0.6), math.sin(0.6)
    m = 30.0 * np.array([[0.9 * c, 0.9 * s], [-0.4 * s, 0.4 * c]])
    x, w = _gh_grid(32, 2)
    x = x * math.sqrt(0.5)
    yield "gh_logsum 16-QAM pair, 32^2 nodes", "gh_logsum", (pam @ m.T, x, w, 1.0, True)

    maps = rng.normal(size=(121, 2, 2)) * 10.0
    xs, ws = _gh_grid(16, 2)
    yield "gh_logsum_batch 121 maps, 16^2 nodes", "gh_logsum_batch", (
        np.ascontiguousarray(pam), maps, xs * math.sqrt(0.5), ws, 1.0, True)

    q4 = make_qam(4)
    alph = uniform_alphabet(q4, 4)
    H = (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))) * 2.0
    means = as_real(alph.points @ H.T)
    idx, noise = mc_draws(len(alph), means.shape[1], 20_000, 0)
    yield "mc_logsum 4x4 4-QAM, 2e4 draws", "mc_logsum", (means, idx, noise * math.sqrt(0.5), 1.0)

    wts = np.full(idx.shape[0], 1.0 / idx.shape[0])
    yield "mmse_accumulate 4x4 4-QAM, 2e4 draws", "mmse_accumulate", (
        alph.points, means, idx, noise * math.sqrt(0.5), wts, 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable (or XPRECODE_NO_NUMBA set); nothing to compare")
        return
    print(f"{'case':42s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for label, name, a in cases():
        f_np = getattr(kernels, name + "_np")
        f_nb = getattr(kernels, name + "_nb")
        f_nb(*a)  # compile / load cache
        t_np, r_np = best_time(lambda: f_np(*a), args.repeat)
        t_nb, r_nb = best_time(lambda: f_nb(*a), args.repeat)
        if not np.allclose(r_np, r_nb, rtol=1e-9, atol=1e-9):
            raise SystemExit(f"{label}: backends disagree")
        print(f"{label:42s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
