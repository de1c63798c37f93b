"""Command-line front end: ``optimize-pair``, ``build-tables``, ``sweep``, ``plan``.

Exit codes: 0 success, 2 usage or validation error, 3 numeric
non-convergence, 1 other failures (I/O).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import (
    NonConvergenceError,
    discrete_waterfill_mi,
    fixed_point_precoder,
    gaussian_waterfill,
    mercury_waterfill,
)
from .channel import (
    OFDM_EXAMPLE_TAPS,
    ConfigError,
    DegenerateChannelError,
    PairChannel,
    UnsupportedShapeError,
    load_channel,
    ofdm_gains,
    random_mimo,
    svd,
)
from .constellations import InvalidOrderError, parse_alphabet, uniform_alphabet
from .mi import MiEstimate
from .pair_opt import (
    DEFAULT_BETA_BINS,
    build_table,
    cached_table,
    mi_slices,
    optimize_pair,
    table_filename,
)
from .pairing import TooLargeError, UnsupportedError, plan
from .precoder import build_precoder

SCHEMA_ID = "xprecode-sweep/1"
CSV_COLUMNS = ("snr_db", "strategy", "mi_bits", "mi_stderr", "meta")
BASELINES = ("gaussian-wf", "wf-discrete", "mercury-wf", "fixed-point")
XCODE = ("xcode-exhaustive", "xcode-x", "xcode-conjectured", "xcode-hungarian", "xcode-random")
ALL_STRATEGIES = BASELINES + XCODE
DEFAULT_STRATEGIES = ("gaussian-wf", "wf-discrete", "mercury-wf", "xcode-hungarian")


class UsageError(ValueError):
    pass


def parse_grid(text: str) -> list:
    """``"a:b:step"`` (inclusive) or a single value, in dB."""
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError as exc:
        raise UsageError(f"bad SNR grid {text!r}") from exc
    if len(parts) == 1:
        return parts
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise UsageError(f"SNR grid must be a:b:step with step > 0 and b >= a, got {text!r}")
    a, b, step = parts
    k = int(math.floor((b - a) / step + 1e-9))
    return [round(a + i * step, 10) for i in range(k + 1)]


def _db(x: float) -> float:
    return 10.0 ** (x / 10.0)


def _table_dir(args) -> Path:
    return Path(args.table_dir or os.environ.get("XPRECODE_TABLE_DIR") or "tables")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _table(args, const):
    d = _table_dir(args)
    if not (d / table_filename(const.name, DEFAULT_BETA_BINS)).exists():
        _log(f"building lookup table for {const.name} in {d} (one-off)")
    return cached_table(d, const)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------- optimize-pair ---


def cmd_optimize_pair(args) -> int:
    if args.beta < 1.0 or args.alpha <= 0.0:
        raise UsageError("need --beta >= 1 and --alpha > 0")
    const = parse_alphabet(args.qam)
    pa = uniform_alphabet(const, 2)
    pc = PairChannel.from_beta(args.beta, args.alpha)
    results = []
    for snr_db in parse_grid(args.snr_db):
        opt = optimize_pair(pc, _db(snr_db), pa)
        entry = {
            "beta": args.beta,
            "alpha": args.alpha,
            "snr_dB": snr_db,
            "alphabet": const.name,
            "theta_deg": opt.theta_deg,
            "f": opt.f,
            "mi_bits": float(opt.mi.value),
        }
        if args.slices:
            th, by_th, fs, by_f = mi_slices(pc, _db(snr_db), pa, opt.theta, opt.f)
            entry["mi_vs_theta"] = {"theta_deg": np.degrees(th).tolist(), "mi_bits": by_th.tolist()}
            entry["mi_vs_f"] = {"f": fs.tolist(), "mi_bits": by_f.tolist()}
        results.append(entry)
    _emit(json.dumps(results if len(results) > 1 else results[0], indent=1) + "\n", args.out)
    return 0


# ----------------------------------------------------------- build-tables ---


def cmd_build_tables(args) -> int:
    out = Path(args.out or _table_dir(args))
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    bins = [float(b) for b in args.beta_bins.split(",")]
    snrs = parse_grid(args.snr_db)
    for q in args.qam.split(","):
        const = parse_alphabet(q)
        table = build_table(bins, snrs, const)
        path = out / table_filename(const.name, bins)
        table.save(path)
        _log(f"wrote {path}")
    return 0


# ------------------------------------------------------------------ sweep ---


def _scenario_channel(args, realization: int = 0):
    if args.channel:
        return load_channel(args.channel)
    sc = args.scenario
    if sc == "pair":
        pc = PairChannel.from_beta(args.beta, args.alpha)
        return np.diag([pc.strong, pc.weak]).astype(complex)
    if sc == "ofdm":
        g, _ = ofdm_gains(OFDM_EXAMPLE_TAPS, args.n or 32)
        return np.diag(g).astype(complex)
    if sc == "ergodic":
        n = args.n or 4
        ss = np.random.SeedSequence([args.seed, realization])
        return random_mimo(n, n, ss)
    raise UsageError("give --channel or --scenario")


def evaluate_point(H, P_T: float, const, strategies, table, samples: int, seed) -> dict:
    """MI of every requested strategy at one channel and SNR."""
    dec = svd(H)
    g = dec.gains
    out = {}
    best_xplan = None
    for s in strategies:
        meta = {}
        if s == "gaussian-wf":
            _, cap = gaussian_waterfill(g, P_T)
            mi = MiEstimate(cap, 0.0, "quadrature", 0)
        elif s == "wf-discrete":
            mi = discrete_waterfill_mi(g, P_T, const)
        elif s == "mercury-wf":
            p2, mi = mercury_waterfill(g, P_T, const)
            meta["powers"] = [round(float(x), 6) for x in p2]
        elif s in XCODE:
            strat = s.removeprefix("xcode-")
            strat = "random-best" if strat == "random" else strat
            pl = plan(g, P_T, const, table, strat, seed=seed)
            mi = pl.total
            meta["pairing"] = str(pl.pairing)
            if strat == "random-best":
                meta["random_mean_mi_bits"] = pl.extra["random_mean_mi_bits"]
                meta["random_mean_stderr"] = pl.extra["random_mean_stderr"]
            if best_xplan is None or mi.value > best_xplan.total.value:
                best_xplan = pl
        elif s == "fixed-point":
            if dec.n > 4:
                meta["skipped"] = "n > 4"
                out[s] = (None, meta)
                continue
            init = None
            if dec.n % 2 == 0 and dec.n <= 4:
                xp = best_xplan or plan(g, P_T, const, table if dec.n > 2 else None, "exhaustive")
                init = build_precoder(dec, xp).T
            res = fixed_point_precoder(H, const, P_T, seed=seed, eval_samples=samples, init=init)
            mi = res.mi
            meta["converged"] = res.converged
            meta["iterations"] = res.iterations
        else:
            raise UsageError(f"unknown strategy {s!r}")
        out[s] = (mi, meta)
    return out


def _sweep_task(job):
    args, snr_db, r, const, table, strategies = job
    H = _scenario_channel(args, r)
    return evaluate_point(H, _db(snr_db), const, strategies, table, args.samples, [args.seed, r])


def cmd_sweep(args) -> int:
    const = parse_alphabet(args.qam)
    strategies = [s.strip() for s in args.strategy.split(",") if s.strip()]
    if not strategies:
        raise UsageError("at least one strategy is required")
    bad = [s for s in strategies if s not in ALL_STRATEGIES]
    if bad:
        raise UsageError(f"unknown strategies {bad}; choose from {', '.join(ALL_STRATEGIES)}")
    snrs = parse_grid(args.snr_db)
    if args.scenario == "pair" and not args.channel and args.beta < 1.0:
        raise UsageError("--beta must be >= 1")
    n_real = args.realizations if (args.scenario == "ergodic" and not args.channel) else 1
    needs_table = any(s in XCODE or s == "fixed-point" for s in strategies)
    table = _table(args, const) if needs_table else None

    jobs = [(args, s, r, const, table, strategies) for s in snrs for r in range(n_real)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_sweep_task, jobs))
    else:
        results = [_sweep_task(j) for j in jobs]

    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_ID}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for k, snr_db in enumerate(snrs):
        chunk = results[k * n_real:(k + 1) * n_real]
        for s in strategies:
            vals = [c[s][0] for c in chunk if c[s][0] is not None]
            if not vals:
                w.writerow([snr_db, s, "", "", json.dumps(chunk[0][s][1])])
                continue
            if n_real == 1:
                mi, meta = vals[0], chunk[0][s][1]
                w.writerow([snr_db, s, f"{mi.value:.9g}", f"{mi.std_error:.3g}",
                            json.dumps(meta, sort_keys=True)])
            else:
                v = np.array([m.value for m in vals])
                se = float(v.std(ddof=1) / math.sqrt(v.size))
                meta = {"realizations": int(v.size)}
                w.writerow([snr_db, s, f"{v.mean():.9g}", f"{se:.3g}", json.dumps(meta)])
    _emit(buf.getvalue(), args.out)
    return 0


# ------------------------------------------------------------------- plan ---


def cmd_plan(args) -> int:
    const = parse_alphabet(args.qam)
    H = load_channel(args.channel)
    dec = svd(H)
    if dec.n % 2:
        raise UnsupportedError(f"channel has an odd number of subchannels ({dec.n})")
    snrs = parse_grid(args.snr_db)
    if len(snrs) != 1:
        raise UsageError("plan takes a single --snr-db value")
    table = _table(args, const) if dec.n > 2 else None
    pl = plan(dec.gains, _db(snrs[0]), const, table, args.strategy, power_mode=args.power_mode,
              refine=args.refine, seed=args.seed)
    doc = pl.to_dict()
    doc["alphabet"] = const.name
    doc["precoder"] = build_precoder(dec, pl).to_dict()
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


# ------------------------------------------------------------------- main ---


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xprecode", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, qam="16"):
        sp.add_argument("--qam", default=qam, help="QAM order (4, 16, 64)")
        sp.add_argument("--table-dir", default=None,
                        help="lookup-table directory (default $XPRECODE_TABLE_DIR or ./tables)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    op = sub.add_parser("optimize-pair", help="optimal rotation and power split for one pair")
    common(op)
    op.add_argument("--beta", type=float, required=True)
    op.add_argument("--alpha", type=float, default=1.0)
    op.add_argument("--snr-db", required=True, help="value or a:b:step")
    op.add_argument("--slices", action="store_true", help="include MI-vs-theta and MI-vs-f slices")
    op.set_defaults(func=cmd_optimize_pair)

    bt = sub.add_parser("build-tables", help="offline (theta*, f*) lookup tables")
    common(bt)
    bt.add_argument("--beta-bins", default=",".join(f"{b:g}" for b in DEFAULT_BETA_BINS))
    bt.add_argument("--snr-db", default="-5:35:1")
    bt.set_defaults(func=cmd_build_tables)

    sw = sub.add_parser("sweep", help="MI versus SNR for several schemes, as CSV")
    common(sw, qam="4")
    sw.add_argument("--channel", default=None, help="channel JSON file")
    sw.add_argument("--scenario", choices=("pair", "ofdm", "ergodic"), default=None)
    sw.add_argument("--beta", type=float, default=2.0)
    sw.add_argument("--alpha", type=float, default=1.0)
    sw.add_argument("--n", type=int, default=None, help="OFDM size or ergodic MIMO size")
    sw.add_argument("--realizations", type=int, default=200)
    sw.add_argument("--snr-db", required=True)
    sw.add_argument("--strategy", default=",".join(DEFAULT_STRATEGIES),
                    help=f"comma list from: {', '.join(ALL_STRATEGIES)}")
    sw.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo budget")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plan", help="pairing, powers and rotations for a channel")
    common(pl)
    pl.add_argument("--channel", required=True)
    pl.add_argument("--snr-db", required=True)
    pl.add_argument("--strategy", default="hungarian",
                    choices=("exhaustive", "x", "conjectured", "hungarian", "random-best"))
    pl.add_argument("--power-mode", default="waterfill_alpha",
                    choices=("uniform", "waterfill_alpha", "exhaustive"))
    pl.add_argument("--refine", action="store_true", help="optimize each pair exactly")
    pl.set_defaults(func=cmd_plan)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        _log(f"error: {exc}")
        return 3
    except (UsageError, InvalidOrderError, UnsupportedError, TooLargeError, ConfigError,
            DegenerateChannelError, UnsupportedShapeError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2
    except OSError as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
