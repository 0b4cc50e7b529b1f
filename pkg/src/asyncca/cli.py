"""Command-line entry point: ``asyncca simulate|predict|verify|bench``.

Exit codes: 0 ok, 1 verification failure, 2 argument error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .asynchrony import POISSON, ArrivalLaw
from .engine_parallel import AGG, AGG_POISSON, ASYNC1, SYNC1, EngineConfig, run_engine
from .engine_serial import run_serial_bkl, run_serial_eventlist, run_serial_standard
from .models import parse_model
from .perf_model import (DEFAULT_LEVEL, measured_efficiency, predict_aggregated,
                         predict_one_cell, speedup)
from .snapshots import PatternWriter
from .topology import Lattice
from .trajectory import TieFault

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SERIAL_STANDARD = "serial-standard"
SERIAL_EVENTLIST = "serial-eventlist"
SERIAL_BKL = "serial-bkl"
ENGINES = (ASYNC1, SYNC1, AGG, AGG_POISSON, SERIAL_STANDARD, SERIAL_EVENTLIST, SERIAL_BKL)


class UsageError(ValueError):
    pass


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        return [int(x, 0) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _lag(text: str) -> Optional[float]:
    if text.lower() in ("inf", "none"):
        return None
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("lag bound must be positive")
    return v


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: str, rows: Sequence[dict]) -> None:
    """'.' decimals, LF line endings, header taken from the first row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for row in rows:
            w.writerow([_fmt(v) for v in row.values()])


def _echo_config(args: argparse.Namespace, out) -> None:
    skip = {"func", "print_config"}
    items = [(k, v) for k, v in sorted(vars(args).items()) if k not in skip]
    print("config " + " ".join(f"{k}={_fmt(v) if not isinstance(v, list) else ','.join(map(str, v))}"
                               for k, v in items), file=out)
    print(f"backend {kernels.BACKEND}", file=out)


def _model_and_law(args):
    try:
        model = parse_model(args.model, args.dim)
        law = ArrivalLaw.parse(args.law)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    return model, law


def _lattice(args) -> Lattice:
    try:
        return Lattice(args.dim, args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- simulate

def _check_simulate(args, model, law) -> None:
    e = args.engine
    if args.bkl and e not in (AGG_POISSON, SERIAL_BKL):
        raise UsageError("--bkl applies to agg-poisson (or use --engine serial-bkl)")
    if e in (AGG_POISSON, SERIAL_STANDARD, SERIAL_BKL) and law.variant != POISSON:
        raise UsageError(f"{e} needs a Poisson arrival law")
    if e in (AGG, AGG_POISSON) and args.m is None:
        raise UsageError(f"{e} needs --m")
    if e in (AGG, AGG_POISSON) and args.n % args.m:
        raise UsageError(f"--m {args.m} must divide --n {args.n}")
    if args.lag_bound is not None and args.snapshot_dt is not None:
        raise UsageError("give --lag-bound or --snapshot-dt, not both")
    if (args.lag_bound is not None or args.snapshot_dt is not None) and e in (SYNC1,):
        raise UsageError("sync1 runs in lock-step rounds; lag and snapshot options do not apply")
    if args.out_dir and args.snapshot_dt is None:
        raise UsageError("--out-dir needs --snapshot-dt")


def _serial(args, model, lattice, law):
    e = args.engine
    if e == SERIAL_STANDARD:
        return run_serial_standard(model, lattice, law.rate, args.seed, args.end_time,
                                   initial=args.init, record=args.record or args.snapshot_dt is not None)
    if e == SERIAL_EVENTLIST:
        return run_serial_eventlist(model, lattice, law, args.seed, args.end_time, initial=args.init)
    return run_serial_bkl(model, lattice, law.rate, args.seed, args.end_time, initial=args.init)


def _serial_snapshots(traj, lattice, args) -> list[int]:
    writer = PatternWriter(args.out_dir, lattice.shape) if args.out_dir else None
    ks = []
    K = 0
    while K * args.snapshot_dt < args.end_time:
        t = K * args.snapshot_dt
        if writer is not None:
            writer(K, t, traj.configuration_at(t))
        ks.append(K)
        K += 1
    return ks


def cmd_simulate(args, out) -> int:
    model, law = _model_and_law(args)
    lattice = _lattice(args)
    _check_simulate(args, model, law)
    started = time.perf_counter()
    if args.engine.startswith("serial-"):
        traj = _serial(args, model, lattice, law)
        if args.snapshot_dt is not None:
            traj.stats["snapshots"] = _serial_snapshots(traj, lattice, args)
    else:
        sink = PatternWriter(args.out_dir, lattice.shape) if args.out_dir else None
        cfg = EngineConfig(variant=args.engine, workers=args.pes, end_time=args.end_time,
                           lag_bound=args.lag_bound, snapshot_dt=args.snapshot_dt,
                           frames=args.frames, sink=sink, bkl=args.bkl,
                           jitter=args.jitter, jitter_seed=args.seed)
        traj = run_engine(cfg, model, lattice, law, args.seed, m=args.m, initial=args.init)
    elapsed = time.perf_counter() - started
    row = {
        "engine": args.engine, "dim": args.dim, "n": args.n, "m": args.m, "pes": args.pes,
        "seed": args.seed, "end_time": float(args.end_time), "events": int(traj.events),
        "changes": int(traj.stats.get("flips", traj.changes)), "hash": f"{traj.hash:016x}",
        "seconds": elapsed,
    }
    st = traj.stats
    if "rounds" in st:
        rounds = st["rounds"]
        row["rounds"] = rounds
        row["eligible_fraction"] = (float(np.mean(st["eligible_per_round"])) / lattice.size
                                    if rounds else 0.0)
    if "kernel_selections" in st:
        picks = st["kernel_selections"] + st["boundary_selections"]
        row["kernel_fraction"] = st["kernel_selections"] / picks if picks else 0.0
        row["boundary_fraction"] = st["boundary_selections"] / picks if picks else 0.0
        row["rejected_kernel_moves"] = st["rejected_kernel_moves"]
    if "max_lag" in st:
        row["max_lag"] = float(st["max_lag"])
    if "snapshots" in st:
        row["snapshots"] = len(st["snapshots"])
    for k, v in row.items():
        print(f"{k}={_fmt(v)}", file=out)
    if args.csv:
        write_csv(args.csv, [row])
    return EXIT_OK


# ----------------------------------------------------------------- predict

def cmd_predict(args, out) -> int:
    try:
        law = ArrivalLaw.parse(args.law)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.mode == "one-cell":
        if args.lag_bound is not None:
            raise UsageError("--lag-bound applies to the aggregated model only")
        try:
            est = predict_one_cell(args.dim, args.n, law, args.rounds, args.warmup,
                                   args.replicates, args.seed, args.level)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        if args.m is None:
            raise UsageError("aggregated mode needs --m")
        if args.dim != 2:
            raise UsageError("the aggregated model is defined on 2-D lattices")
        if law.variant != POISSON:
            raise UsageError("the aggregated model assumes Poisson arrivals")
        try:
            est = predict_aggregated(args.n, args.m, args.rounds, args.warmup, args.replicates,
                                     args.seed, args.lag_bound, args.level)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    row = {
        "n": args.n, "m": args.m if args.mode == "aggregated" else 1, "law": str(law),
        "lag_bound": "inf" if args.lag_bound is None else float(args.lag_bound),
        "efficiency": est.mean, "ci_low": est.low, "ci_high": est.high, "rounds": est.rounds,
    }
    for k, v in row.items():
        print(f"{k}={_fmt(v)}", file=out)
    print(f"replicates={est.replicates} warmup={est.warmup} level={est.level!r}", file=out)
    if args.csv:
        write_csv(args.csv, [row])
    return EXIT_OK


# ------------------------------------------------------------------ verify

def _dump_divergence(ref, other, label, out) -> None:
    i = ref.first_divergence(other)
    if i is None:
        print(f"  {label}: event lists equal but hashes differ", file=out)
        return
    a = ref.event(i) if i < len(ref.times) else None
    b = other.event(i) if i < len(other.times) else None
    print(f"  {label}: first divergence at event {i}", file=out)
    print(f"    oracle: {a}", file=out)
    print(f"    engine: {b}", file=out)
    lo = max(0, i - 3)
    for j in range(lo, i):
        print(f"    common[{j}]: {ref.event(j)}", file=out)


def cmd_verify(args, out) -> int:
    model, law = _model_and_law(args)
    lattice = _lattice(args)
    for m in args.ms + args.poisson_ms:
        if args.n % m:
            raise UsageError(f"subarray side {m} must divide --n {args.n}")
    if args.poisson_ms and law.variant != POISSON:
        raise UsageError("--poisson-ms needs a Poisson arrival law")
    failures = 0
    ties = 0
    rows = []
    for seed in args.seeds:
        try:
            oracle = run_serial_eventlist(model, lattice, law, seed, args.end_time, initial=args.init)
        except TieFault as exc:
            ties += 1
            print(f"seed={seed} serial-eventlist tie-fault t={exc.time!r} cells={exc.cells}", file=out)
            rows.append({"seed": seed, "engine": SERIAL_EVENTLIST, "m": "", "workers": 1,
                         "hash": "", "status": "tie-fault"})
            continue
        ref = f"{oracle.hash:016x}"
        print(f"seed={seed} serial-eventlist events={oracle.events} hash={ref}", file=out)
        rows.append({"seed": seed, "engine": SERIAL_EVENTLIST, "m": "", "workers": 1,
                     "hash": ref, "status": "oracle"})
        runs = [(AGG, m, w) for m in args.ms for w in args.pes]
        if args.one_cell:
            runs += [(ASYNC1, 1, w) for w in args.pes] + [(SYNC1, 1, w) for w in args.pes]
        for variant, m, w in runs:
            cfg = EngineConfig(variant=variant, workers=w, end_time=args.end_time,
                               jitter=args.jitter, jitter_seed=seed)
            label = f"{variant} m={m} workers={w}"
            try:
                traj = run_engine(cfg, model, lattice, law, seed, m=m, initial=args.init)
            except TieFault as exc:
                ties += 1
                print(f"seed={seed} {label} tie-fault t={exc.time!r} cells={exc.cells}", file=out)
                rows.append({"seed": seed, "engine": variant, "m": m, "workers": w,
                             "hash": "", "status": "tie-fault"})
                continue
            h = f"{traj.hash:016x}"
            ok = traj.hash == oracle.hash and np.array_equal(traj.final, oracle.final)
            print(f"seed={seed} {label} hash={h} {'equal' if ok else 'MISMATCH'}", file=out)
            rows.append({"seed": seed, "engine": variant, "m": m, "workers": w,
                         "hash": h, "status": "equal" if ok else "mismatch"})
            if not ok:
                failures += 1
                _dump_divergence(oracle, traj, label, out)
        if args.poisson_ms:
            hashes = {}
            for m in args.poisson_ms:
                cfg = EngineConfig(variant=AGG_POISSON, workers=args.pes[0], end_time=args.end_time)
                a = run_engine(cfg, model, lattice, law, seed, m=m, initial=args.init)
                b = run_engine(cfg, model, lattice, law, seed, m=m, initial=args.init)
                repeat_ok = a.hash == b.hash
                hashes[m] = a.hash
                status = "repeatable" if repeat_ok else "NOT-REPEATABLE"
                print(f"seed={seed} agg-poisson m={m} hash={a.hash:016x} {status}", file=out)
                rows.append({"seed": seed, "engine": AGG_POISSON, "m": m, "workers": args.pes[0],
                             "hash": f"{a.hash:016x}", "status": status.lower()})
                failures += not repeat_ok
            distinct = len(set(hashes.values()))
            print(f"seed={seed} agg-poisson weak uniqueness: {distinct} distinct hash(es) "
                  f"over m={','.join(map(str, hashes))}", file=out)
    print(f"summary mismatches={failures} tie_faults={ties}", file=out)
    if args.csv:
        write_csv(args.csv, rows)
    return EXIT_FAIL if failures or ties else EXIT_OK


# ------------------------------------------------------------------- bench

def cmd_bench(args, out) -> int:
    model, law = _model_and_law(args)
    lattice = _lattice(args)
    if law.variant != POISSON:
        raise UsageError("bench compares against serial-standard and needs a Poisson law")
    for m in args.ms:
        if args.n % m:
            raise UsageError(f"subarray side {m} must divide --n {args.n}")
    rows = []
    for m in args.ms:
        cfg = EngineConfig(variant=args.engine, workers=args.pes, end_time=args.end_time)
        best_par = math.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            par = run_engine(cfg, model, lattice, law, args.seed, m=m, initial=args.init)
            best_par = min(best_par, time.perf_counter() - t0)
        best_ser = math.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            ser = run_serial_standard(model, lattice, law.rate, args.seed, math.inf,
                                      initial=args.init, max_events=par.events)
            best_ser = min(best_ser, time.perf_counter() - t0)
        matched = ser.events == par.events
        eff = measured_efficiency(best_ser, args.pes, best_par)
        row = {"engine": args.engine, "n": args.n, "m": m, "pes": args.pes,
               "events": int(par.events), "serial_events": int(ser.events),
               "events_match": matched, "serial_seconds": best_ser,
               "parallel_seconds": best_par, "efficiency": eff,
               "speedup": speedup(eff, args.pes)}
        print(" ".join(f"{k}={_fmt(v)}" for k, v in row.items()), file=out)
        rows.append(row)
    if args.csv:
        write_csv(args.csv, rows)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _common(p: argparse.ArgumentParser, n: int = 16) -> None:
    p.add_argument("--seed", type=_u64, default=1)
    p.add_argument("--dim", type=_positive_int, default=2)
    p.add_argument("--n", type=_positive_int, default=n, help="lattice side")
    p.add_argument("--model", default="ising:J=1,H=0,T=2")
    p.add_argument("--law", default="poisson:1")
    p.add_argument("--init", choices=("random", "up", "down"), default="random")
    p.add_argument("--csv", metavar="PATH")
    p.add_argument("--print-config", action="store_true",
                   help="echo the effective configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asyncca", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one engine and print its trajectory hash")
    _common(s)
    s.add_argument("--engine", choices=ENGINES, default=AGG)
    s.add_argument("--pes", type=_positive_int, default=1, help="worker threads")
    s.add_argument("--m", type=_positive_int, help="subarray side")
    s.add_argument("--end-time", type=float, default=5.0)
    s.add_argument("--lag-bound", type=_lag)
    s.add_argument("--bkl", action="store_true")
    s.add_argument("--snapshot-dt", type=float)
    s.add_argument("--frames", type=_positive_int, default=1)
    s.add_argument("--out-dir")
    s.add_argument("--jitter", type=float, default=0.0, help="random scheduling delay probability")
    s.add_argument("--record", action="store_true", help="keep events for serial-standard")
    s.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="efficiency predictors")
    _common(p, n=128)
    p.add_argument("--mode", choices=("one-cell", "aggregated"), default="one-cell")
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--rounds", type=_positive_int, default=2300)
    p.add_argument("--warmup", type=int)
    p.add_argument("--replicates", type=_positive_int, default=5)
    p.add_argument("--lag-bound", type=_lag)
    p.add_argument("--level", type=float, default=DEFAULT_LEVEL)
    p.set_defaults(func=cmd_predict, seed=0)

    v = sub.add_parser("verify", help="compare parallel engines with the serial oracle")
    _common(v)
    v.add_argument("--seeds", type=_int_list, default=[1, 2, 3])
    v.add_argument("--ms", type=_int_list, default=[4, 8])
    v.add_argument("--pes", type=_int_list, default=[1], help="worker counts")
    v.add_argument("--poisson-ms", type=_int_list, default=[])
    v.add_argument("--one-cell", action="store_true", help="also check async1 and sync1")
    v.add_argument("--end-time", type=float, default=5.0)
    v.add_argument("--jitter", type=float, default=0.0)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="serial vs parallel wall-clock efficiency")
    _common(b, n=64)
    b.add_argument("--engine", choices=(AGG, AGG_POISSON), default=AGG)
    b.add_argument("--ms", type=_int_list, default=[8, 32])
    b.add_argument("--pes", type=_positive_int, default=1, help="worker threads")
    b.add_argument("--end-time", type=float, default=2.0)
    b.add_argument("--repeats", type=_positive_int, default=1)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    _echo_config(args, out)
    if args.print_config:
        return EXIT_OK
    try:
        return args.func(args, out)
    except TieFault as exc:
        print(f"asyncca: tie fault: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"asyncca: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # UsageError and parameter checks in the library
        print(f"asyncca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
