"""Time the compiled kernels against the pure-Python fallback.

Both backends must return identical results; the script checks that before
reporting the speed ratio.  Usage: ``python3 benchmarks/bench_kernels.py [--csv out.csv]``.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from asyncca import _pykernels as py
from asyncca.models import IsingModel, IsingParams
from asyncca.rand_streams import SCALAR_STANDARD, StreamKind
from asyncca.topology import Lattice

try:
    from asyncca import _kernels as cy
except ImportError:
    sys.exit("compiled extension not built; run: python3 setup.py build_ext --inplace")


def _best(fn, repeats):
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return bool(np.array_equal(np.asarray(a), np.asarray(b)))


def cases(scale: float):
    lat = Lattice(2, 16)
    nbr = lat.stencil_table()
    prob = IsingModel(IsingParams(T=2.0)).table.prob
    key = py.stream_key(1, int(StreamKind.SCALAR), SCALAR_STANDARD)
    spins0 = np.where(py.uniforms(np.full(lat.size, key, np.uint64),
                                  np.arange(lat.size, dtype=np.uint64)) < 0.5, 1, -1).astype(np.int8)
    nevents = int(2e5 * scale)

    def glauber(mod):
        return lambda: mod.glauber_standard(spins0.copy(), nbr, prob, 1.0, key, 0, 0.0,
                                            float("inf"), nevents, 1, None)

    lat1 = Lattice(2, 64)
    nbr1 = lat1.stencil_table()
    keys1 = py.stream_keys(3, int(StreamKind.CELL), np.arange(lat1.size))
    r1 = max(10, int(300 * scale))
    keys_pe = py.stream_keys(3, int(StreamKind.PE), np.arange(32 * 32))
    r2 = max(10, int(1000 * scale))
    rng = np.random.default_rng(0)
    ne = int(2e5 * scale)
    times = np.sort(rng.random(ne))
    cells = rng.integers(0, 4096, ne)
    states = rng.integers(-1, 2, ne)
    yield "glauber_standard", f"{nevents} events 16x16", glauber(py), glauber(cy)
    yield ("one_cell_rounds", f"{r1} rounds 64x64",
           lambda: py.one_cell_rounds(nbr1, keys1, py.LAW_POISSON, 1.0, r1),
           lambda: cy.one_cell_rounds(nbr1, keys1, py.LAW_POISSON, 1.0, r1))
    yield ("aggregated_rounds", f"{r2} rounds 32x32 PEs",
           lambda: py.aggregated_rounds(32, 12, keys_pe, r2, -1.0),
           lambda: cy.aggregated_rounds(32, 12, keys_pe, r2, -1.0))
    yield ("hash_events", f"{ne} events",
           lambda: py.hash_events(times, cells, states),
           lambda: cy.hash_events(times, cells, states))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="multiply the workload sizes")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    rows = []
    print(f"{'kernel':<20}{'workload':<24}{'python s':>11}{'cython s':>11}{'ratio':>9}  equal")
    for name, work, fpy, fcy in cases(args.scale):
        tp, op = _best(fpy, args.repeats)
        tc, oc = _best(fcy, args.repeats)
        eq = _same(op, oc)
        rows.append({"kernel": name, "workload": work, "python_s": tp, "cython_s": tc,
                     "ratio": tp / tc, "equal": eq})
        print(f"{name:<20}{work:<24}{tp:>11.4f}{tc:>11.4f}{tp / tc:>9.1f}  {eq}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return 0 if all(r["equal"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
