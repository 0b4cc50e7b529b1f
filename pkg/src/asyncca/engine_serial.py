"""Serial reference simulators.

``run_serial_eventlist`` is the exact-trajectory oracle for the general
parallel engines: it always processes the globally earliest pending arrival.
"""

from __future__ import annotations

import heapq
import math
from typing import Optional

import numpy as np

from . import kernels
from .asynchrony import ArrivalLaw, next_arrival
from .bkl import ClassPartition, FrozenConfiguration
from .models import IsingModel
from .rand_streams import SCALAR_BKL, SCALAR_INIT, SCALAR_STANDARD, StreamKind, scalar_stream
from .topology import Lattice
from .trajectory import TieFault, Trajectory


def initial_configuration(model, lattice: Lattice, seed: int, kind: str = "random") -> np.ndarray:
    """Start state per cell; ``random`` reads one draw per cell from the init stream."""
    n = lattice.size
    if kind == "up":
        return np.ones(n, dtype=np.int64)
    if kind == "down":
        return np.full(n, -1 if isinstance(model, IsingModel) else 0, dtype=np.int64)
    if kind != "random":
        raise ValueError(f"unknown initial configuration {kind!r}")
    key = kernels.stream_key(seed, int(StreamKind.SCALAR), SCALAR_INIT)
    u = kernels.uniforms(np.full(n, key, dtype=np.uint64), np.arange(n, dtype=np.uint64))
    return np.array([model.initial_state(x) for x in u.tolist()], dtype=np.int64)


def _start(model, lattice, seed, initial):
    if initial is None:
        return initial_configuration(model, lattice, seed)
    if isinstance(initial, str):
        return initial_configuration(model, lattice, seed, initial)
    conf = np.asarray(initial, dtype=np.int64).ravel()
    if conf.size != lattice.size:
        raise ValueError("initial configuration does not match the lattice")
    return conf.copy()


class CellStreams:
    """Per-cell counter-based streams, stored as parallel key/counter lists."""

    def __init__(self, seed: int, n: int):
        self.keys = kernels.stream_keys(seed, int(StreamKind.CELL), np.arange(n)).tolist()
        self.counters = [0] * n
        self._u = kernels.uniform

    def draw(self, c: int) -> float:
        k = self.counters[c]
        self.counters[c] = k + 1
        return self._u(self.keys[c], k)

    def drawer(self, c: int):
        return lambda: self.draw(c)


def first_arrivals(law: ArrivalLaw, streams: CellStreams, n: int):
    """Per-cell law parameter and first arrival time from t = 0."""
    params, times = [], []
    for c in range(n):
        d = streams.drawer(c)
        p = law.cell_parameter(d)
        params.append(p)
        times.append(next_arrival(law, 0.0, d(), d, p))
    return params, times


def run_serial_standard(model, lattice: Lattice, rate: float, seed: int, end_time: float,
                        initial=None, record: bool = True,
                        max_events: Optional[int] = None) -> Trajectory:
    """Cumulative Poisson stream of rate ``rate * N``; each arrival picks a cell uniformly.

    Draws come from one scalar stream in the order (time, cell, state).  With
    ``record=False`` an Ising run goes through the compiled kernel and only
    counts, the hash and the final configuration are kept.
    """
    conf = _start(model, lattice, seed, initial)
    n = lattice.size
    stream = scalar_stream(seed, SCALAR_STANDARD)
    table = lattice.stencil_table(model.stencil)
    limit = -1 if max_events is None else int(max_events)
    if not record and isinstance(model, IsingModel):
        spins = conf.astype(np.int8)
        t, _, events, flips, _, h = kernels.glauber_standard(
            spins, table, model.table.prob, float(rate), stream.key, 0, 0.0,
            float(end_time), limit, 1, None)
        return Trajectory(initial=conf, final=spins.astype(np.int64), end_time=end_time,
                          event_count=int(events), _hash=int(h),
                          stats={"flips": int(flips), "clock": float(t)})
    rows = table.tolist()
    states = conf.tolist()
    events = []
    t = 0.0
    total = rate * n
    draw = stream.next_uniform
    while limit < 0 or len(events) < limit:
        nt = t - math.log(draw()) / total
        if nt >= end_time:
            t = end_time
            break
        t = nt
        c = min(int(draw() * n), n - 1)
        old = states[c]
        new = model.update(states, c, rows[c], draw)
        states[c] = new
        events.append((t, c, old, new))
    traj = Trajectory.from_events(conf, np.array(states), end_time, events, {"clock": t})
    traj.stats["flips"] = traj.changes
    return traj


def run_serial_eventlist(model, lattice: Lattice, law: ArrivalLaw, seed: int, end_time: float,
                         initial=None, on_tie: str = "raise") -> Trajectory:
    """Process per-cell arrivals in global time order (binary heap over t(c)).

    A pending arrival bit-equal to a neighbour's raises :class:`TieFault`
    (or is only counted with ``on_tie="count"``).
    """
    conf = _start(model, lattice, seed, initial)
    n = lattice.size
    rows = lattice.stencil_table(model.stencil).tolist()
    nbrs = lattice.neighbor_sets(model.stencil)
    streams = CellStreams(seed, n)
    params, tnext = first_arrivals(law, streams, n)
    heap = [(tnext[c], c) for c in range(n)]
    heapq.heapify(heap)
    states = conf.tolist()
    events = []
    ties = 0
    while heap:
        t, c = heap[0]
        if t >= end_time:
            break
        for j in nbrs[c]:
            if tnext[j] == t:
                if on_tie == "raise":
                    raise TieFault(t, (c, j))
                ties += 1
        d = streams.drawer(c)
        old = states[c]
        new = model.update(states, c, rows[c], d)
        states[c] = new
        events.append((t, c, old, new))
        nt = next_arrival(law, t, d(), d, params[c])
        tnext[c] = nt
        heapq.heapreplace(heap, (nt, c))
    return Trajectory.from_events(conf, np.array(states), end_time, events, {"ties": ties})


def run_serial_bkl(model, lattice: Lattice, rate: float, seed: int, end_time: float,
                   initial=None) -> Trajectory:
    """Rejection-free serial dynamics; every recorded event is a realised change.

    Per step: time increment from the current total weight, then class, then
    cell (scalar stream, that draw order).  A frozen configuration ends the
    run with the clock jumped to ``end_time``.
    """
    conf = _start(model, lattice, seed, initial)
    n = lattice.size
    table = lattice.stencil_table(model.stencil)
    states = conf.tolist()
    classes = ClassPartition(model, table, states, movable=range(n))
    stream = scalar_stream(seed, SCALAR_BKL)
    draw = stream.next_uniform
    events = []
    t = 0.0
    frozen = False
    while True:
        w = classes.total_weight()
        if w <= 0:
            frozen = True
            break
        nt = t - math.log(draw()) / (rate * w)
        if nt >= end_time:
            break
        t = nt
        try:
            k, c = classes.select(draw(), draw())
        except FrozenConfiguration:  # pragma: no cover - guarded by w above
            frozen = True
            break
        old = states[c]
        new = model.forced_flip(old)
        states[c] = new
        classes.update_after_change(c, states)
        events.append((t, c, old, new))
    return Trajectory.from_events(conf, np.array(states), end_time, events,
                                  {"frozen": frozen, "clock": end_time})
