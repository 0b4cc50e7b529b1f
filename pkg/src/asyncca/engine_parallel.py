"""Conservative parallel engines.

Logical PEs are cooperative state machines multiplexed over a pool of worker
threads.  A PE's only shared outputs are its published local time ``T[C]`` and
the states of its own cells; it writes a state before publishing the time that
exposes it.  A PE whose wait condition fails returns ``BLOCKED`` and its
worker moves on, so fewer workers than PEs never deadlocks.
"""

from __future__ import annotations

import heapq
import math
import random
import threading
import time as _time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .asynchrony import POISSON, ArrivalLaw, cumulative_next_arrival, next_arrival
from .bkl import ClassPartition
from .engine_serial import CellStreams, _start, first_arrivals
from .rand_streams import pe_stream
from .snapshots import FrameRing, Sink, due_snapshots
from .topology import Lattice, Partition
from .trajectory import InvariantViolation, TieFault, Trajectory

ASYNC1 = "async1"
SYNC1 = "sync1"
AGG = "agg"
AGG_POISSON = "agg-poisson"
VARIANTS = (ASYNC1, SYNC1, AGG, AGG_POISSON)

PROGRESS, BLOCKED, DONE = 0, 1, 2


@dataclass
class EngineConfig:
    variant: str = AGG
    workers: int = 1
    end_time: float = 1.0
    lag_bound: Optional[float] = None
    snapshot_dt: Optional[float] = None
    frames: int = 1
    sink: Optional[Sink] = None
    bkl: bool = False
    jitter: float = 0.0
    jitter_seed: int = 0
    check_invariants: bool = False
    budget: int = 32

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown engine variant {self.variant!r}")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.lag_bound is not None and self.snapshot_dt is not None:
            raise ValueError("give either a lag bound or snapshot frames, not both")
        if self.lag_bound is not None and not self.lag_bound > 0:
            raise ValueError("lag bound must be positive")
        if self.bkl and self.variant != AGG_POISSON:
            raise ValueError("BKL runs only inside the aggregated Poisson engine")

    def ring(self, partition: Partition) -> Optional[FrameRing]:
        if self.lag_bound is not None:
            return FrameRing(1, self.lag_bound, partition.count, partition.lattice.size,
                             self.end_time)
        if self.snapshot_dt is not None:
            return FrameRing(self.frames, self.snapshot_dt, partition.count,
                             partition.lattice.size, self.end_time)
        return None


def wait_until(local: float, observed, tie: str = "fault", me: int = 0, ids=None) -> bool:
    """Proceed iff ``local`` does not exceed any observed neighbour time.

    ``tie="fault"`` raises :class:`TieFault` on bit equality; ``tie="order"``
    lets the smaller PE id go first; ``tie="allow"`` proceeds.
    """
    for i, v in enumerate(observed):
        if v < local:
            return False
        if v == local:
            if tie == "fault":
                raise TieFault(local, (me, ids[i] if ids else i))
            if tie == "order" and (ids[i] if ids else i) < me:
                return False
    return True


class _Shared:
    def __init__(self, cfg: EngineConfig, partition: Partition, states: list,
                 ring: Optional[FrameRing]):
        self.cfg = cfg
        self.partition = partition
        self.states = states
        self.T = [0.0] * partition.count
        self.ring = ring
        self.error: Optional[BaseException] = None
        self.abort = False
        self.max_lag = 0.0
        self.end_time = cfg.end_time

    def fail(self, exc: BaseException) -> None:
        if self.error is None:
            self.error = exc
        self.abort = True


class _PE:
    """Common publication/snapshot logic for aggregated PEs."""

    tie = "fault"

    def __init__(self, C: int, shared: _Shared):
        self.C = C
        self.sh = shared
        self.cells = shared.partition.cells_of(C)
        self.cell_list = self.cells.tolist()
        self.events: list[tuple] = []
        self.target: Optional[float] = None
        self.K = shared.ring.k0 if shared.ring else 0
        self.done = False
        self.published = 0.0
        self.jit = random.Random((shared.cfg.jitter_seed << 20) ^ C) if shared.cfg.jitter else None

    def _publish(self, value: float) -> None:
        if value < self.published:
            raise InvariantViolation(f"PE {self.C} local time decreased {self.published} -> {value}")
        self.published = value
        self.sh.T[self.C] = value
        if self.sh.ring is not None and self.sh.cfg.check_invariants and value < self.sh.end_time:
            lag = value - min(self.sh.T)
            if lag > self.sh.max_lag:
                self.sh.max_lag = lag

    def _advance(self) -> bool:
        """Try to move the local time to ``self.target``; False when blocked on a frame."""
        new_T = self.target
        ring = self.sh.ring
        if ring is not None:
            self.K, ok = due_snapshots(ring, self.K, new_T, self.cells, self.sh.states,
                                       self._publish)
            if not ok:
                return False
        self._publish(new_T)
        self.target = None
        if new_T >= self.sh.end_time:
            self.done = True
        return True

    def _neighbours_allow(self, t: float, pes) -> bool:
        T = self.sh.T
        for Cn in pes:
            if self.jit is not None and self.jit.random() < self.sh.cfg.jitter:
                _time.sleep(self.jit.random() * 1e-4)
            v = T[Cn]
            if v < t:
                return False
            if v == t:
                if self.tie == "fault":
                    raise TieFault(t, (self.C, Cn))
                if Cn < self.C:
                    return False
        return True

    def step(self, budget: int) -> int:
        progressed = False
        for _ in range(budget):
            if self.target is not None:
                if not self._advance():
                    return PROGRESS if progressed else BLOCKED
                progressed = True
            if self.done:
                return DONE
            if not self._event():
                return PROGRESS if progressed else BLOCKED
            progressed = True
        return PROGRESS


class _GeneralPE(_PE):
    """Earliest pending cell first; per-cell streams; trajectory independent of the partition."""

    def __init__(self, C, shared, model, law, streams, params, tnext, rows, wsets):
        super().__init__(C, shared)
        self.model = model
        self.law = law
        self.streams = streams
        self.params = params
        self.tnext = tnext
        self.rows = rows
        self.wsets = wsets
        self.heap = [(tnext[c], c) for c in self.cell_list]
        heapq.heapify(self.heap)
        self.target = self.heap[0][0]

    def _event(self) -> bool:
        t, c = self.heap[0]
        if not self._neighbours_allow(t, self.wsets[c]):
            return False
        states = self.sh.states
        d = self.streams.drawer(c)
        old = states[c]
        new = self.model.update(states, c, self.rows[c], d)
        states[c] = new
        self.events.append((t, c, old, new))
        nt = next_arrival(self.law, t, d(), d, self.params[c])
        self.tnext[c] = nt
        heapq.heapreplace(self.heap, (nt, c))
        self.target = self.heap[0][0]
        if self.sh.cfg.check_invariants:
            low = min(self.tnext[x] for x in self.cell_list)
            if low < self.target or self.target < self.published:
                raise InvariantViolation(f"PE {self.C}: t(c) below local time")
        return True


class _PoissonPE(_PE):
    """One cumulative stream of rate ``rate * cells`` per PE; cells drawn uniformly."""

    tie = "order"

    def __init__(self, C, shared, model, rate, seed, rows, wsets):
        super().__init__(C, shared)
        self.model = model
        self.rate = rate
        self.rows = rows
        self.wsets = wsets
        self.stream = pe_stream(seed, C)
        self.k = len(self.cell_list)
        self.selected: Optional[int] = None
        self.target = cumulative_next_arrival(rate, self.k, 0.0, self.stream.next_uniform())

    def _event(self) -> bool:
        t = self.published
        draw = self.stream.next_uniform
        if self.selected is None:
            self.selected = self.cell_list[min(int(draw() * self.k), self.k - 1)]
        c = self.selected
        if not self._neighbours_allow(t, self.wsets[c]):
            return False
        states = self.sh.states
        old = states[c]
        new = self.model.update(states, c, self.rows[c], draw)
        states[c] = new
        self.events.append((t, c, old, new))
        self.selected = None
        self.target = cumulative_next_arrival(self.rate, self.k, t, draw())
        return True


class _BklPE(_PE):
    """Modified BKL: rejection-free kernel classes shielded by a fixed boundary class."""

    tie = "order"

    def __init__(self, C, shared, model, rate, seed, rows, wsets):
        super().__init__(C, shared)
        self.model = model
        self.rate = rate
        self.rows = rows
        self.wsets = wsets
        self.stream = pe_stream(seed, C)
        part = shared.partition
        kernel = part.kernel_cells(C).tolist()
        boundary = part.boundary_cells(C).tolist()
        self.classes = ClassPartition(model, rows, shared.states, movable=kernel,
                                      fixed=boundary, size=part.lattice.size)
        self.selected: Optional[tuple[int, int]] = None
        self.kernel_picks = 0
        self.boundary_picks = 0
        self.rejected_kernel = 0
        self.audit_failures = 0
        self.target = self._next_time(0.0)

    def _next_time(self, t: float) -> float:
        w = self.classes.total_weight()
        r = self.stream.next_uniform()
        if w <= 0:
            return max(self.sh.end_time, t)
        nt = t - math.log(r) / (self.rate * w)
        return nt if nt > t else math.nextafter(t, math.inf)

    def _event(self) -> bool:
        t = self.published
        draw = self.stream.next_uniform
        if self.selected is None:
            self.selected = self.classes.select(draw(), draw())
        k, c = self.selected
        if k == 0 and not self._neighbours_allow(t, self.wsets[c]):
            return False
        states = self.sh.states
        old = states[c]
        if k == 0:
            new = self.model.update(states, c, self.rows[c], draw)
            self.boundary_picks += 1
        else:
            new = self.model.forced_flip(old)
            self.kernel_picks += 1
            if new == old:
                self.rejected_kernel += 1
        if new != old:
            states[c] = new
            self.classes.update_after_change(c, states)
        self.events.append((t, c, old, new))
        self.selected = None
        if self.sh.cfg.check_invariants and self.classes.audit(states):
            self.audit_failures += 1
            raise InvariantViolation(f"PE {self.C}: BKL class audit failed after event at {t}")
        self.target = self._next_time(t)
        return True


def _worker(pes: list, shared: _Shared, cfg: EngineConfig, wid: int) -> None:
    active = list(pes)
    idle = 0
    jit = random.Random(cfg.jitter_seed * 7919 + wid) if cfg.jitter else None
    try:
        while active and not shared.abort:
            progressed = False
            still = []
            for pe in active:
                status = pe.step(cfg.budget)
                if status == DONE:
                    continue
                still.append(pe)
                if status == PROGRESS:
                    progressed = True
                if jit is not None and jit.random() < cfg.jitter:
                    _time.sleep(jit.random() * 1e-4)
            if shared.ring is not None and shared.ring.drain(cfg.sink):
                progressed = True
            active = still
            if progressed:
                idle = 0
            else:
                # bounded backoff; sleep(0) just yields to the other workers
                _time.sleep(0 if idle < 8 else min(1e-3, 1e-6 * 2 ** (idle - 8)))
                idle += 1
    except BaseException as exc:  # propagate to the caller thread
        shared.fail(exc)


def _run_pool(pes: list, shared: _Shared, cfg: EngineConfig) -> None:
    groups = [pes[i::cfg.workers] for i in range(cfg.workers)]
    groups = [g for g in groups if g]
    if len(groups) == 1:
        _worker(groups[0], shared, cfg, 0)
    else:
        threads = [threading.Thread(target=_worker, args=(g, shared, cfg, i), daemon=True)
                   for i, g in enumerate(groups)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    if shared.error is not None:
        raise shared.error
    if shared.ring is not None:
        shared.ring.drain(cfg.sink)


def _finish(conf, shared: _Shared, pes, cfg: EngineConfig, extra=None) -> Trajectory:
    events = [e for pe in pes for e in pe.events]
    stats = {"pes": len(pes), "workers": cfg.workers, "variant": cfg.variant}
    if shared.ring is not None:
        stats["snapshots"] = list(shared.ring.emitted)
        if cfg.check_invariants:
            stats["max_lag"] = shared.max_lag
    stats.update(extra or {})
    return Trajectory.from_events(conf, np.array(shared.states), cfg.end_time, events, stats)


def _general(cfg, model, partition, law, seed, initial):
    lattice = partition.lattice
    conf = _start(model, lattice, seed, initial)
    states = conf.tolist()
    shared = _Shared(cfg, partition, states, cfg.ring(partition))
    n = lattice.size
    streams = CellStreams(seed, n)
    params, tnext = first_arrivals(law, streams, n)
    rows = lattice.stencil_table(model.stencil).tolist()
    wsets = partition.w_sets
    pes = [_GeneralPE(C, shared, model, law, streams, params, tnext, rows, wsets)
           for C in range(partition.count)]
    _run_pool(pes, shared, cfg)
    return _finish(conf, shared, pes, cfg)


def run_aggregated_general(config: EngineConfig, model, partition: Partition,
                           law: ArrivalLaw, seed: int, initial=None) -> Trajectory:
    """Each PE repeatedly takes its earliest pending cell and updates it once
    every neighbouring PE that hosts part of the cell's neighbourhood has
    caught up.  Neighbour-time ties raise :class:`TieFault`."""
    if partition.q != model.q or partition.stencil != model.stencil:
        raise ValueError("partition neighbourhood does not match the model's")
    return _general(config, model, partition, law, seed, initial)


def run_async_one_cell(config: EngineConfig, model, lattice: Lattice, law: ArrivalLaw,
                       seed: int, initial=None) -> Trajectory:
    """One logical PE per cell, waiting on all neighbours (aggregation with m = 1)."""
    return _general(config, model, Partition(lattice, 1, model.q, model.stencil), law,
                    seed, initial)


def run_aggregated_poisson(config: EngineConfig, model, partition: Partition, rate: float,
                           seed: int, initial=None) -> Trajectory:
    """Cumulative per-PE Poisson stream with uniform cell choice.

    Reproducible for a fixed partition; a different partition gives a
    different (equally valid) trajectory.  With ``config.bkl`` each PE runs
    the modified BKL procedure on its kernel.
    """
    if partition.q != model.q or partition.stencil != model.stencil:
        raise ValueError("partition neighbourhood does not match the model's")
    lattice = partition.lattice
    conf = _start(model, lattice, seed, initial)
    states = conf.tolist()
    shared = _Shared(config, partition, states, config.ring(partition))
    rows = lattice.stencil_table(model.stencil).tolist()
    wsets = partition.w_sets
    cls = _BklPE if config.bkl else _PoissonPE
    pes = [cls(C, shared, model, rate, seed, rows, wsets) for C in range(partition.count)]
    _run_pool(pes, shared, config)
    extra = {}
    if config.bkl:
        extra = {
            "kernel_selections": sum(p.kernel_picks for p in pes),
            "boundary_selections": sum(p.boundary_picks for p in pes),
            "rejected_kernel_moves": sum(p.rejected_kernel for p in pes),
        }
    return _finish(conf, shared, pes, config, extra)


def run_sync_one_cell(config: EngineConfig, model, lattice: Lattice, law: ArrivalLaw,
                      seed: int, initial=None) -> Trajectory:
    """Round-structured engine with two barriers per round.

    Eligible cells compute into private buffers, everyone meets at barrier 1,
    eligible cells publish, everyone meets at barrier 2.  Simultaneous
    neighbour updates therefore both see the states from just before.
    """
    conf = _start(model, lattice, seed, initial)
    n = lattice.size
    states = conf.tolist()
    rows = lattice.stencil_table(model.stencil).tolist()
    nbrs = lattice.neighbor_sets(model.stencil)
    streams = CellStreams(seed, n)
    params, t = first_arrivals(law, streams, n)
    end = config.end_time
    workers = min(config.workers, n)
    barrier = threading.Barrier(workers)
    slices = [list(range(i, n, workers)) for i in range(workers)]
    logs: list[list] = [[] for _ in range(workers)]
    eligible_per_round: list[int] = []
    counts = [0] * workers
    errors: list[BaseException] = []
    jitter = config.jitter

    def work(wid: int) -> None:
        mine = slices[wid]
        log = logs[wid]
        jit = random.Random(config.jitter_seed * 31 + wid) if jitter else None
        try:
            while True:
                pending = []
                for c in mine:
                    tc = t[c]
                    if tc >= end:
                        continue
                    if all(t[j] >= tc for j in nbrs[c]):
                        d = streams.drawer(c)
                        new_s = model.update(states, c, rows[c], d)
                        new_t = next_arrival(law, tc, d(), d, params[c])
                        pending.append((c, tc, new_s, new_t))
                if jit is not None and jit.random() < jitter:
                    _time.sleep(jit.random() * 1e-4)
                counts[wid] = len(pending)
                barrier.wait()  # barrier 1
                for c, tc, new_s, new_t in pending:
                    log.append((tc, c, states[c], new_s))
                    states[c] = new_s
                    t[c] = new_t
                if wid == 0:
                    eligible_per_round.append(sum(counts))
                barrier.wait()  # barrier 2
                # no writes happen before the next barrier 1, so this read is stable
                if min(t) >= end:
                    break
        except threading.BrokenBarrierError:
            pass
        except BaseException as exc:
            errors.append(exc)
            barrier.abort()

    if workers == 1:
        work(0)
    else:
        threads = [threading.Thread(target=work, args=(i,), daemon=True) for i in range(workers)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    if errors:
        raise errors[0]
    events = [e for log in logs for e in log]
    stats = {"rounds": len(eligible_per_round), "eligible_per_round": eligible_per_round,
             "workers": workers, "variant": SYNC1}
    return Trajectory.from_events(conf, np.array(states), end, events, stats)


def run_engine(config: EngineConfig, model, lattice: Lattice, law: ArrivalLaw, seed: int,
               m: Optional[int] = None, initial=None) -> Trajectory:
    """Dispatch on ``config.variant``; ``m`` is the subarray side for aggregated runs."""
    v = config.variant
    if v == ASYNC1:
        return run_async_one_cell(config, model, lattice, law, seed, initial)
    if v == SYNC1:
        return run_sync_one_cell(config, model, lattice, law, seed, initial)
    part = Partition(lattice, m or lattice.side, model.q, model.stencil)
    if v == AGG:
        return run_aggregated_general(config, model, part, law, seed, initial)
    if law.variant != POISSON:
        raise ValueError("the aggregated Poisson engine needs a Poisson arrival law")
    return run_aggregated_poisson(config, model, part, law.rate, seed, initial)
