"""Event records shared by all engines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels


class TieFault(RuntimeError):
    """Two neighbouring arrivals fell on the same instant (bit-equal times)."""

    def __init__(self, time: float, cells):
        self.time = time
        self.cells = tuple(cells)
        super().__init__(f"neighbouring arrivals tie at t={time!r} between {self.cells}")


class InvariantViolation(AssertionError):
    pass


@dataclass
class Trajectory:
    """Time-ordered committed arrivals ``(time, cell, old, new)``.

    No-op arrivals are kept; only BKL-style engines omit rejected attempts.
    Kernel-backed runs may carry no events, only counts and the hash.
    """

    initial: np.ndarray
    final: np.ndarray
    end_time: float
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    cells: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    old: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    new: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    stats: dict = field(default_factory=dict)
    event_count: Optional[int] = None
    _hash: Optional[int] = None

    @classmethod
    def from_events(cls, initial, final, end_time, events, stats=None) -> "Trajectory":
        """Build from an unordered list of ``(time, cell, old, new)`` tuples."""
        events = sorted(events, key=lambda e: (e[0], e[1]))
        if events:
            t, c, o, n = zip(*events)
        else:
            t = c = o = n = ()
        return cls(
            initial=np.asarray(initial), final=np.asarray(final), end_time=end_time,
            times=np.asarray(t, dtype=np.float64), cells=np.asarray(c, dtype=np.int64),
            old=np.asarray(o, dtype=np.int64), new=np.asarray(n, dtype=np.int64),
            stats=dict(stats or {}),
        )

    @property
    def events(self) -> int:
        return self.event_count if self.event_count is not None else len(self.times)

    @property
    def changes(self) -> int:
        return int(np.count_nonzero(self.old != self.new))

    @property
    def hash(self) -> int:
        if self._hash is None:
            self._hash = int(kernels.hash_events(self.times, self.cells, self.new))
        return self._hash

    def configuration_at(self, t: float) -> np.ndarray:
        """Lattice state just after every event with time <= ``t``."""
        if len(self.times) == 0 and self.events:
            raise ValueError("trajectory was run without event recording")
        conf = np.array(self.initial, copy=True)
        k = int(np.searchsorted(self.times, t, side="right"))
        conf[self.cells[:k]] = self.new[:k]
        return conf

    def first_divergence(self, other: "Trajectory") -> Optional[int]:
        n = min(len(self.times), len(other.times))
        for i in range(n):
            a = (self.times[i], self.cells[i], self.old[i], self.new[i])
            b = (other.times[i], other.cells[i], other.old[i], other.new[i])
            if a != b:
                return i
        return None if len(self.times) == len(other.times) else n

    def event(self, i: int) -> tuple:
        return (float(self.times[i]), int(self.cells[i]), int(self.old[i]), int(self.new[i]))
