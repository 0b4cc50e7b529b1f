"""Bounded-lag output: a ring of B lattice frames filled cooperatively by PEs.

Frame ``K % B`` may receive snapshot ``K`` once snapshot ``K - B`` has been
drained.  A PE publishes a local time only when the frame of the next snapshot
it would have to fill is available, which caps the spread of local times at
``B * dt``.
"""

from __future__ import annotations

import math
import os
import threading
import time as _time
from typing import Callable, Optional

import numpy as np

Sink = Callable[[int, float, np.ndarray], None]


class FrameRing:
    def __init__(self, frames: int, dt: float, subarrays: int, cells: int,
                 end_time: float = math.inf, k0: int = 0):
        if frames < 1:
            raise ValueError("need at least one frame")
        if not dt > 0:
            raise ValueError("snapshot interval must be positive")
        self.B = frames
        self.dt = dt
        self.k0 = k0
        self.subarrays = subarrays
        # last snapshot index strictly before end_time
        self.k_max = (math.ceil(end_time / dt) - 1) if math.isfinite(end_time) else None
        self.frames = np.zeros((frames, cells), dtype=np.int64)
        self.fill = [0] * frames
        self.next_drain = k0
        self.emitted: list[int] = []
        self._fill_lock = threading.Lock()
        self._drain_lock = threading.Lock()

    def slot(self, K: int) -> int:
        return K % self.B

    def wanted(self, K: int) -> bool:
        return K >= self.k0 and (self.k_max is None or K <= self.k_max)

    def gated(self, K: int) -> bool:
        """Publishing past ``(K-1)*dt`` must wait for frame ``K``; one index
        beyond the last snapshot still gates, so the lag bound holds up to the end."""
        return K >= self.k0 and (self.k_max is None or K <= self.k_max + 1)

    def available(self, K: int) -> bool:
        """Frame ``K % B`` is free for snapshot ``K``."""
        return K - self.B < self.next_drain

    def store(self, K: int, cells: np.ndarray, values) -> None:
        j = self.slot(K)
        self.frames[j, cells] = values
        with self._fill_lock:
            self.fill[j] += 1

    def complete(self, K: int) -> bool:
        return self.fill[self.slot(K)] == self.subarrays

    def drain(self, sink: Optional[Sink] = None) -> list[int]:
        """Emit every complete frame in increasing K order; non-blocking."""
        if not self._drain_lock.acquire(blocking=False):
            return []
        out = []
        try:
            while self.wanted(self.next_drain) and self.complete(self.next_drain):
                K = self.next_drain
                j = self.slot(K)
                if sink is not None:
                    sink(K, K * self.dt, self.frames[j].copy())
                with self._fill_lock:
                    self.fill[j] = 0
                self.next_drain = K + 1
                self.emitted.append(K)
                out.append(K)
        finally:
            self._drain_lock.release()
        return out


def due_snapshots(ring: FrameRing, K: int, new_T: float, cells, states,
                  publish: Optional[Callable[[float], None]] = None) -> tuple[int, bool]:
    """Store every snapshot ``K`` with ``K*dt < new_T`` that a frame can take.

    Returns ``(K, finished)``; ``finished`` is False when the PE must wait for
    a frame.  ``publish`` (if given) is told ``K*dt`` before snapshot ``K`` is
    stored: all events before ``new_T`` are done, so that local time is safe.
    """
    while new_T > K * ring.dt:
        if ring.wanted(K):
            if not ring.available(K):
                return K, False
            if publish is not None:
                publish(K * ring.dt)
            ring.store(K, cells, [states[c] for c in cells])
        K += 1
    if ring.gated(K) and not ring.available(K):
        return K, False
    return K, True


def emit_due_snapshots(pe_cells, K: int, new_T: float, ring: FrameRing, states,
                       publish=None, drain: Optional[Sink] = None,
                       poll: float = 1e-4, timeout: Optional[float] = None) -> int:
    """Blocking form of :func:`due_snapshots`: wait for frames, draining if asked."""
    cells = np.asarray(pe_cells, dtype=np.int64)
    started = _time.monotonic()
    while True:
        K, done = due_snapshots(ring, K, new_T, cells, states, publish)
        if done:
            return K
        if drain is not None:
            ring.drain(drain)
        if timeout is not None and _time.monotonic() - started > timeout:
            raise TimeoutError(f"frame for snapshot {K} never became available")
        _time.sleep(poll)


def drain_complete_frames(ring: FrameRing, sink: Optional[Sink] = None) -> list[int]:
    return ring.drain(sink)


def write_pattern(image, path, time: float = 0.0) -> None:
    """Text bitmap: ``P1 <width> <height> t=<time>`` then one row of 0/1 per line."""
    img = np.asarray(image)
    if img.ndim == 1:
        img = img[None, :]
    elif img.ndim > 2:
        img = img.reshape(-1, img.shape[-1])
    bits = (img > 0).astype(np.int64)
    h, w = bits.shape
    lines = [f"P1 {w} {h} t={float(time)!r}"]
    lines += [" ".join(map(str, row)) for row in bits.tolist()]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pattern(path) -> tuple[np.ndarray, float]:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "P1" or not header[3].startswith("t="):
            raise ValueError(f"{path}: not a pattern file")
        w, h = int(header[1]), int(header[2])
        rows = [list(map(int, fh.readline().split())) for _ in range(h)]
    img = np.array(rows, dtype=np.int64)
    if img.shape != (h, w):
        raise ValueError(f"{path}: expected {h}x{w} pixels")
    return img, float(header[3][2:])


class PatternWriter:
    """Sink writing one ``pattern_K<index>.pbm`` per drained snapshot."""

    def __init__(self, out_dir, shape, bit: Callable[[int], int] | None = None):
        self.out_dir = os.fspath(out_dir)
        self.shape = tuple(shape)
        os.makedirs(self.out_dir, exist_ok=True)
        self.written: list[str] = []

    def path(self, K: int) -> str:
        return os.path.join(self.out_dir, f"pattern_K{K:06d}.pbm")

    def __call__(self, K: int, t: float, frame: np.ndarray) -> None:
        p = self.path(K)
        write_pattern(frame.reshape(self.shape), p, t)
        self.written.append(p)


class MemorySink:
    def __init__(self):
        self.frames: dict[int, tuple[float, np.ndarray]] = {}

    def __call__(self, K: int, t: float, frame: np.ndarray) -> None:
        self.frames[K] = (t, frame)
