"""BKL (n-fold way) class bookkeeping and the modified, boundary-shielded variant.

Classes are enumerated as ``[G0, G1, ..., Gd]``: ``G0`` is the fixed class
(boundary layer, weight ``|G0|``); ``G1..Gd`` hold cells whose current change
probability equals ``levels[k-1]``, in increasing order of probability.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

OUTSIDE = -1


def probability_levels(model) -> list[float]:
    if hasattr(model, "table"):
        return sorted(set(model.table.prob.tolist()))
    return [0.0, 1.0]


class ClassPartition:
    """Membership lists with back-indices for O(1) moves."""

    def __init__(self, model, table: np.ndarray, states, movable: Iterable[int],
                 fixed: Iterable[int] = (), size: int | None = None):
        self.model = model
        self.rows = table.tolist() if isinstance(table, np.ndarray) else table
        self.levels = probability_levels(model)
        self._level_id = {p: k + 1 for k, p in enumerate(self.levels)}
        n = size if size is not None else len(self.rows)
        self.cls = [OUTSIDE] * n
        self.pos = [0] * n
        self.classes: list[list[int]] = [[] for _ in range(len(self.levels) + 1)]
        for c in fixed:
            self._insert(c, 0)
        for c in movable:
            self._insert(c, self.classify(c, states))

    def _insert(self, c: int, k: int) -> None:
        members = self.classes[k]
        self.cls[c] = k
        self.pos[c] = len(members)
        members.append(c)

    def _remove(self, c: int) -> None:
        members = self.classes[self.cls[c]]
        i = self.pos[c]
        last = members.pop()
        if last != c:
            members[i] = last
            self.pos[last] = i

    def classify(self, c: int, states) -> int:
        p = self.model.change_probability(states, c, self.rows[c])
        return self._level_id[p]

    def probability(self, k: int) -> float:
        return 1.0 if k == 0 else self.levels[k - 1]

    def weights(self) -> list[float]:
        return [len(self.classes[0])] + [
            len(self.classes[k]) * self.levels[k - 1] for k in range(1, len(self.classes))
        ]

    def total_weight(self) -> float:
        return math.fsum(self.weights())

    def select(self, r1: float, r2: float) -> tuple[int, int]:
        """Class by weight (inverse CDF over the fixed enumeration), then a uniform member."""
        w = self.weights()
        total = math.fsum(w)
        if total <= 0:
            raise FrozenConfiguration()
        target = r1 * total
        acc = 0.0
        last = None
        for k, wk in enumerate(w):
            if wk <= 0:
                continue
            last = k
            acc += wk
            if target < acc:
                break
        members = self.classes[last]
        i = min(int(r2 * len(members)), len(members) - 1)
        return last, members[i]

    def update_after_change(self, c: int, states) -> None:
        """Reclassify ``c`` and its movable neighbours after ``c`` changed."""
        for x in (c, *self.rows[c]):
            k = self.cls[x]
            if k <= 0:
                continue
            nk = self.classify(x, states)
            if nk != k:
                self._remove(x)
                self._insert(x, nk)

    def audit(self, states) -> list[int]:
        """Cells whose stored class differs from a fresh classification."""
        bad = []
        for k in range(1, len(self.classes)):
            for c in self.classes[k]:
                if self.classify(c, states) != k:
                    bad.append(c)
        for k, members in enumerate(self.classes):
            for i, c in enumerate(members):
                if self.cls[c] != k or self.pos[c] != i:
                    bad.append(c)
        return bad

    def sizes(self) -> list[int]:
        return [len(m) for m in self.classes]


class FrozenConfiguration(Exception):
    """Total weight is zero: no cell can change any more."""


def classify(cell: int, states, model, table: np.ndarray) -> int:
    """Class id (1-based level index) of ``cell`` under ``model``."""
    levels = probability_levels(model)
    p = model.change_probability(states, cell, table[cell].tolist())
    return levels.index(p) + 1


def bkl_select(classes: ClassPartition, r1: float, r2: float) -> tuple[int, int]:
    return classes.select(r1, r2)


def bkl_advance_time(T: float, rate: float, classes: ClassPartition | float, r: float) -> float:
    """``T - ln(r) / (rate * W)`` where ``W`` is the total class weight."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"uniform variate must lie in (0, 1), got {r!r}")
    w = classes if isinstance(classes, (int, float)) else classes.total_weight()
    if w <= 0:
        raise FrozenConfiguration()
    nt = T - math.log(r) / (rate * w)
    return nt if nt > T else math.nextafter(T, math.inf)


def bkl_apply(selected: tuple[int, int], classes: ClassPartition, states: list,
              draw) -> tuple[int, int]:
    """Carry out the selected move; returns ``(old, new)`` for the cell.

    Movable-class cells change with certainty; fixed-class cells follow the
    model's ordinary rule, so they may stay put.
    """
    k, c = selected
    model = classes.model
    old = states[c]
    if k == 0:
        new = model.update(states, c, classes.rows[c], draw)
    else:
        new = model.forced_flip(old)
    if new != old:
        states[c] = new
        classes.update_after_change(c, states)
    return old, new


def kernel_and_boundary(partition, C: int) -> tuple[Sequence[int], Sequence[int]]:
    return partition.kernel_cells(C).tolist(), partition.boundary_cells(C).tolist()
