"""Periodic lattices, q-th degree neighbourhoods and subarray partitions.

Cells and subarrays are named by row-major integers (last coordinate fastest),
so a cell keeps its id however the lattice is partitioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

VON_NEUMANN = "von_neumann"
MOORE = "moore"


@dataclass(frozen=True)
class Lattice:
    """A ``side**dim`` periodic array of cells.

    ``side`` below 3 is accepted for degenerate test cases (a single cell, a
    two-cell circle); in that case some stencil entries coincide.
    """

    dim: int
    side: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.side < 1:
            raise ValueError(f"side must be positive, got {self.side}")

    @property
    def size(self) -> int:
        return self.side ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    def check(self, c: int) -> int:
        if not 0 <= c < self.size:
            raise ValueError(f"cell id {c} outside [0, {self.size})")
        return int(c)

    def coords(self, c: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(self.check(c), self.shape))

    def cell(self, coords) -> int:
        n = self.side
        return int(np.ravel_multi_index(tuple(x % n for x in coords), self.shape))

    def offsets(self, stencil: str = VON_NEUMANN) -> list[tuple[int, ...]]:
        """First-degree displacement vectors, self excluded."""
        if stencil == VON_NEUMANN:
            out = []
            for axis in range(self.dim):
                for step in (-1, 1):
                    v = [0] * self.dim
                    v[axis] = step
                    out.append(tuple(v))
            return out
        if stencil == MOORE:
            return [v for v in product((-1, 0, 1), repeat=self.dim) if any(v)]
        raise ValueError(f"unknown stencil {stencil!r}")

    def stencil_table(self, stencil: str = VON_NEUMANN) -> np.ndarray:
        """``(N, z)`` int64 array of first-degree neighbours, duplicates kept."""
        return self._tables[stencil]

    @cached_property
    def _tables(self) -> dict[str, np.ndarray]:
        grid = np.indices(self.shape).reshape(self.dim, -1)
        out = {}
        for stencil in (VON_NEUMANN, MOORE):
            cols = []
            for off in self.offsets(stencil):
                shifted = [(grid[a] + off[a]) % self.side for a in range(self.dim)]
                cols.append(np.ravel_multi_index(shifted, self.shape))
            out[stencil] = np.stack(cols, axis=1).astype(np.int64)
        return out

    def neighbor_sets(self, stencil: str = VON_NEUMANN) -> list[tuple[int, ...]]:
        """Distinct first-degree neighbours of every cell, self excluded."""
        table = self.stencil_table(stencil)
        return [tuple(sorted(set(row) - {c})) for c, row in enumerate(table.tolist())]


def neighbors(lattice: Lattice, c: int, q: int = 1, stencil: str = VON_NEUMANN) -> frozenset[int]:
    """The q-th degree neighbourhood of ``c``, including ``c`` itself."""
    lattice.check(c)
    if q < 1:
        raise ValueError(f"neighbourhood degree must be >= 1, got {q}")
    table = lattice.stencil_table(stencil)
    reached = {int(c)}
    frontier = {int(c)}
    for _ in range(q):
        nxt = set()
        for x in frontier:
            nxt.update(table[x].tolist())
        frontier = nxt - reached
        reached |= nxt
    return frozenset(reached)


@dataclass(frozen=True)
class Partition:
    """Split of a lattice into ``m**dim`` subarrays, one per logical PE."""

    lattice: Lattice
    m: int
    q: int = 1
    stencil: str = VON_NEUMANN
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.m < 1 or self.lattice.side % self.m:
            raise ValueError(f"subarray side {self.m} must divide lattice side {self.lattice.side}")
        if self.q < 1:
            raise ValueError(f"neighbourhood degree must be >= 1, got {self.q}")

    @property
    def per_side(self) -> int:
        return self.lattice.side // self.m

    @property
    def count(self) -> int:
        return self.per_side ** self.lattice.dim

    @property
    def cells_per_subarray(self) -> int:
        return self.m ** self.lattice.dim

    @cached_property
    def owner(self) -> np.ndarray:
        """Subarray id of every cell."""
        lat = self.lattice
        grid = np.indices(lat.shape).reshape(lat.dim, -1) // self.m
        return np.ravel_multi_index(grid, (self.per_side,) * lat.dim).astype(np.int64)

    @cached_property
    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.owner, kind="stable")
        return np.split(order, self.count)

    @cached_property
    def local_coords(self) -> np.ndarray:
        lat = self.lattice
        return (np.indices(lat.shape).reshape(lat.dim, -1) % self.m).T

    def subarray_of(self, c: int) -> int:
        return int(self.owner[self.lattice.check(c)])

    def cells_of(self, C: int) -> np.ndarray:
        if not 0 <= C < self.count:
            raise ValueError(f"subarray id {C} outside [0, {self.count})")
        return self.members[C]

    @cached_property
    def w_sets(self) -> list[tuple[int, ...]]:
        owner = self.owner.tolist()
        out = []
        for c in range(self.lattice.size):
            hood = neighbors(self.lattice, c, self.q, self.stencil)
            out.append(tuple(sorted({owner[x] for x in hood} - {owner[c]})))
        return out

    def w_set(self, c: int) -> frozenset[int]:
        return frozenset(self.w_sets[self.lattice.check(c)])

    @cached_property
    def kernel_mask(self) -> np.ndarray:
        """Cells at distance >= q from every subarray edge."""
        lc = self.local_coords
        return np.all((lc >= self.q) & (lc < self.m - self.q), axis=1)

    def kernel_cells(self, C: int) -> np.ndarray:
        cells = self.cells_of(C)
        return cells[self.kernel_mask[cells]]

    def boundary_cells(self, C: int) -> np.ndarray:
        cells = self.cells_of(C)
        return cells[~self.kernel_mask[cells]]

    def pe_neighbors(self, C: int) -> tuple[int, ...]:
        """Subarrays hosting any first-degree neighbour of a cell of ``C``."""
        found = set()
        for c in self.cells_of(C).tolist():
            found.update(self.w_sets[c])
        return tuple(sorted(found))
