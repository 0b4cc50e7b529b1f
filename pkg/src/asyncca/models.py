"""Cell next-state rules: Glauber Ising dynamics and asynchronous Life."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .topology import MOORE, VON_NEUMANN


@dataclass(frozen=True)
class IsingParams:
    J: float = 1.0
    H: float = 0.0
    T: float = 1.0

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got {self.T}")


@dataclass(frozen=True)
class FlipTable:
    """Flip probabilities indexed by ``ising_index``; ``z`` neighbours per cell."""

    prob: np.ndarray
    z: int = 4

    def __len__(self) -> int:
        return len(self.prob)

    def p(self, s: int, total: int) -> float:
        return float(self.prob[ising_index(s, total, self.z)])


def energy_change(params: IsingParams, s: int, total: int) -> float:
    """Energy cost of flipping spin ``s`` whose neighbours sum to ``total``."""
    return 2.0 * (params.J * s * total + params.H * s)


def flip_probability(params: IsingParams, s: int, total: int) -> float:
    dE = energy_change(params, s, total)
    if dE >= 0:
        x = math.exp(-dE / params.T)
        return x / (1.0 + x)
    # same value, written to stay finite when exp(-dE/T) overflows
    return 1.0 / (1.0 + math.exp(dE / params.T))


def flip_table(params: IsingParams, z: int = 4) -> FlipTable:
    """``2(z+1)`` entries: own spin in {-1, +1} times neighbour sum in {-z, ..., z}."""
    if not params.T > 0:
        raise ValueError(f"temperature must be positive, got {params.T}")
    prob = np.empty(2 * (z + 1))
    for j, s in enumerate((-1, 1)):
        for i in range(z + 1):
            prob[i + (z + 1) * j] = flip_probability(params, s, 2 * i - z)
    return FlipTable(prob, z)


def ising_index(s: int, total: int, z: int = 4) -> int:
    if s not in (-1, 1):
        raise ValueError(f"spin must be -1 or +1, got {s!r}")
    if not (-z <= total <= z and (total + z) % 2 == 0):
        raise ValueError(f"neighbour sum {total!r} impossible for {z} neighbours")
    return (total + z) // 2 + (z + 1) * (s + 1) // 2


def ising_next_state(s: int, neighbor_spins: Sequence[int], table: FlipTable, r: float) -> int:
    if r < table.prob[ising_index(s, int(sum(neighbor_spins)), table.z)]:
        return -s
    return s


def life_next_state(s: int, neighbor_states: Sequence[int]) -> int:
    alive = int(sum(neighbor_states))
    if s:
        return 1 if alive in (2, 3) else 0
    return 1 if alive == 3 else 0


class IsingModel:
    """Stochastic spin flips with heat-bath (Glauber) probabilities."""

    name = "ising"
    stencil = VON_NEUMANN
    q = 1
    stochastic = True

    def __init__(self, params: IsingParams = IsingParams(), dim: int = 2):
        self.params = params
        self.dim = dim
        self.z = 2 * dim
        self.table = flip_table(params, self.z)
        self._prob = self.table.prob.tolist()

    def __repr__(self) -> str:
        p = self.params
        return f"ising:J={p.J:g},H={p.H:g},T={p.T:g}"

    def initial_state(self, u: float) -> int:
        return 1 if u < 0.5 else -1

    def index(self, states, c: int, row) -> int:
        total = 0
        for j in row:
            total += states[j]
        s = states[c]
        return (total + self.z) // 2 + (self.z + 1) * (s + 1) // 2

    def update(self, states, c: int, row, draw: Callable[[], float]) -> int:
        s = states[c]
        return -s if draw() < self._prob[self.index(states, c, row)] else s

    def change_probability(self, states, c: int, row) -> float:
        return self._prob[self.index(states, c, row)]

    def forced_flip(self, s: int) -> int:
        return -s

    def bit(self, s: int) -> int:
        return 1 if s > 0 else 0


class LifeModel:
    """Conway's rule applied to one cell at its own arrival instant."""

    name = "life"
    stencil = MOORE
    q = 1
    stochastic = False

    def __init__(self, density: float = 0.3):
        self.dim = 2
        self.density = density

    def __repr__(self) -> str:
        return "life"

    def initial_state(self, u: float) -> int:
        return 1 if u < self.density else 0

    def update(self, states, c: int, row, draw=None) -> int:
        alive = 0
        for j in row:
            alive += states[j]
        if states[c]:
            return 1 if alive == 2 or alive == 3 else 0
        return 1 if alive == 3 else 0

    def change_probability(self, states, c: int, row) -> float:
        return 1.0 if self.update(states, c, row) != states[c] else 0.0

    def forced_flip(self, s: int) -> int:
        return 1 - s

    def bit(self, s: int) -> int:
        return 1 if s else 0


def parse_model(text: str, dim: int = 2):
    """``ising:J=<f>,H=<f>,T=<f>`` (any subset of keys) or ``life``."""
    name, _, arg = text.strip().partition(":")
    if name == "life":
        if arg:
            raise ValueError(f"life takes no parameters: {text!r}")
        if dim != 2:
            raise ValueError("life is defined on 2-D lattices only")
        return LifeModel()
    if name == "ising":
        kw = {}
        for part in filter(None, arg.split(",")):
            key, eq, val = part.partition("=")
            if not eq or key not in ("J", "H", "T"):
                raise ValueError(f"bad ising parameter {part!r}")
            kw[key] = float(val)
        return IsingModel(IsingParams(**kw), dim=dim)
    raise ValueError(f"unknown model {text!r}")
