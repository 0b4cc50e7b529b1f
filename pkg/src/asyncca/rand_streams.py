"""Counter-based pseudo-random streams.

A draw is a pure function of ``(seed, stream id, counter)``, so a cell sees
the same sequence however cells are grouped into PEs, and any point of a
stream can be replayed without stored state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import kernels


class StreamKind(enum.IntEnum):
    CELL = 0
    PE = 1
    SCALAR = 2


# scalar stream indices used by the engines
SCALAR_INIT = 0
SCALAR_STANDARD = 1
SCALAR_BKL = 2


@dataclass(frozen=True)
class StreamId:
    kind: StreamKind
    index: int


@dataclass
class Stream:
    seed: int
    id: StreamId
    counter: int = 0
    key: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.key = kernels.stream_key(self.seed, int(self.id.kind), self.id.index)

    def next_uniform(self) -> float:
        r = kernels.uniform(self.key, self.counter)
        self.counter += 1
        return r

    def __call__(self) -> float:
        return self.next_uniform()


def make_stream(seed: int, id: StreamId) -> Stream:
    return Stream(seed & kernels.py.MASK64, id)


def cell_stream(seed: int, c: int) -> Stream:
    return make_stream(seed, StreamId(StreamKind.CELL, c))


def pe_stream(seed: int, C: int) -> Stream:
    return make_stream(seed, StreamId(StreamKind.PE, C))


def scalar_stream(seed: int, index: int) -> Stream:
    return make_stream(seed, StreamId(StreamKind.SCALAR, index))


def derive_seed(seed: int, replicate: int) -> int:
    """Independent run-level seed for replicate ``replicate``."""
    return kernels.mix64((seed ^ kernels.mix64(replicate + 1)) & kernels.py.MASK64)
