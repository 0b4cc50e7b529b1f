"""Simplified efficiency predictors.

Only local times are simulated, in synchronous rounds.  One-cell model: a
cell's time advances when it does not exceed any neighbour's.  Aggregated
model: each PE's scaled time ``h = rate * T`` advances by an Exp(1) draw,
unconditionally with probability ``(m-2)^2/m^2``, after checking one random
neighbour PE with probability ``4(m-2)/m^2``, and after checking an adjacent
pair of neighbour PEs otherwise.  A PE that fails keeps its choice and
retries it next round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .asynchrony import FIXED, POISSON, POWER, UNIFORM, ArrivalLaw
from .rand_streams import StreamKind, derive_seed
from .topology import Lattice

DEFAULT_LEVEL = 0.9999

_LAW_CODES = {POISSON: kernels.LAW_POISSON, UNIFORM: kernels.LAW_UNIFORM,
              POWER: kernels.LAW_POWER, FIXED: kernels.LAW_FIXED}


@dataclass(frozen=True)
class EfficiencyEstimate:
    mean: float
    half_width: float
    level: float
    rounds: int
    warmup: int
    replicates: int
    samples: tuple = ()

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width


def default_warmup(rounds: int) -> int:
    """First 10% of the rounds, at least 100."""
    return max(100, rounds // 10)


def confidence_interval(samples: Sequence[float], level: float = DEFAULT_LEVEL) -> tuple[float, float]:
    """Student-t interval for the mean of ``samples``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("a confidence interval needs at least two samples")
    if not 0 < level < 1:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    mean = float(x.mean())
    sem = float(x.std(ddof=1)) / math.sqrt(x.size)
    half = float(stats.t.ppf(0.5 + level / 2, x.size - 1)) * sem
    return mean - half, mean + half


def _estimate(per_rep: list[float], level, rounds, warmup) -> EfficiencyEstimate:
    if len(per_rep) >= 2:
        lo, hi = confidence_interval(per_rep, level)
        half = (hi - lo) / 2
    else:
        half = 0.0
    return EfficiencyEstimate(float(np.mean(per_rep)), half, level, rounds, warmup,
                              len(per_rep), tuple(per_rep))


def predict_one_cell(dim: int, n: int, law: ArrivalLaw, rounds: int, warmup: Optional[int] = None,
                     replicates: int = 5, seed: int = 0,
                     level: float = DEFAULT_LEVEL) -> EfficiencyEstimate:
    """Mean fraction of cells whose local time advances per round."""
    warmup = default_warmup(rounds) if warmup is None else warmup
    if rounds <= warmup:
        raise ValueError("rounds must exceed the warm-up")
    if law.variant not in _LAW_CODES:
        raise ValueError(f"law {law} is not supported by the round model")
    lattice = Lattice(dim, n)
    nbr = lattice.stencil_table()
    code = _LAW_CODES[law.variant]
    param = {POISSON: law.rate, POWER: float(law.k)}.get(law.variant, 0.0)
    per_rep = []
    for rep in range(replicates):
        keys = kernels.stream_keys(derive_seed(seed, rep), int(StreamKind.CELL),
                                   np.arange(lattice.size))
        n0 = kernels.one_cell_rounds(nbr, keys, code, param, rounds)
        per_rep.append(float(n0[warmup:].mean()) / lattice.size)
    return _estimate(per_rep, level, rounds, warmup)


def case_probabilities(m: int) -> tuple[float, float, float]:
    """Chance that a uniformly chosen cell needs 0, 1 or 2 neighbour PEs (q = 1)."""
    if m < 3:
        raise ValueError(f"subarray side must be >= 3, got {m}")
    return (m - 2) ** 2 / m ** 2, 4 * (m - 2) / m ** 2, 4 / m ** 2


def predict_aggregated(n: int, m: int, rounds: int, warmup: Optional[int] = None,
                       replicates: int = 5, seed: int = 0, lag_bound: Optional[float] = None,
                       level: float = DEFAULT_LEVEL) -> EfficiencyEstimate:
    """Fraction of PE-rounds with a successful local-time increment.

    ``lag_bound`` is in units of h (mean per-cell inter-arrival time); a PE
    more than that ahead of the global minimum skips its round.
    """
    case_probabilities(m)
    if n % m:
        raise ValueError(f"subarray side {m} must divide lattice side {n}")
    warmup = default_warmup(rounds) if warmup is None else warmup
    if rounds <= warmup:
        raise ValueError("rounds must exceed the warm-up")
    g = n // m
    bound = -1.0 if lag_bound is None or math.isinf(lag_bound) else float(lag_bound)
    per_rep = []
    for rep in range(replicates):
        keys = kernels.stream_keys(derive_seed(seed, rep), int(StreamKind.PE), np.arange(g * g))
        ok = kernels.aggregated_rounds(g, m, keys, rounds, bound)
        per_rep.append(float(ok[warmup:].mean()) / (g * g))
    return _estimate(per_rep, level, rounds, warmup)


def measured_efficiency(serial_time: float, n_pes: int, parallel_time: float) -> float:
    """serial time / (PEs x parallel time)."""
    if serial_time <= 0 or n_pes <= 0 or parallel_time <= 0:
        raise ValueError("times and PE count must be positive")
    return serial_time / (n_pes * parallel_time)


def speedup(efficiency: float, n_pes: int) -> float:
    return efficiency * n_pes
