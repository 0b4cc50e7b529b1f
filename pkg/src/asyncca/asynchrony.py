"""Arrival laws: when does a cell next get a chance to change state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Optional

POISSON = "poisson"
UNIFORM = "uniform"
POWER = "power"
GAUSSIAN = "gaussian"
GAUSSIAN_FIXED = "gaussian-fixed"
FIXED = "fixed"

_STD_NORMAL = NormalDist()


def _check_r(r: float) -> None:
    if not 0.0 < r < 1.0:
        raise ValueError(f"uniform variate must lie in (0, 1), got {r!r}")


@dataclass(frozen=True)
class ArrivalLaw:
    """Named rule ``next_t = law(t, r)``; parameters are in simulated time.

    ``gaussian`` draws a fresh N(mean, sigma) period at every arrival,
    resampling non-positive values.  ``gaussian-fixed`` draws one period per
    cell at initialisation and then repeats it.
    """

    variant: str
    rate: float = 1.0
    k: int = 8
    mean: float = 1.0
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.variant not in (POISSON, UNIFORM, POWER, GAUSSIAN, GAUSSIAN_FIXED, FIXED):
            raise ValueError(f"unknown arrival law {self.variant!r}")
        if self.variant == POISSON and not self.rate > 0:
            raise ValueError("poisson rate must be positive")
        if self.variant == POWER and self.k < 1:
            raise ValueError("power exponent must be a positive integer")
        if self.variant in (GAUSSIAN, GAUSSIAN_FIXED) and not (self.mean > 0 and self.sigma >= 0):
            raise ValueError("gaussian period needs mean > 0 and sigma >= 0")

    @classmethod
    def poisson(cls, rate: float = 1.0) -> "ArrivalLaw":
        return cls(POISSON, rate=rate)

    @classmethod
    def uniform(cls) -> "ArrivalLaw":
        return cls(UNIFORM)

    @classmethod
    def power(cls, k: int) -> "ArrivalLaw":
        return cls(POWER, k=k)

    @classmethod
    def gaussian(cls, mean: float, sigma: float, per_cell: bool = False) -> "ArrivalLaw":
        return cls(GAUSSIAN_FIXED if per_cell else GAUSSIAN, mean=mean, sigma=sigma)

    @classmethod
    def fixed(cls) -> "ArrivalLaw":
        return cls(FIXED)

    @classmethod
    def parse(cls, text: str) -> "ArrivalLaw":
        """Parse ``poisson:<rate> | uniform | power:<k> | gaussian:<m>,<s> |
        gaussian-fixed:<m>,<s> | fixed``."""
        name, _, arg = text.strip().partition(":")
        try:
            if name == POISSON:
                return cls.poisson(float(arg) if arg else 1.0)
            if name == UNIFORM and not arg:
                return cls.uniform()
            if name == POWER:
                return cls.power(int(arg))
            if name in (GAUSSIAN, GAUSSIAN_FIXED):
                mean, sigma = (float(x) for x in arg.split(","))
                return cls.gaussian(mean, sigma, per_cell=name == GAUSSIAN_FIXED)
            if name == FIXED and not arg:
                return cls.fixed()
        except ValueError as exc:
            raise ValueError(f"bad arrival law {text!r}: {exc}") from None
        raise ValueError(f"bad arrival law {text!r}")

    def __str__(self) -> str:
        if self.variant == POISSON:
            return f"poisson:{self.rate:g}"
        if self.variant == POWER:
            return f"power:{self.k}"
        if self.variant in (GAUSSIAN, GAUSSIAN_FIXED):
            return f"{self.variant}:{self.mean:g},{self.sigma:g}"
        return self.variant

    @property
    def continuous(self) -> bool:
        """True when increments have a density, so neighbour ties have probability 0."""
        if self.variant in (GAUSSIAN, GAUSSIAN_FIXED):
            return self.sigma > 0
        return self.variant != FIXED

    def cell_parameter(self, draw: Callable[[], float]) -> Optional[float]:
        """Per-cell constant drawn once at initialisation (fixed Gaussian period)."""
        if self.variant != GAUSSIAN_FIXED:
            return None
        return _gaussian_period(self.mean, self.sigma, draw(), draw)

    def increment(self, r: float, draw: Optional[Callable[[], float]] = None,
                  param: Optional[float] = None) -> float:
        _check_r(r)
        v = self.variant
        if v == POISSON:
            return -math.log(r) / self.rate
        if v == UNIFORM:
            return r
        if v == POWER:
            return r ** (1.0 / self.k)
        if v == FIXED:
            return 1.0
        if v == GAUSSIAN_FIXED:
            if param is None:
                raise ValueError("gaussian-fixed law needs the cell's period")
            return param
        return _gaussian_period(self.mean, self.sigma, r, draw)


def _gaussian_period(mean, sigma, r, draw) -> float:
    while True:
        x = mean + sigma * _STD_NORMAL.inv_cdf(r) if sigma > 0 else mean
        if x > 0:
            return x
        if draw is None:
            raise ValueError("non-positive gaussian period and no stream to resample from")
        r = draw()
        _check_r(r)


def next_arrival(law: ArrivalLaw, t: float, r: float,
                 draw: Optional[Callable[[], float]] = None,
                 param: Optional[float] = None) -> float:
    """``t`` plus one increment of ``law`` driven by ``r``; always > ``t``."""
    nt = t + law.increment(r, draw, param)
    # increments below half an ulp of t would otherwise vanish
    return nt if nt > t else math.nextafter(t, math.inf)


def cumulative_next_arrival(rate: float, k: int, T: float, r: float) -> float:
    """Next arrival of the merged stream of ``k`` Poisson cells of rate ``rate``."""
    if k < 1:
        raise ValueError(f"cell count must be >= 1, got {k}")
    _check_r(r)
    nt = T - math.log(r) / (rate * k)
    return nt if nt > T else math.nextafter(T, math.inf)
