"""Reference computations used to check the main pipeline.

Nothing here imports the accumulation, distribution or volatility code
it checks. The brute-force held-shares profile is an explicit day-by-bin
double loop over plain floats.
"""

from __future__ import annotations

import math
import statistics

import numpy as np

from .decay import ConstantExponential, GaussianHolding, VolatilityLinked
from .exceptions import DomainError, ValidationError
from .market_data import MarketSeries
from .potential import HeldSharesProfile, PriceGrid
from .solver import ModelParams


def _phi_mass(a, b, mu, sd):
    """Mass of N(mu, sd) on [a, b] using erfc on the tail side of the mean."""
    root2 = math.sqrt(2.0)
    if a >= mu:
        return 0.5 * (math.erfc((a - mu) / (sd * root2)) - math.erfc((b - mu) / (sd * root2)))
    if b <= mu:
        return 0.5 * (math.erfc((mu - b) / (sd * root2)) - math.erfc((mu - a) / (sd * root2)))
    return _phi_mass(a, mu, mu, sd) + _phi_mass(mu, b, mu, sd)


def _bar_bins(bar, grid: PriceGrid, mode: str) -> list[float]:
    k = grid.k
    width = (grid.p_max - grid.p_min) / k
    out = [0.0] * k
    volume = float(bar.volume)
    if volume == 0:
        return out
    if mode == "close" or bar.high == bar.low:
        p = bar.close
        if grid.p_min <= p <= grid.p_max:
            j = k - 1 if p == grid.p_max else min(k - 1, int((p - grid.p_min) // width))
            out[j] = volume
        return out
    for j in range(k):
        lo = grid.p_min + j * width
        hi = grid.p_max if j == k - 1 else grid.p_min + (j + 1) * width
        a, b = max(lo, bar.low), min(hi, bar.high)
        if b <= a:
            continue
        if mode == "uniform":
            out[j] = volume * (b - a) / (bar.high - bar.low)
        elif mode == "gauss":
            sd = (bar.high - bar.low) / 4.0
            out[j] = volume * _phi_mass(a, b, bar.close, sd) / _phi_mass(bar.low, bar.high, bar.close, sd)
        else:
            raise ValidationError(f"unknown mode {mode!r}")
    return out


def _stdev_log_returns(closes, i, window):
    if i < window:
        raise ValidationError(f"bar {i} has too little history for volatility")
    rets = [math.log(closes[j + 1] / closes[j]) for j in range(i - window, i)]
    if len(rets) < 2:
        raise ValidationError(f"bar {i} has too little history for volatility")
    return statistics.stdev(rets)


def brute_force_held_shares(series: MarketSeries, grid: PriceGrid, law, mode="uniform",
                            horizon: int | None = None) -> HeldSharesProfile:
    mode = getattr(mode, "value", mode)
    n_bars = len(series.bars)
    if n_bars == 0:
        raise ValidationError("empty series")
    if horizon is None:
        acc = 0.0
        for back, bar in enumerate(reversed(series.bars), start=1):
            acc += bar.volume
            if acc >= series.free_float:
                horizon = back
                break
        if horizon is None:
            raise ValidationError("series too short for one rotation")
    closes = [b.close for b in series.bars]
    last = n_bars - 1
    held = [0.0] * grid.k
    placed = dropped = 0.0
    for i in range(max(0, last - horizon), n_bars):
        age = last - i
        if isinstance(law, ConstantExponential):
            weight = math.exp(-law.rate * age)
        elif isinstance(law, VolatilityLinked):
            sigma = _stdev_log_returns(closes, i, law.vol_window)
            rate = law.a + law.b / sigma
            if rate < 0:
                raise DomainError("negative rate")
            weight = math.exp(-rate * age)
        elif isinstance(law, GaussianHolding):
            weight = math.exp(-(age / (math.sqrt(2.0) * law.sigma_hold)) ** 2)
        else:
            raise TypeError(law)
        bins = _bar_bins(series.bars[i], grid, mode)
        day_total = 0.0
        for j in range(grid.k):
            held[j] += weight * bins[j]
            day_total += bins[j]
        placed += weight * day_total
        dropped += weight * (series.bars[i].volume - day_total)
    return HeldSharesProfile(grid, np.array(held), int(horizon), placed, dropped)


def analytic_flat_well_energy(n: int, width: float, params: ModelParams = ModelParams()) -> float:
    """``n^2 pi^2 hbar^2 / (2 m L^2)``."""
    if n < 1 or int(n) != n:
        raise DomainError(f"quantum number must be a positive integer, got {n}")
    if not width > 0:
        raise DomainError(f"well width must be > 0, got {width}")
    return n ** 2 * math.pi ** 2 * params.hbar_eff ** 2 / (2 * params.mass * width ** 2)


def analytic_rectangular_barrier_T(energy: float, height: float, width: float,
                                   params: ModelParams = ModelParams()) -> float:
    """Transmission through a rectangular barrier in free space."""
    if not energy > 0 or not height > 0:
        raise DomainError("energy and barrier height must be > 0")
    if width < 0:
        raise DomainError("barrier width must be >= 0")
    if energy == height:
        raise DomainError("E == V0 needs the separate limiting formula")
    if energy < height:
        kappa = math.sqrt(2 * params.mass * (height - energy)) / params.hbar_eff
        osc = math.sinh(kappa * width) ** 2
        gap = height - energy
    else:
        q = math.sqrt(2 * params.mass * (energy - height)) / params.hbar_eff
        osc = math.sin(q * width) ** 2
        gap = energy - height
    return 1.0 / (1.0 + height ** 2 * osc / (4 * energy * gap))
