"""Price grid, intraday volume distribution and held-shares potential."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .decay import (
    DecayLaw,
    VolatilityLinked,
    free_float_rotation_period,
    rolling_volatility,
    survival_weight,
)
from .exceptions import ValidationError
from .market_data import EodBar, MarketSeries


class IntradayMode(str, Enum):
    CLOSE_POINT = "close"
    UNIFORM = "uniform"
    TRUNCATED_GAUSSIAN = "gauss"


class Smoothing(str, Enum):
    PURE_COUNT = "count"
    AS_WRITTEN = "written"


@dataclass(frozen=True)
class PriceGrid:
    """``k`` equal bins of width ``2 * eps`` covering ``[p_min, p_max]``."""

    p_min: float
    p_max: float
    k: int

    def __post_init__(self):
        if not self.p_max > self.p_min:
            raise ValidationError(f"grid needs p_min < p_max, got [{self.p_min}, {self.p_max}]")
        if self.k < 2:
            raise ValidationError(f"grid needs k >= 2 bins, got {self.k}")

    @property
    def eps(self) -> float:
        return (self.p_max - self.p_min) / (2 * self.k)

    @property
    def width(self) -> float:
        return self.p_max - self.p_min

    @property
    def bin_width(self) -> float:
        return 2 * self.eps

    @property
    def centers(self) -> np.ndarray:
        return self.p_min + (2 * np.arange(1, self.k + 1) - 1) * self.eps

    @property
    def edges(self) -> np.ndarray:
        e = self.p_min + np.arange(self.k + 1) * self.bin_width
        e[-1] = self.p_max
        return e

    def bin_index(self, price: float) -> int | None:
        """Bin holding ``price``; bins are half-open except the last one."""
        if price < self.p_min or price > self.p_max:
            return None
        if price == self.p_max:
            return self.k - 1
        return min(int((price - self.p_min) // self.bin_width), self.k - 1)

    def to_dict(self) -> dict:
        return {"p_min": self.p_min, "p_max": self.p_max, "k": self.k, "eps": self.eps}


def build_price_grid(p_min: float, p_max: float, k: int) -> PriceGrid:
    return PriceGrid(float(p_min), float(p_max), int(k))


@dataclass(frozen=True)
class HeldSharesProfile:
    grid: PriceGrid
    n: np.ndarray
    horizon: int
    placed_volume: float = 0.0
    dropped_volume: float = 0.0

    @property
    def dropped_fraction(self) -> float:
        total = self.placed_volume + self.dropped_volume
        return self.dropped_volume / total if total > 0 else 0.0


@dataclass(frozen=True)
class PotentialProfile:
    grid: PriceGrid
    v: np.ndarray
    normalization: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)


def _truncated_gaussian_masses(low, high, mean, sd, lo_edges, hi_edges):
    """Probability mass of N(mean, sd) truncated to [low, high] inside each [lo, hi]."""

    def upper_tail(x):
        return ndtr(-(x - mean) / sd)

    def lower_tail(x):
        return ndtr((x - mean) / sd)

    def segment(a, b):
        # integrate on the side of the mean that avoids cancellation near 1
        return np.where(
            a >= mean,
            upper_tail(a) - upper_tail(b),
            np.where(b <= mean, lower_tail(b) - lower_tail(a), 1.0 - lower_tail(a) - upper_tail(b)),
        )

    total = segment(np.array(low), np.array(high))
    a = np.maximum(lo_edges, low)
    b = np.minimum(hi_edges, high)
    mass = np.where(b > a, segment(a, b), 0.0)
    return mass / total


def distribute_intraday_volume(bar: EodBar, grid: PriceGrid, mode=IntradayMode.UNIFORM) -> np.ndarray:
    """Spread one day's volume over the grid bins.

    Volume whose price falls outside the grid is dropped, so the result
    may sum to less than ``bar.volume``.
    """
    mode = IntradayMode(mode)
    out = np.zeros(grid.k)
    volume = float(bar.volume)
    if volume == 0:
        return out
    if mode is IntradayMode.CLOSE_POINT or bar.high == bar.low:
        j = grid.bin_index(bar.close)
        if j is not None:
            out[j] = volume
        return out
    edges = grid.edges
    lo, hi = edges[:-1], edges[1:]
    if mode is IntradayMode.UNIFORM:
        overlap = np.clip(np.minimum(hi, bar.high) - np.maximum(lo, bar.low), 0.0, None)
        return volume * overlap / (bar.high - bar.low)
    sd = (bar.high - bar.low) / 4.0
    return volume * _truncated_gaussian_masses(bar.low, bar.high, bar.close, sd, lo, hi)


def _daily_sigmas(series: MarketSeries, law: VolatilityLinked, start: int) -> list[float]:
    sigma = rolling_volatility(series.closes, law.vol_window)
    out = []
    for i in range(start, len(series)):
        if not np.isfinite(sigma[i]):
            raise ValidationError(
                f"bar {i} has too little history for a {law.vol_window}-day volatility"
            )
        out.append(float(sigma[i]))
    return out


def accumulate_held_shares(
    series: MarketSeries,
    grid: PriceGrid,
    law: DecayLaw,
    mode=IntradayMode.UNIFORM,
    horizon: int | None = None,
) -> HeldSharesProfile:
    """Decay-weighted sum of distributed volumes over the last ``horizon + 1`` bars.

    The most recent bar has age 0 and weight 1. ``horizon`` defaults to the
    free-float rotation period; accumulation starts from an empty grid and
    is clipped to the available history.
    """
    if len(series) == 0:
        raise ValidationError("empty series")
    if horizon is None:
        horizon = free_float_rotation_period(series)
    if horizon < 0:
        raise ValidationError(f"horizon must be >= 0, got {horizon}")
    start = max(0, len(series) - horizon - 1)
    window = series.bars[start:]
    last = len(series) - 1

    sigmas = _daily_sigmas(series, law, start) if isinstance(law, VolatilityLinked) else None
    weights = np.empty(len(window))
    for pos, i in enumerate(range(start, len(series))):
        sigma = sigmas[pos] if sigmas is not None else None
        weights[pos] = survival_weight(law, last - i, sigma)

    vols = np.stack([distribute_intraday_volume(bar, grid, mode) for bar in window])
    placed = vols.sum(axis=1)
    raw = np.array([bar.volume for bar in window], dtype=float)
    if raw.sum() > 0 and placed.sum() == 0:
        raise ValidationError("grid disjoint from data: no traded volume falls on the grid")
    n = weights @ vols
    return HeldSharesProfile(
        grid=grid,
        n=n,
        horizon=int(horizon),
        placed_volume=float(weights @ placed),
        dropped_volume=float(weights @ (raw - placed)),
    )


def potential_from_held_shares(
    profile: HeldSharesProfile,
    smoothing=Smoothing.PURE_COUNT,
    window_radius: float = 1.0,
) -> PotentialProfile:
    """Turn held shares into a potential scaled so its maximum is 1.

    Each bin sums the bins whose centers lie in ``(p_j - r*eps, p_j + r*eps]``
    with ``r = window_radius``; ``r = 1`` keeps the bin alone. Under
    ``AS_WRITTEN`` each term is weighted by its center price.
    """
    smoothing = Smoothing(smoothing)
    if window_radius <= 0:
        raise ValidationError(f"window_radius must be > 0, got {window_radius}")
    grid = profile.grid
    terms = np.asarray(profile.n, dtype=float)
    if smoothing is Smoothing.AS_WRITTEN:
        terms = terms * grid.centers
    # offset d bins away has center at 2*d*eps; keep -r < 2d <= r
    reach = int(math.ceil(window_radius / 2)) + 1
    offsets = [d for d in range(-reach, reach + 1) if -window_radius < 2 * d <= window_radius]
    raw = np.zeros(grid.k)
    for d in offsets:
        if d >= 0:
            raw[: grid.k - d] += terms[d:]
        else:
            raw[-d:] += terms[: grid.k + d]
    scale = float(raw.max()) if raw.size else 0.0
    if scale <= 0:
        return PotentialProfile(grid, np.zeros(grid.k), 0.0,
                                {"smoothing": smoothing.value, "window_radius": window_radius})
    return PotentialProfile(grid, raw / scale, scale,
                            {"smoothing": smoothing.value, "window_radius": window_radius})


def normalized_potential(grid: PriceGrid, values) -> PotentialProfile:
    """Wrap arbitrary non-negative values as a max-1 potential on ``grid``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.k,):
        raise ValidationError(f"potential needs {grid.k} values, got shape {values.shape}")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValidationError("potential values must be finite and >= 0")
    scale = float(values.max())
    if scale == 0:
        return PotentialProfile(grid, np.zeros(grid.k), 0.0)
    return PotentialProfile(grid, values / scale, scale)
