"""Seeded synthetic EOD series with known structure.

Randomness comes from a 64-bit linear congruential generator with Knuth's
MMIX constants, so a seed reproduces the same bars in any language.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Union

from .exceptions import ValidationError
from .market_data import EodBar, MarketSeries, validate_series

_MULTIPLIER = 6364136223846793005
_INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg64:
    """``state <- a * state + c (mod 2**64)``; uniforms use the top 53 bits."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (_MULTIPLIER * self.state + _INCREMENT) & _MASK
        return self.state

    def uniform(self) -> float:
        """Float in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        # Box-Muller, cosine branch only; one normal per two uniforms
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class SidewaysChannel:
    """Reflected walk between ``low_price`` and ``high_price``.

    ``range_fraction`` is the typical daily range as a share of the channel
    width; at 1.0 every bar spans the whole channel.
    """

    low_price: float
    high_price: float
    range_fraction: float = 0.3


@dataclass(frozen=True)
class TrendingWalk:
    drift: float
    vol: float
    start_price: float = 10.0


@dataclass(frozen=True)
class BimodalAccumulation:
    """Trading that clusters around ``peaks``, visited in proportion to ``weights``.

    A ``travel_fraction`` of days trade thin volume at prices between the
    peaks. ``spread`` is the relative scatter of closes around a peak and
    ``day_range`` the relative half-width of a day's high-low range there.
    """

    peaks: tuple[float, ...]
    weights: tuple[float, ...] = (0.5, 0.5)
    spread: float = 0.0005
    day_range: float = 0.002
    travel_fraction: float = 0.1


PriceProcess = Union[SidewaysChannel, TrendingWalk, BimodalAccumulation]


@dataclass(frozen=True)
class VolumeSpec:
    """Log-normal daily volume with the given mean and log-dispersion."""

    mean: float = 1_000_000.0
    dispersion: float = 0.3


@dataclass(frozen=True)
class SyntheticSpec:
    days: int
    price_process: PriceProcess
    daily_volume: VolumeSpec = field(default_factory=VolumeSpec)
    seed: int = 0
    free_float: float | None = None
    start: date = date(2020, 1, 1)

    def validate(self):
        if self.days < 1:
            raise ValidationError(f"days must be >= 1, got {self.days}")
        if self.daily_volume.mean <= 0 or self.daily_volume.dispersion < 0:
            raise ValidationError("volume mean must be > 0 and dispersion >= 0")
        if self.free_float is not None and self.free_float <= 0:
            raise ValidationError("free_float must be > 0")
        proc = self.price_process
        if isinstance(proc, SidewaysChannel):
            if not 0 < proc.low_price < proc.high_price:
                raise ValidationError("channel needs 0 < low_price < high_price")
            if not 0 < proc.range_fraction <= 1:
                raise ValidationError("range_fraction must be in (0, 1]")
        elif isinstance(proc, TrendingWalk):
            if proc.vol < 0 or proc.start_price <= 0:
                raise ValidationError("trending walk needs vol >= 0 and start_price > 0")
        elif isinstance(proc, BimodalAccumulation):
            if len(proc.peaks) < 1 or len(proc.peaks) != len(proc.weights):
                raise ValidationError("peaks and weights must be non-empty and equally long")
            if min(proc.peaks) <= 0 or min(proc.weights) < 0 or sum(proc.weights) <= 0:
                raise ValidationError("peaks must be > 0 and weights >= 0 with positive sum")
            if not 0 <= proc.travel_fraction < 1:
                raise ValidationError("travel_fraction must be in [0, 1)")
            if not 0 <= proc.spread < 0.1 or not 0 <= proc.day_range < 0.1:
                raise ValidationError("spread and day_range must be in [0, 0.1)")
        else:
            raise ValidationError(f"unknown price process {proc!r}")


def _trading_days(start: date, n: int):
    day = start
    while n:
        if day.weekday() < 5:
            yield day
            n -= 1
        day += timedelta(days=1)


def _bar(day, open_, high, low, close, volume) -> EodBar:
    open_, close = round(open_, 4), round(close, 4)
    high = max(round(high, 4), open_, close)
    low = min(round(low, 4), open_, close)
    return EodBar(day, open_, high, low, close, volume)


def _reflect(x, lo, hi):
    span = hi - lo
    y = (x - lo) % (2 * span)
    return lo + (y if y <= span else 2 * span - y)


def _channel_prices(proc: SidewaysChannel, rng: Lcg64, n: int):
    lo, hi = proc.low_price, proc.high_price
    width = hi - lo
    close = lo + width * rng.uniform()
    for _ in range(n):
        open_ = close
        close = _reflect(close + 0.1 * width * rng.normal(), lo, hi)
        if proc.range_fraction >= 1:
            low, high = lo, hi
        else:
            half = 0.5 * proc.range_fraction * width
            low = max(lo, min(open_, close) - half * rng.uniform())
            high = min(hi, max(open_, close) + half * rng.uniform())
        yield open_, high, low, close, 1.0


def _trend_prices(proc: TrendingWalk, rng: Lcg64, n: int):
    close = proc.start_price
    for _ in range(n):
        open_ = close
        close = open_ * math.exp(proc.drift + proc.vol * rng.normal())
        high = max(open_, close) * math.exp(0.5 * proc.vol * abs(rng.normal()))
        low = min(open_, close) * math.exp(-0.5 * proc.vol * abs(rng.normal()))
        yield open_, high, low, close, 1.0


def _bimodal_prices(proc: BimodalAccumulation, rng: Lcg64, n: int):
    total = sum(proc.weights)
    shares = [w / total for w in proc.weights]
    visits = [0] * len(shares)
    lo, hi = min(proc.peaks), max(proc.peaks)
    for _ in range(n):
        if rng.uniform() < proc.travel_fraction and hi > lo:
            close = lo + (hi - lo) * rng.uniform()
            half = 0.005 * close
            scale = 0.1
        else:
            # visit the peak furthest behind its share, so any window stays balanced
            n_visits = sum(visits) + 1
            idx = max(range(len(shares)), key=lambda i: (shares[i] * n_visits - visits[i], -i))
            visits[idx] += 1
            peak = proc.peaks[idx]
            close = peak * (1 + proc.spread * rng.normal())
            half = peak * proc.day_range * (1 + 0.5 * abs(rng.normal()))
            scale = 1.0
        low = close - half * (0.5 + 0.5 * rng.uniform())
        high = close + half * (0.5 + 0.5 * rng.uniform())
        open_ = low + (high - low) * rng.uniform()
        yield open_, high, low, close, scale


def generate_series(spec: SyntheticSpec) -> MarketSeries:
    """Deterministic series for ``spec``; the same seed gives the same bars."""
    spec.validate()
    rng = Lcg64(spec.seed)
    proc = spec.price_process
    if isinstance(proc, SidewaysChannel):
        prices = _channel_prices(proc, rng, spec.days)
    elif isinstance(proc, TrendingWalk):
        prices = _trend_prices(proc, rng, spec.days)
    else:
        prices = _bimodal_prices(proc, rng, spec.days)
    vol = spec.daily_volume
    bars = []
    for day, (open_, high, low, close, scale) in zip(_trading_days(spec.start, spec.days), prices):
        draw = math.exp(vol.dispersion * rng.normal() - 0.5 * vol.dispersion ** 2)
        bars.append(_bar(day, open_, high, low, close, max(0, round(scale * vol.mean * draw))))
    free_float = spec.free_float if spec.free_float is not None else 20 * vol.mean
    return validate_series(bars, free_float)
