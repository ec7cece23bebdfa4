"""Market series -> held shares -> potential, with the usual defaults filled in."""

from __future__ import annotations

from dataclasses import dataclass

from .decay import (
    ConstantExponential,
    DecayLaw,
    GaussianHolding,
    VolatilityLinked,
    calibrate_g,
    decay_constant,
    free_float_rotation_period,
    turnover_probability,
)
from .exceptions import ValidationError
from .market_data import MarketSeries, mean_daily_volume
from .potential import (
    HeldSharesProfile,
    PotentialProfile,
    PriceGrid,
    accumulate_held_shares,
    build_price_grid,
    potential_from_held_shares,
)

DEFAULT_K = 200


def auto_grid(series: MarketSeries, k: int = DEFAULT_K) -> PriceGrid:
    """Grid over [min low, max high] of ``series`` padded by one bin per side."""
    if len(series) == 0:
        raise ValidationError("empty series")
    if k < 3:
        raise ValidationError(f"auto grid needs k >= 3, got {k}")
    lo, hi = float(series.lows.min()), float(series.highs.max())
    if hi == lo:
        lo, hi = lo - 0.5 * abs(lo or 1) * 1e-3, hi + 0.5 * abs(hi or 1) * 1e-3
    pad = (hi - lo) / (k - 2)
    return build_price_grid(lo - pad, hi + pad, k)


def resolve_decay_law(series: MarketSeries, kind: str = "const", rate: float | None = None,
                      a: float | None = None, b: float | None = None,
                      sigma_hold: float | None = None, vol_window: int = 20,
                      volume_window: int | None = None) -> DecayLaw:
    """Build a decay law, estimating missing parameters from ``series``.

    A constant rate defaults to the turnover of the free float; volatility
    coefficients default to a least-squares calibration.
    """
    if kind == "const":
        if rate is None:
            p = turnover_probability(mean_daily_volume(series, volume_window), series.free_float)
            rate = decay_constant(p)
        return ConstantExponential(rate)
    if kind == "vol":
        if a is None or b is None:
            fit_a, fit_b = calibrate_g(series, vol_window)
            a = fit_a if a is None else a
            b = fit_b if b is None else b
        return VolatilityLinked(a, b, vol_window)
    if kind == "gauss":
        if sigma_hold is None:
            raise ValidationError("gaussian holding law needs sigma_hold")
        return GaussianHolding(sigma_hold)
    raise ValidationError(f"unknown decay law {kind!r}")


@dataclass(frozen=True)
class PotentialBuild:
    law: DecayLaw
    horizon: int
    held: HeldSharesProfile
    potential: PotentialProfile


def build_potential(series: MarketSeries, law: DecayLaw, grid: PriceGrid | None = None,
                    k: int = DEFAULT_K, mode="uniform", horizon: int | None = None,
                    smoothing="count", window_radius: float = 1.0) -> PotentialBuild:
    if len(series) == 0:
        raise ValidationError("empty series")
    if horizon is None:
        horizon = free_float_rotation_period(series)
    if grid is None:
        grid = auto_grid(series.tail(horizon + 1), k)
    held = accumulate_held_shares(series, grid, law, mode, horizon)
    potential = potential_from_held_shares(held, smoothing, window_radius)
    return PotentialBuild(law, horizon, held, potential)
