"""Survival laws for previously traded share blocks.

Shares bought on some day are assumed to change hands again at a rate
set by the turnover of the free float, like atoms in radioactive decay.
Time is counted in trading days (bars), never calendar days.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DomainError, ValidationError
from .market_data import MarketSeries


@dataclass(frozen=True)
class ConstantExponential:
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"decay rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class VolatilityLinked:
    """Per-day rate ``a + b / sigma_daily``, a linear function of inverse volatility."""

    a: float
    b: float
    vol_window: int = 20


@dataclass(frozen=True)
class GaussianHolding:
    sigma_hold: float

    def __post_init__(self):
        if not self.sigma_hold > 0:
            raise DomainError(f"sigma_hold must be > 0, got {self.sigma_hold}")


DecayLaw = Union[ConstantExponential, VolatilityLinked, GaussianHolding]


def turnover_probability(v_m: float, v_ff: float) -> float:
    """Daily probability that a free-float share changes hands, ``v_m / v_ff``."""
    if not v_ff > 0:
        raise DomainError(f"free float must be > 0, got {v_ff}")
    if v_m < 0:
        raise DomainError(f"mean daily volume must be >= 0, got {v_m}")
    p = v_m / v_ff
    if p >= 1:
        raise DomainError(f"turnover probability must be < 1, got {p}")
    return p


def decay_constant(p: float) -> float:
    """``-ln(1 - p)`` for a turnover probability ``p`` in [0, 1)."""
    if not 0 <= p < 1:
        raise DomainError(f"turnover probability must be in [0, 1), got {p}")
    return -math.log1p(-p)


def volatility_linked_lambda(sigma_daily: float, a: float, b: float) -> float:
    if not sigma_daily > 0:
        raise DomainError(f"daily volatility must be > 0, got {sigma_daily}")
    rate = a + b / sigma_daily
    if rate < 0:
        raise DomainError(f"volatility-linked rate is negative ({rate})")
    return rate


def survival_weight(law: DecayLaw, t: float, sigma_daily: float | None = None) -> float:
    """Fraction of a block still held ``t`` trading days after it was traded.

    Always 1 at ``t = 0``. The Gaussian law keeps only the kernel of the
    density, without its ``1/(sigma sqrt(2 pi))`` prefactor.
    """
    if t < 0:
        raise DomainError(f"elapsed time must be >= 0, got {t}")
    if isinstance(law, ConstantExponential):
        return math.exp(-law.rate * t)
    if isinstance(law, VolatilityLinked):
        if sigma_daily is None:
            raise ValidationError("volatility-linked law needs sigma_daily")
        return math.exp(-volatility_linked_lambda(sigma_daily, law.a, law.b) * t)
    if isinstance(law, GaussianHolding):
        return math.exp(-((t / (math.sqrt(2.0) * law.sigma_hold)) ** 2))
    raise TypeError(f"unknown decay law {law!r}")


def rolling_volatility(closes, window: int) -> np.ndarray:
    """Sample std of log close-to-close returns ending at each bar.

    Entry ``i`` uses the ``window`` returns ending at bar ``i``; the first
    ``window`` bars get NaN.
    """
    if window < 2:
        raise ValidationError(f"volatility window must be >= 2, got {window}")
    closes = np.asarray(closes, dtype=float)
    out = np.full(closes.shape, np.nan)
    returns = np.diff(np.log(closes))
    for i in range(window, closes.size):
        # returns[j] is the return into bar j + 1
        out[i] = np.std(returns[i - window:i], ddof=1)
    return out


def calibrate_g(series: MarketSeries, vol_window: int = 20) -> tuple[float, float]:
    """Least-squares fit of per-day decay rates against inverse volatility.

    Each day's realised rate is ``-ln(1 - v_i / v_ff)``; the fit returns
    ``(a, b)`` in ``rate = a + b / sigma``.
    """
    sigma = rolling_volatility(series.closes, vol_window)
    p = series.volumes / series.free_float
    usable = np.isfinite(sigma)
    if np.any(sigma[usable] <= 0):
        raise DomainError("zero volatility inside the calibration window")
    if np.any(p[usable] >= 1):
        raise DomainError("daily volume reaches the free float; turnover probability must be < 1")
    x = 1.0 / sigma[usable]
    y = -np.log1p(-p[usable])
    if x.size < 2 or np.ptp(x) <= 1e-12 * np.max(np.abs(x)):
        raise ValidationError("degenerate regression: fewer than 2 distinct 1/sigma values")
    design = np.column_stack([np.ones_like(x), x])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(a), float(b)


def free_float_rotation_period(series: MarketSeries) -> int:
    """Smallest trailing number of bars whose volume sums to the free float."""
    cumulative = np.cumsum(series.volumes[::-1])
    reached = np.nonzero(cumulative >= series.free_float)[0]
    if reached.size == 0:
        raise ValidationError(
            f"series too short for one rotation: total volume {cumulative[-1] if cumulative.size else 0:g}"
            f" < free float {series.free_float:g}"
        )
    return int(reached[0]) + 1
