"""scikit-learn style wrappers around the potential and well solvers.

``HeldSharesPotential`` learns a price grid, a decay law and a horizon from
market data and turns series into potentials. ``WellForecaster`` solves the
well for that potential and exposes the price distribution through
``predict_proba``.
"""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ValidationError
from .market_data import EodBar, MarketSeries, validate_series
from .pipeline import DEFAULT_K, build_potential, resolve_decay_law
from .potential import PotentialProfile, accumulate_held_shares, build_price_grid, potential_from_held_shares
from .solver import ModelParams, forecast_density, solve_well


def check_market_data(X, free_float=None) -> MarketSeries:
    """Coerce ``X`` into a validated :class:`MarketSeries`.

    ``X`` is either a MarketSeries or an array of shape (n_days, 5) with
    columns open, high, low, close, volume in date order. Arrays get
    consecutive placeholder dates and need ``free_float``.
    """
    if isinstance(X, MarketSeries):
        if free_float is not None and free_float != X.free_float:
            return validate_series(X.bars, free_float)
        return X
    arr = check_array(X, dtype=float, ensure_2d=True)
    if arr.shape[1] != 5:
        raise ValidationError(f"expected 5 columns (open, high, low, close, volume), got {arr.shape[1]}")
    if free_float is None:
        raise ValidationError("free_float is required for array input")
    if np.any(arr[:, 4] < 0) or np.any(arr[:, 4] != np.round(arr[:, 4])):
        raise ValidationError("volume column must hold non-negative integers")
    start = date(2000, 1, 1)
    bars = [
        EodBar(start + timedelta(days=i), *map(float, row[:4]), int(row[4]))
        for i, row in enumerate(arr)
    ]
    return validate_series(bars, free_float)


class HeldSharesPotential(TransformerMixin, BaseEstimator):
    """Decay-weighted volume-at-price potential.

    Parameters
    ----------
    free_float : float, optional
        Shares available for trading. Required for array input.
    k : int
        Number of price bins.
    p_min, p_max : float, optional
        Explicit grid bounds; by default the traded range plus one bin.
    decay : {"const", "vol", "gauss"}
        Survival law for past volume.
    rate, g_a, g_b, sigma_hold : float, optional
        Law parameters; missing ones are estimated from the data.
    intraday : {"close", "uniform", "gauss"}
        How a day's volume is spread over its high-low range.
    horizon : int, optional
        Look-back in bars; defaults to the free-float rotation period.
    """

    def __init__(self, free_float=None, k=DEFAULT_K, p_min=None, p_max=None, decay="const",
                 rate=None, g_a=None, g_b=None, sigma_hold=None, vol_window=20,
                 intraday="uniform", horizon=None, smoothing="count", window_radius=1.0):
        self.free_float = free_float
        self.k = k
        self.p_min = p_min
        self.p_max = p_max
        self.decay = decay
        self.rate = rate
        self.g_a = g_a
        self.g_b = g_b
        self.sigma_hold = sigma_hold
        self.vol_window = vol_window
        self.intraday = intraday
        self.horizon = horizon
        self.smoothing = smoothing
        self.window_radius = window_radius

    def fit(self, X, y=None):
        series = check_market_data(X, self.free_float)
        if (self.p_min is None) != (self.p_max is None):
            raise ValidationError("give both p_min and p_max or neither")
        grid = None if self.p_min is None else build_price_grid(self.p_min, self.p_max, self.k)
        law = resolve_decay_law(series, self.decay, self.rate, self.g_a, self.g_b,
                                self.sigma_hold, self.vol_window)
        built = build_potential(series, law, grid, self.k, self.intraday, self.horizon,
                                self.smoothing, self.window_radius)
        self.law_ = built.law
        self.horizon_ = built.horizon
        self.grid_ = built.potential.grid
        self.held_shares_ = built.held
        self.potential_ = built.potential
        return self

    def transform(self, X):
        """Potential of ``X`` on the fitted grid, law and horizon, shape (k,)."""
        check_is_fitted(self, "potential_")
        series = check_market_data(X, self.free_float)
        held = accumulate_held_shares(series, self.grid_, self.law_, self.intraday, self.horizon_)
        return potential_from_held_shares(held, self.smoothing, self.window_radius).v


class WellForecaster(BaseEstimator):
    """Price distribution from the eigenstates of the potential well.

    ``fit`` takes a :class:`PotentialProfile` directly, or market data that
    is first passed through a clone of ``potential``.
    """

    def __init__(self, potential=None, hbar_eff=1.0, mass=1.0, potential_scale=1.0,
                 n_states=1, mode="ground", temperature=None, boundary="face"):
        self.potential = potential
        self.hbar_eff = hbar_eff
        self.mass = mass
        self.potential_scale = potential_scale
        self.n_states = n_states
        self.mode = mode
        self.temperature = temperature
        self.boundary = boundary

    def fit(self, X, y=None):
        if isinstance(X, PotentialProfile):
            profile = X
        else:
            est = clone(self.potential) if self.potential is not None else HeldSharesPotential()
            self.potential_estimator_ = est.fit(X)
            profile = est.potential_
        params = ModelParams(self.hbar_eff, self.mass, self.potential_scale)
        self.potential_ = profile
        self.solution_ = solve_well(profile, params, self.n_states, self.boundary)
        self.density_ = forecast_density(self.solution_, self.mode, self.temperature)
        self.energies_ = self.solution_.energies
        self.grid_ = profile.grid
        return self

    def predict_proba(self, X=None):
        """Probability of each price bin, shape (k,)."""
        check_is_fitted(self, "density_")
        return self.density_.mass

    def predict(self, X=None):
        """Most likely price (center of the highest-probability bin)."""
        check_is_fitted(self, "density_")
        return float(self.grid_.centers[int(np.argmax(self.density_.mass))])
