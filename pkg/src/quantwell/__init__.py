"""Price potentials from decay-weighted volume profiles, solved in an infinite well."""

from .analysis import (
    BarrierSet,
    TunnelingResult,
    breakout_direction,
    detect_barriers,
    run_migration,
    transmission_reflection,
    trend_migration_step,
)
from .decay import (
    ConstantExponential,
    GaussianHolding,
    VolatilityLinked,
    calibrate_g,
    decay_constant,
    free_float_rotation_period,
    survival_weight,
    turnover_probability,
    volatility_linked_lambda,
)
from .estimators import HeldSharesPotential, WellForecaster
from .exceptions import ConvergenceError, DomainError, ParseError, QuantWellError, ValidationError
from .market_data import EodBar, MarketSeries, mean_daily_volume, parse_eod_csv, validate_series
from .potential import (
    HeldSharesProfile,
    IntradayMode,
    PotentialProfile,
    PriceGrid,
    Smoothing,
    accumulate_held_shares,
    build_price_grid,
    distribute_intraday_volume,
    potential_from_held_shares,
)
from .solver import (
    EigenSolution,
    ForecastDensity,
    ModelParams,
    assemble_hamiltonian,
    forecast_density,
    solve_eigenpairs,
    solve_well,
)

__version__ = "0.1.0"
