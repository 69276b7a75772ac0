"""
Epps Effect Pipeline
Hawkes fine-to-coarse price simulation with Fourier, Hayashi-Yoshida and
realised-volatility correlation estimates under calendar, event and volume time
"""

from .errors import (
    AliasingWarning,
    BadParameters,
    ConfigError,
    DomainError,
    EmptySeries,
    EppsError,
    GridNotSynchronous,
    InsufficientVolume,
    ParseError,
    StabilityViolation,
    TooFewObservations,
    TooFewPoints,
    TooFewValues,
)
from .hawkes_engine import (
    EventStream,
    HawkesSpec,
    IntensityState,
    build_fine_to_coarse_spec,
    intensity_at,
    replication_seed,
    simulate,
    spectral_radius,
)
from .market_model import (
    STANDARD_VOLUME_SPECS,
    PricePath,
    TransactionSeries,
    VolumeDistSpec,
    build_price_paths,
    sample_volumes,
    to_transactions,
)
from .clocks import (
    Clock,
    SampledGrid,
    VolumeBucketing,
    calendar_grid_previous_tick,
    event_grid_previous_tick,
    interval_to_sample_count,
    raw_calendar,
    shared_event_clock,
    volume_bucketing,
    volume_clock,
)
from .estimators import (
    CovarianceEstimate,
    Estimator,
    FourierCoefficients,
    downsample,
    estimate,
    fourier_coefficients,
    hy_covariance,
    mm_covariance,
    mm_covariance_curve,
    n_from_interval,
    nyquist_modes,
    rv_covariance,
)
from .theory import (
    TheoryParams,
    params_from_hawkes,
    theory_covariance_rate,
    theory_params,
    theory_rho,
    theory_rho_limit,
    theory_table,
    theory_variance_rate,
)
from .pipeline import (
    EstimateRecord,
    EstimationPlan,
    estimate_pair,
    run_replication,
    sample_grid,
    simulate_pair,
    simulate_replication,
)
from .experiments import (
    EppsCurve,
    ExperimentConfig,
    HawkesParams,
    SweepResult,
    aggregate_curves,
    comparison_table,
    decoupled,
    distribution_comparison,
    linearity_diagnostic,
    linearity_table,
    ribbon,
    run_epps_sweep,
    uncorrelated_scenario,
    with_theory,
)
from .ingest import (
    TRADE_COLUMNS,
    EmpiricalConfig,
    SessionSpec,
    TradeBook,
    TradeRecord,
    TradeSchema,
    build_daily_pairs,
    load_trades,
    per_day_epps,
    clock_seconds,
    clock_strings,
    synthetic_trades,
    trades_frame,
    vwap_aggregate,
    write_trades,
)

__version__ = "1.0.0"
__all__ = [
    "AliasingWarning",
    "BadParameters",
    "ConfigError",
    "DomainError",
    "EmptySeries",
    "EppsError",
    "GridNotSynchronous",
    "InsufficientVolume",
    "ParseError",
    "StabilityViolation",
    "TooFewObservations",
    "TooFewPoints",
    "TooFewValues",
    "EventStream",
    "HawkesSpec",
    "IntensityState",
    "build_fine_to_coarse_spec",
    "intensity_at",
    "replication_seed",
    "simulate",
    "spectral_radius",
    "STANDARD_VOLUME_SPECS",
    "PricePath",
    "TransactionSeries",
    "VolumeDistSpec",
    "build_price_paths",
    "sample_volumes",
    "to_transactions",
    "Clock",
    "SampledGrid",
    "VolumeBucketing",
    "calendar_grid_previous_tick",
    "event_grid_previous_tick",
    "interval_to_sample_count",
    "raw_calendar",
    "shared_event_clock",
    "volume_bucketing",
    "volume_clock",
    "CovarianceEstimate",
    "Estimator",
    "FourierCoefficients",
    "downsample",
    "estimate",
    "fourier_coefficients",
    "hy_covariance",
    "mm_covariance",
    "mm_covariance_curve",
    "n_from_interval",
    "nyquist_modes",
    "rv_covariance",
    "TheoryParams",
    "params_from_hawkes",
    "theory_covariance_rate",
    "theory_params",
    "theory_rho",
    "theory_rho_limit",
    "theory_table",
    "theory_variance_rate",
    "EstimateRecord",
    "EstimationPlan",
    "estimate_pair",
    "run_replication",
    "sample_grid",
    "simulate_pair",
    "simulate_replication",
    "EppsCurve",
    "ExperimentConfig",
    "HawkesParams",
    "SweepResult",
    "aggregate_curves",
    "comparison_table",
    "decoupled",
    "distribution_comparison",
    "linearity_diagnostic",
    "linearity_table",
    "ribbon",
    "run_epps_sweep",
    "uncorrelated_scenario",
    "with_theory",
    "TRADE_COLUMNS",
    "EmpiricalConfig",
    "SessionSpec",
    "TradeBook",
    "TradeRecord",
    "TradeSchema",
    "build_daily_pairs",
    "load_trades",
    "per_day_epps",
    "clock_seconds",
    "clock_strings",
    "synthetic_trades",
    "trades_frame",
    "vwap_aggregate",
    "write_trades",
]
