"""
Estimation Pipeline
Runs every (clock, estimator, interval) combination on one pair of transaction
series; shared by the Monte Carlo sweep and the per-day empirical runs
"""

import logging
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, field_validator

from .clocks import (
    Clock,
    LeadingRule,
    SampledGrid,
    calendar_grid_previous_tick,
    event_grid_previous_tick,
    interval_to_sample_count,
    raw_calendar,
    shared_event_clock,
    volume_clock,
)
from .errors import DomainError, EmptySeries, InsufficientVolume, TooFewObservations
from .estimators import (
    CovarianceEstimate,
    Estimator,
    downsample,
    hy_covariance,
    mm_covariance,
    mm_covariance_curve,
    n_from_interval,
    nyquist_modes,
    rv_covariance,
)
from .hawkes_engine import EventStream, as_seed_sequence, build_fine_to_coarse_spec, replication_seed, simulate
from .market_model import TransactionSeries, build_price_paths, to_transactions

if TYPE_CHECKING:
    from .experiments import ExperimentConfig

logger = logging.getLogger(__name__)

ESTIMATE_COLUMNS = ["estimator", "clock", "interval", "sigma11", "sigma12", "sigma22", "rho", "flags"]


class EstimationPlan(BaseModel):
    """What to estimate on a pair; intervals are seconds (calendar, volume) or trades (event)"""
    intervals: List[float]
    clocks: List[Clock]
    estimators: List[Estimator]
    horizon: float
    leading: LeadingRule = "backfill"
    x0: Optional[Tuple[float, float]] = None
    # re-raise clock failures instead of recording NaN rows
    strict: bool = False

    @field_validator("intervals")
    @classmethod
    def _increasing(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one sampling interval is required")
        if any(v <= 0 for v in value):
            raise ValueError("sampling intervals must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("sampling intervals must be strictly increasing")
        return value

    @field_validator("horizon")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("horizon must be positive")
        return value


class EstimateRecord(BaseModel):
    """One row of the estimates CSV"""
    estimator: Estimator
    clock: Clock
    interval: float
    sigma11: float
    sigma12: float
    sigma22: float
    rho: float
    flags: str = ""

    @classmethod
    def from_estimate(cls, result: CovarianceEstimate, clock: Clock, interval: float) -> "EstimateRecord":
        return cls(
            estimator=result.estimator,
            clock=clock,
            interval=float(interval),
            sigma11=result.sigma11,
            sigma12=result.sigma12,
            sigma22=result.sigma22,
            rho=result.rho,
            flags=";".join(result.flags),
        )

    def to_row(self) -> dict:
        row = self.model_dump()
        row["estimator"] = self.estimator.value
        row["clock"] = self.clock.value
        return row

    @classmethod
    def unavailable(cls, estimator: Estimator, clock: Clock, interval: float) -> "EstimateRecord":
        nan = float("nan")
        return cls(
            estimator=estimator, clock=clock, interval=float(interval),
            sigma11=nan, sigma12=nan, sigma22=nan, rho=nan, flags="degenerate",
        )


def _mm_records(grid, span: float, intervals: Sequence[float], clock: Clock) -> List[EstimateRecord]:
    modes = [n_from_interval(span, dt) if dt <= span else 0 for dt in intervals]
    usable = [(dt, n) for dt, n in zip(intervals, modes) if n >= 1]
    records = {dt: EstimateRecord.unavailable(Estimator.MM, clock, dt) for dt in intervals}
    if usable:
        curve = mm_covariance_curve(grid, [n for _, n in usable])
        for (dt, _), result in zip(usable, curve):
            records[dt] = EstimateRecord.from_estimate(result, clock, dt)
    skipped = len(intervals) - len(usable)
    if skipped:
        logger.warning(f"{clock.value}: {skipped} intervals too coarse for a Fourier estimate")
    return [records[dt] for dt in intervals]


def _rv_record(grid, clock: Clock, interval: float) -> EstimateRecord:
    if min(grid.counts) < 2:
        return EstimateRecord.unavailable(Estimator.RV, clock, interval)
    return EstimateRecord.from_estimate(rv_covariance(grid), clock, interval)


def _calendar_records(pair, plan: EstimationPlan) -> List[EstimateRecord]:
    records: List[EstimateRecord] = []
    intervals = plan.intervals
    raw = raw_calendar(pair, horizon=plan.horizon)

    if Estimator.RV in plan.estimators:
        base_dt = intervals[0]
        base = calendar_grid_previous_tick(pair, base_dt, plan.horizon, plan.leading, plan.x0)
        for dt in intervals:
            ratio = dt / base_dt
            if abs(ratio - round(ratio)) < 1e-9:
                grid = downsample(base, int(round(ratio)))
            else:
                grid = calendar_grid_previous_tick(pair, dt, plan.horizon, plan.leading, plan.x0)
            records.append(_rv_record(grid, Clock.CALENDAR, dt))

    if Estimator.MM in plan.estimators:
        records.extend(_mm_records(raw, plan.horizon, intervals, Clock.CALENDAR))

    if Estimator.HY in plan.estimators:
        baseline = hy_covariance(raw)
        records.extend(EstimateRecord.from_estimate(baseline, Clock.CALENDAR, dt) for dt in intervals)
    return records


def _event_records(pair, plan: EstimationPlan) -> List[EstimateRecord]:
    for dk in plan.intervals:
        if int(dk) != dk:
            raise DomainError(f"event-time intervals must be whole trade counts, got {dk}")
    records: List[EstimateRecord] = []
    intervals = [int(dk) for dk in plan.intervals]
    clock = shared_event_clock(pair)

    if Estimator.RV in plan.estimators:
        base = event_grid_previous_tick(clock, 1, plan.leading, plan.x0)
        for dk in intervals:
            records.append(_rv_record(downsample(base, dk), Clock.EVENT, dk))

    if Estimator.MM in plan.estimators:
        records.extend(_mm_records(clock, clock.span, intervals, Clock.EVENT))

    if Estimator.HY in plan.estimators:
        baseline = hy_covariance(clock)
        records.extend(EstimateRecord.from_estimate(baseline, Clock.EVENT, dk) for dk in intervals)
    return records


def _volume_records(pair, plan: EstimationPlan) -> List[EstimateRecord]:
    by_estimator = {estimator: [] for estimator in plan.estimators}
    for dt in plan.intervals:
        n = interval_to_sample_count(dt, plan.horizon)
        grid = None
        if n >= 2:
            try:
                grid = volume_clock(pair, n)
            except (EmptySeries, InsufficientVolume) as e:
                if plan.strict:
                    raise
                logger.warning(f"Volume clock at interval {dt}: {e}")
        if grid is None:
            for estimator in plan.estimators:
                by_estimator[estimator].append(EstimateRecord.unavailable(estimator, Clock.VOLUME, dt))
            continue
        for estimator in plan.estimators:
            if estimator is Estimator.RV:
                result = rv_covariance(grid)
            elif estimator is Estimator.HY:
                result = hy_covariance(grid)
            else:
                result = mm_covariance(grid, nyquist_modes(grid))
            by_estimator[estimator].append(EstimateRecord.from_estimate(result, Clock.VOLUME, dt))
        logger.debug(f"Volume clock: interval {dt} -> {n} buckets")
    return [record for estimator in plan.estimators for record in by_estimator[estimator]]


def estimate_pair(pair: Sequence[TransactionSeries], plan: EstimationPlan) -> List[EstimateRecord]:
    """
    All estimates for one pair of series.

    Calendar and event time: RV on previous-tick grids, MM on the raw
    observations with N matched to each interval, HY once as a baseline.
    Volume time: every estimator on the bucket grid of each interval.
    """
    builders = {
        Clock.CALENDAR: _calendar_records,
        Clock.EVENT: _event_records,
        Clock.VOLUME: _volume_records,
    }
    records: List[EstimateRecord] = []
    for clock in plan.clocks:
        clock = Clock(clock)
        try:
            records.extend(builders[clock](pair, plan))
        except (EmptySeries, TooFewObservations) as e:
            if plan.strict:
                raise
            logger.warning(f"{clock.value} estimates unavailable: {e}")
            records.extend(
                EstimateRecord.unavailable(estimator, clock, dt)
                for estimator in plan.estimators
                for dt in plan.intervals
            )
    return records


def sample_grid(pair: Sequence[TransactionSeries], clock: Clock, interval: float, plan: EstimationPlan) -> SampledGrid:
    """The synchronous grid one clock gives at one interval, as RV sees it."""
    clock = Clock(clock)
    if clock is Clock.CALENDAR:
        return calendar_grid_previous_tick(pair, interval, plan.horizon, plan.leading, plan.x0)
    if clock is Clock.EVENT:
        return event_grid_previous_tick(shared_event_clock(pair), interval, plan.leading, plan.x0)
    return volume_clock(pair, interval_to_sample_count(interval, plan.horizon))


def records_frame(records: Sequence[EstimateRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.to_row() for record in records], columns=ESTIMATE_COLUMNS)


def plan_for(config: "ExperimentConfig") -> EstimationPlan:
    return EstimationPlan(
        intervals=config.intervals,
        clocks=config.clocks,
        estimators=config.estimators,
        horizon=config.horizon,
        leading="initial",
        x0=config.x0,
        strict=config.strict,
    )


def replication_entropy(config: "ExperimentConfig", replication: int):
    if config.seeds is not None:
        return as_seed_sequence(config.seeds[replication])
    return replication_seed(config.master_seed, replication)


def simulate_replication(
    config: "ExperimentConfig", replication: int
) -> Tuple[List[EventStream], Tuple[TransactionSeries, TransactionSeries]]:
    """Event streams of one replication and the transactions built from them."""
    simulation_seed, volume_seed_1, volume_seed_2 = replication_entropy(config, replication).spawn(3)
    hawkes = config.hawkes
    spec = build_fine_to_coarse_spec(hawkes.mu, hawkes.alpha_r, hawkes.alpha_c, hawkes.beta, config.horizon)
    streams = simulate(spec, simulation_seed)
    path_1, path_2 = build_price_paths(streams, config.x0)
    pair = (
        to_transactions(path_1, config.volume, volume_seed_1, asset="1", price_mode=config.price_mode),
        to_transactions(path_2, config.volume, volume_seed_2, asset="2", price_mode=config.price_mode),
    )
    return streams, pair


def simulate_pair(config: "ExperimentConfig", replication: int) -> Tuple[TransactionSeries, TransactionSeries]:
    """Simulate one replication's price paths and attach volumes."""
    return simulate_replication(config, replication)[1]


def run_replication(config: "ExperimentConfig", replication: int) -> pd.DataFrame:
    """Simulate and estimate one replication; rows are tagged with its index."""
    pair = simulate_pair(config, replication)
    frame = records_frame(estimate_pair(pair, plan_for(config)))
    frame.insert(0, "replication", replication)
    logger.debug(f"Replication {replication}: {len(pair[0])} + {len(pair[1])} transactions")
    return frame
