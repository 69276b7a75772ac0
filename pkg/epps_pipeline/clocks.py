"""
Sampling Clocks
Re-expresses transaction series under calendar, event and volume time
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, EmptySeries, InsufficientVolume
from .market_model import TransactionSeries, transform_prices

logger = logging.getLogger(__name__)

SeriesPair = Tuple[TransactionSeries, TransactionSeries]
LeadingRule = Literal["backfill", "initial"]

# Veltkamp splitting constant 2**27 + 1
_SPLITTER = 134217729.0
_MAX_MULTIPLIER = 1 << 26


class Clock(str, Enum):
    CALENDAR = "calendar"
    EVENT = "event"
    VOLUME = "volume"


def periodic_span(n_points: int, interval: float) -> float:
    """
    Fourier window of a synchronous homogeneous grid.

    The window covers the smallest odd number of lattice steps that holds all
    returns, so the Dirichlet kernel vanishes between distinct return times
    when 2N + 1 equals that number of steps.
    """
    returns = max(int(n_points) - 1, 1)
    steps = returns if returns % 2 == 1 else returns + 1
    return steps * float(interval)


@dataclass(frozen=True, eq=False)
class SampledGrid:
    """
    Observations of both assets under one clock, ready for an estimator.

    homogeneous: every observation lies on the lattice origin + k * interval.
    origin/span: window mapped onto [0, 2pi] by the Fourier estimator.
    leading_fill: per asset, grid points filled before the first observation.
    """
    times: Tuple[np.ndarray, np.ndarray]
    log_prices: Tuple[np.ndarray, np.ndarray]
    clock: Clock
    synchronous: bool
    homogeneous: bool
    interval: Optional[float]
    origin: float
    span: float
    leading_fill: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        times = tuple(np.array(t, dtype=float) for t in self.times)
        prices = tuple(np.array(p, dtype=float) for p in self.log_prices)
        if len(times) != 2 or len(prices) != 2:
            raise DomainError("a sampled grid holds exactly two assets")
        for t, p in zip(times, prices):
            if t.shape != p.shape or t.ndim != 1:
                raise DomainError("observation times and log-prices must be equal-length vectors")
            t.setflags(write=False)
            p.setflags(write=False)
        if self.synchronous and not np.array_equal(times[0], times[1]):
            raise DomainError("synchronous grids must share one time vector")
        if self.span < 0:
            raise DomainError(f"span must be non-negative, got {self.span}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "log_prices", prices)
        object.__setattr__(self, "clock", Clock(self.clock))

    @property
    def counts(self) -> Tuple[int, int]:
        return int(self.times[0].size), int(self.times[1].size)


@dataclass(frozen=True)
class VolumeBucketing:
    n: int
    bucket_size: int
    total_volume: int


def _check_pair(pair: Sequence[TransactionSeries]) -> SeriesPair:
    if len(pair) != 2:
        raise DomainError(f"expected a pair of transaction series, got {len(pair)}")
    return pair[0], pair[1]


def _leading_value(values: np.ndarray, asset: str, rule: LeadingRule, x0: Optional[float]) -> Optional[float]:
    if rule == "backfill":
        return float(values[0]) if values.size else None
    if rule == "initial":
        if x0 is None:
            raise DomainError(f"asset {asset}: the 'initial' leading rule needs a known X0")
        return float(x0)
    raise DomainError(f"unknown leading rule: {rule}")


def _previous_tick(
    times: np.ndarray,
    values: np.ndarray,
    points: np.ndarray,
    fill: Optional[float],
    asset: str,
) -> Tuple[np.ndarray, int]:
    idx = np.searchsorted(times, points, side="right") - 1
    leading = idx < 0
    n_leading = int(leading.sum())
    if n_leading and fill is None:
        raise EmptySeries(f"asset {asset}: no observation to carry onto the grid")
    sampled = np.empty(points.size)
    if values.size:
        sampled[~leading] = values[idx[~leading]]
    sampled[leading] = fill if n_leading else 0.0
    return sampled, n_leading


def calendar_grid_previous_tick(
    pair: Sequence[TransactionSeries],
    dt: float,
    horizon: float,
    leading: LeadingRule = "backfill",
    x0: Optional[Tuple[float, float]] = None,
) -> SampledGrid:
    """Synchronous grid {0, dt, 2dt, ..., <= T} filled by the previous-tick rule."""
    if not dt > 0:
        raise DomainError(f"sampling interval must be positive, got {dt}")
    if horizon < dt:
        raise DomainError(f"horizon {horizon} is shorter than the interval {dt}")
    series = _check_pair(pair)

    steps = int(math.floor(horizon / dt + 1e-9))
    points = dt * np.arange(steps + 1)

    sampled, filled = [], []
    for i, s in enumerate(series):
        values = s.values()
        fill = _leading_value(values, s.asset, leading, None if x0 is None else x0[i])
        column, n_leading = _previous_tick(s.times, values, points, fill, s.asset)
        sampled.append(column)
        filled.append(n_leading)

    if any(filled):
        logger.debug(f"Calendar grid dt={dt}: leading fill {filled} ({leading})")
    return SampledGrid(
        times=(points, points),
        log_prices=(sampled[0], sampled[1]),
        clock=Clock.CALENDAR,
        synchronous=True,
        homogeneous=True,
        interval=float(dt),
        origin=0.0,
        span=periodic_span(points.size, dt),
        leading_fill=(filled[0], filled[1]),
    )


def raw_calendar(pair: Sequence[TransactionSeries], horizon: Optional[float] = None) -> SampledGrid:
    """
    Transactions as observed, no interpolation.

    The Fourier window is [0, horizon] when the horizon is known, otherwise
    the span of the union of observations.
    """
    series = _check_pair(pair)
    for s in series:
        if len(s) == 0:
            raise EmptySeries(f"asset {s.asset} has no transactions")

    if horizon is not None:
        origin, span = 0.0, float(horizon)
    else:
        origin = float(min(s.times[0] for s in series))
        span = float(max(s.times[-1] for s in series)) - origin

    return SampledGrid(
        times=(series[0].times, series[1].times),
        log_prices=(series[0].values(), series[1].values()),
        clock=Clock.CALENDAR,
        synchronous=bool(np.array_equal(series[0].times, series[1].times)),
        homogeneous=False,
        interval=None,
        origin=origin,
        span=span,
    )


def shared_event_clock(pair: Sequence[TransactionSeries]) -> SampledGrid:
    """
    One clock for both assets: each distinct transaction time advances it by one.

    Cross-asset transactions with the same timestamp share a clock index.
    """
    series = _check_pair(pair)
    if all(len(s) == 0 for s in series):
        raise EmptySeries("both assets are empty")
    for s in series:
        if not s.strictly_increasing:
            raise DomainError(f"asset {s.asset}: times must be strictly increasing (aggregate duplicates first)")

    merged = np.unique(np.concatenate([s.times for s in series]))
    clock_times = tuple(np.searchsorted(merged, s.times).astype(float) + 1.0 for s in series)

    return SampledGrid(
        times=clock_times,
        log_prices=(series[0].values(), series[1].values()),
        clock=Clock.EVENT,
        synchronous=bool(np.array_equal(clock_times[0], clock_times[1])),
        homogeneous=True,
        interval=1.0,
        origin=0.0,
        span=float(merged.size),
    )


def event_grid_previous_tick(
    grid: SampledGrid,
    dk: int,
    leading: LeadingRule = "backfill",
    x0: Optional[Tuple[float, float]] = None,
) -> SampledGrid:
    """Sample the shared event clock every dk units with previous-tick fill."""
    if grid.clock is not Clock.EVENT or grid.interval != 1.0:
        raise DomainError("event-time previous-tick sampling needs a shared event clock grid")
    if int(dk) != dk or dk < 1:
        raise DomainError(f"event interval must be a positive integer, got {dk}")
    dk = int(dk)

    points = np.arange(0, int(grid.span) + 1, dk, dtype=float)
    sampled, filled = [], []
    for i in range(2):
        asset = str(i + 1)
        values = grid.log_prices[i]
        fill = _leading_value(values, asset, leading, None if x0 is None else x0[i])
        column, n_leading = _previous_tick(grid.times[i], values, points, fill, asset)
        sampled.append(column)
        filled.append(n_leading)

    return SampledGrid(
        times=(points, points),
        log_prices=(sampled[0], sampled[1]),
        clock=Clock.EVENT,
        synchronous=True,
        homogeneous=True,
        interval=float(dk),
        origin=0.0,
        span=periodic_span(points.size, dk),
        leading_fill=(filled[0], filled[1]),
    )


def volume_bucketing(series: TransactionSeries, n: int) -> VolumeBucketing:
    if int(n) != n or n < 1:
        raise DomainError(f"target sample count must be a positive integer, got {n}")
    if len(series) == 0:
        raise EmptySeries(f"asset {series.asset} has no transactions")
    total = series.total_volume
    if total < n:
        raise InsufficientVolume(f"asset {series.asset}: {total} shares cannot fill {n} buckets")
    return VolumeBucketing(n=int(n), bucket_size=total // int(n), total_volume=total)


def _exact_product_terms(price: float, count: int) -> List[float]:
    """Doubles whose exact sum is price * count (Veltkamp split)."""
    c = _SPLITTER * price
    hi = c - (c - price)
    lo = price - hi
    terms = []
    while count > 0:
        k = min(count, _MAX_MULTIPLIER)
        terms.append(hi * k)
        terms.append(lo * k)
        count -= k
    return terms


def bucket_averages(prices: np.ndarray, volumes: np.ndarray, n: int, bucket_size: int) -> np.ndarray:
    """
    Mean of each run of bucket_size shares, streaming over the trades.

    Each bucket sum is correctly rounded, so the result matches averaging the
    literally expanded price list bit for bit. The incomplete tail is dropped.
    """
    out = np.empty(n)
    trade = 0
    remaining = int(volumes[0])
    for bucket in range(n):
        need = bucket_size
        terms: List[float] = []
        while need > 0:
            take = min(need, remaining)
            terms.extend(_exact_product_terms(float(prices[trade]), take))
            need -= take
            remaining -= take
            if remaining == 0:
                trade += 1
                if trade < len(volumes):
                    remaining = int(volumes[trade])
        out[bucket] = math.fsum(terms) / bucket_size
    return out


def volume_clock(pair: Sequence[TransactionSeries], n: int) -> SampledGrid:
    """
    Exactly n volume-bucket samples per asset; synchronous and homogeneous.

    Args:
        pair: Transactions of both assets
        n: Buckets per asset; each holds floor(total volume / n) shares

    Returns:
        SampledGrid on the integer points 0..n-1 holding volume-weighted prices

    Raises:
        EmptySeries: if either asset has no transactions
        InsufficientVolume: if an asset trades fewer than n shares
    """
    series = _check_pair(pair)
    sampled = []
    for s in series:
        bucketing = volume_bucketing(s, n)
        averaged = bucket_averages(s.prices, s.volumes, bucketing.n, bucketing.bucket_size)
        sampled.append(transform_prices(averaged, s.log_transform))
        logger.debug(
            f"Volume clock asset {s.asset}: V={bucketing.bucket_size} over {bucketing.total_volume} shares, "
            f"{bucketing.total_volume - bucketing.n * bucketing.bucket_size} discarded"
        )

    points = np.arange(int(n), dtype=float)
    return SampledGrid(
        times=(points, points),
        log_prices=(sampled[0], sampled[1]),
        clock=Clock.VOLUME,
        synchronous=True,
        homogeneous=True,
        interval=1.0,
        origin=0.0,
        span=periodic_span(points.size, 1.0),
    )


def interval_to_sample_count(dt: float, horizon: float) -> int:
    """Number of calendar samples an interval yields over [0, T]; the volume-clock target."""
    if not dt > 0:
        raise DomainError(f"sampling interval must be positive, got {dt}")
    return int(math.floor(horizon / dt + 1e-9))
