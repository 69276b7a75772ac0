"""
Trade Data Ingestion
Loads empirical trade files, clips them to the trading session, merges
same-second trades by VWAP and runs the per-day Epps pipeline
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, PrivateAttr, field_validator, model_validator

from .clocks import Clock
from .errors import DomainError, ParseError
from .estimators import Estimator
from .experiments import RibbonKind, SweepResult, aggregate_curves
from .export import atomic_path
from .market_model import TransactionSeries
from .pipeline import EstimationPlan, estimate_pair, records_frame

logger = logging.getLogger(__name__)

DayPair = Tuple[str, Tuple[TransactionSeries, TransactionSeries]]

# Columns of a trades frame; seconds count from midnight, exchange-local
TRADE_COLUMNS = ["date", "seconds", "symbol", "price", "volume"]


def clock_seconds(values: Iterable[str]) -> pd.Series:
    """Seconds since midnight of HH:MM:SS strings, NaN where a value does not parse."""
    text = pd.Series(values, dtype=object)
    parsed = pd.to_datetime(text.astype(str).str.strip(), format="%H:%M:%S", errors="coerce")
    return parsed.dt.hour * 3600 + parsed.dt.minute * 60 + parsed.dt.second


def clock_strings(seconds: pd.Series) -> pd.Series:
    return pd.to_datetime(seconds.astype(np.int64), unit="s").dt.strftime("%H:%M:%S")


@dataclass(frozen=True)
class TradeRecord:
    """One trade, the row type of a trades frame"""
    date: str
    seconds: int
    symbol: str
    price: float
    volume: int


def trades_frame(records: Iterable[TradeRecord] = ()) -> pd.DataFrame:
    """Trades frame with TRADE_COLUMNS from individual records."""
    records = list(records)
    return pd.DataFrame({
        "date": pd.Series([r.date for r in records], dtype=object),
        "seconds": pd.Series([r.seconds for r in records], dtype=np.int64),
        "symbol": pd.Series([r.symbol for r in records], dtype=object),
        "price": pd.Series([r.price for r in records], dtype=float),
        "volume": pd.Series([r.volume for r in records], dtype=np.int64),
    }, columns=TRADE_COLUMNS)


class SessionSpec(BaseModel):
    start: str = "09:00:00"
    end: str = "16:50:00"

    _bounds: Tuple[int, int] = PrivateAttr(default=(0, 0))

    @model_validator(mode="after")
    def _ordered(self) -> "SessionSpec":
        start, end = clock_seconds([self.start, self.end])
        if np.isnan(start) or np.isnan(end):
            raise ValueError(f"session bounds must be HH:MM:SS, got {self.start!r} and {self.end!r}")
        if end <= start:
            raise ValueError(f"session end {self.end} must follow start {self.start}")
        self._bounds = (int(start), int(end))
        return self

    @property
    def start_seconds(self) -> int:
        return self._bounds[0]

    @property
    def end_seconds(self) -> int:
        return self._bounds[1]

    @property
    def length(self) -> float:
        return float(self.end_seconds - self.start_seconds)

    def contains(self, seconds):
        """Works on a scalar or elementwise on a Series; both bounds are inside."""
        return (seconds >= self.start_seconds) & (seconds <= self.end_seconds)


class TradeSchema(BaseModel):
    """Column names of the trade file"""
    date: str = "date"
    time: str = "time"
    symbol: str = "symbol"
    price: str = "price"
    volume: str = "volume"

    def columns(self) -> List[str]:
        return [self.date, self.time, self.symbol, self.price, self.volume]


@dataclass
class TradeBook:
    trades: pd.DataFrame = field(default_factory=trades_frame)
    dropped_out_of_session: int = 0

    @classmethod
    def from_records(cls, records: Iterable[TradeRecord], dropped_out_of_session: int = 0) -> "TradeBook":
        return cls(trades=trades_frame(records), dropped_out_of_session=dropped_out_of_session)

    def __len__(self) -> int:
        return len(self.trades)

    def records(self) -> List[TradeRecord]:
        return [TradeRecord(*row) for row in self.trades[TRADE_COLUMNS].itertuples(index=False, name=None)]

    def groups(self) -> Dict[Tuple[str, str], pd.DataFrame]:
        """Trades per (date, symbol), time-ordered, file order kept on ties."""
        ordered = self.trades.sort_values("seconds", kind="stable")
        return {key: group for key, group in ordered.groupby(["date", "symbol"], sort=True)}

    def dates(self) -> List[str]:
        return sorted(self.trades["date"].unique().tolist())

    def merged(self, other: "TradeBook") -> "TradeBook":
        frames = [f for f in (self.trades, other.trades) if len(f)]
        trades = pd.concat(frames, ignore_index=True) if frames else trades_frame()
        return TradeBook(
            trades=trades,
            dropped_out_of_session=self.dropped_out_of_session + other.dropped_out_of_session,
        )


class EmpiricalConfig(BaseModel):
    files: List[str] = []
    symbols: Tuple[str, str]
    trade_schema: TradeSchema = TradeSchema()
    session: SessionSpec = SessionSpec()
    intervals: List[float] = [float(i) for i in range(1, 101)]
    clocks: List[Clock] = [Clock.CALENDAR, Clock.EVENT, Clock.VOLUME]
    estimators: List[Estimator] = [Estimator.MM, Estimator.RV, Estimator.HY]
    log_prices: bool = True
    ribbon: RibbonKind = "dispersion"
    threads: Optional[int] = None
    # thin days give NaN estimates unless strict
    strict: bool = False

    @field_validator("symbols")
    @classmethod
    def _distinct(cls, value: Tuple[str, str]) -> Tuple[str, str]:
        if value[0] == value[1]:
            raise ValueError("the two symbols must differ")
        return value


def _first_bad(mask: pd.Series) -> Optional[int]:
    bad = np.flatnonzero(mask.to_numpy())
    return int(bad[0]) if bad.size else None


def load_trades(path: str, schema: Optional[TradeSchema] = None, session: Optional[SessionSpec] = None) -> TradeBook:
    """
    Read and validate a trade CSV.

    Args:
        path: CSV file with a header row
        schema: Column mapping (default date,time,symbol,price,volume)
        session: Trading session; trades outside it are dropped and counted

    Returns:
        TradeBook with the session's trades in file order

    Raises:
        ParseError: for the first bad row; the header is line 1
    """
    schema = schema or TradeSchema()
    session = session or SessionSpec()
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        logger.info(f"{path}: empty trade file")
        return TradeBook()

    missing = [c for c in schema.columns() if c not in frame.columns]
    if missing:
        raise ParseError(f"missing columns {missing}", line=1)
    if frame.empty:
        return TradeBook()

    prices = pd.to_numeric(frame[schema.price], errors="coerce")
    bad = _first_bad(~(np.isfinite(prices) & (prices > 0)))
    if bad is not None:
        raise ParseError(f"malformed price {frame[schema.price].iloc[bad]!r}", line=bad + 2)

    volumes = pd.to_numeric(frame[schema.volume], errors="coerce")
    bad = _first_bad(volumes.isna() | ~(volumes > 0) | (volumes != np.floor(volumes)))
    if bad is not None:
        raise ParseError(f"malformed volume {frame[schema.volume].iloc[bad]!r}", line=bad + 2)

    seconds = clock_seconds(frame[schema.time])
    bad = _first_bad(seconds.isna())
    if bad is not None:
        raise ParseError(f"expected HH:MM:SS, got {frame[schema.time].iloc[bad]!r}", line=bad + 2)

    dates = frame[schema.date].str.strip()
    symbols = frame[schema.symbol].str.strip()
    bad = _first_bad((dates == "") | (symbols == ""))
    if bad is not None:
        raise ParseError("empty date or symbol", line=bad + 2)

    trades = pd.DataFrame({
        "date": dates.astype(object),
        "seconds": seconds.astype(np.int64),
        "symbol": symbols.astype(object),
        "price": prices.astype(float),
        "volume": volumes.astype(np.int64),
    }, columns=TRADE_COLUMNS)
    inside = session.contains(trades["seconds"])
    dropped = int((~inside).sum())
    trades = trades[inside].reset_index(drop=True)

    if dropped:
        logger.warning(f"{path}: dropped {dropped} trades outside {session.start}-{session.end}")
    logger.info(f"{path}: loaded {len(trades)} trades")
    return TradeBook(trades=trades, dropped_out_of_session=dropped)


def vwap_aggregate(
    trades: pd.DataFrame,
    log_transform: bool = True,
    origin: float = 0.0,
    asset: Optional[str] = None,
) -> TransactionSeries:
    """
    Merge trades sharing a timestamp: price = sum(p * v) / sum(v), volume = sum(v).
    Times are shifted by origin (the session start).
    """
    if asset is None:
        asset = str(trades["symbol"].iloc[0]) if len(trades) else ""
    if trades.empty:
        return TransactionSeries(asset=asset, times=[], prices=[], volumes=[], log_transform=log_transform)

    merged = (
        trades.assign(notional=trades["price"] * trades["volume"])
        .groupby("seconds", sort=True)
        .agg(notional=("notional", "sum"), volume=("volume", "sum"))
    )
    if len(merged) < len(trades):
        logger.debug(f"{asset}: {len(trades) - len(merged)} same-second trades merged")
    return TransactionSeries(
        asset=asset,
        times=merged.index.to_numpy(dtype=float) - origin,
        prices=(merged["notional"] / merged["volume"]).to_numpy(),
        volumes=merged["volume"].to_numpy(),
        log_transform=log_transform,
    )


def build_daily_pairs(
    book: TradeBook,
    symbols: Tuple[str, str],
    session: Optional[SessionSpec] = None,
    log_prices: bool = True,
) -> List[DayPair]:
    """One VWAP-aggregated pair per trading day that has trades in both symbols."""
    session = session or SessionSpec()
    groups = book.groups()
    days = []
    for date in book.dates():
        missing = [s for s in symbols if (date, s) not in groups]
        if missing:
            logger.warning(f"{date}: no trades for {missing}, day skipped")
            continue
        pair = tuple(
            vwap_aggregate(groups[(date, s)], log_transform=log_prices, origin=session.start_seconds, asset=s)
            for s in symbols
        )
        days.append((date, pair))
    return days


def _estimate_day(plan: EstimationPlan, index: int, day: DayPair) -> pd.DataFrame:
    date, pair = day
    frame = records_frame(estimate_pair(pair, plan))
    frame.insert(0, "day", index)
    frame.insert(1, "date", date)
    return frame


def per_day_epps(
    days: Sequence[DayPair],
    intervals: Sequence[float],
    clocks: Sequence[Clock],
    estimators: Sequence[Estimator],
    horizon: float = SessionSpec().length,
    ribbon_kind: RibbonKind = "dispersion",
    threads: Optional[int] = None,
    strict: bool = False,
) -> SweepResult:
    """Estimate each day separately and average across days per interval."""
    if not days:
        raise DomainError("no trading days to estimate")
    plan = EstimationPlan(
        intervals=list(intervals),
        clocks=list(clocks),
        estimators=list(estimators),
        horizon=horizon,
        leading="backfill",
        strict=strict,
    )
    workers = max(1, min(threads or os.cpu_count() or 1, len(days)))
    if workers == 1:
        frames = [_estimate_day(plan, i, day) for i, day in enumerate(days)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(_estimate_day, repeat(plan), range(len(days)), days))

    estimates = pd.concat(frames, ignore_index=True)
    logger.info(f"Estimated {len(days)} trading days")
    return SweepResult(curves=aggregate_curves(estimates, ribbon_kind, group_column="day"), estimates=estimates)


def synthetic_trades(
    series: TransactionSeries,
    symbol: str,
    date: str,
    session: Optional[SessionSpec] = None,
) -> pd.DataFrame:
    """
    Simulated transactions in the empirical format: timestamps truncated to
    whole seconds after the session start, prices as positive levels.
    """
    session = session or SessionSpec()
    levels = series.prices if series.log_transform else np.exp(series.prices)
    seconds = session.start_seconds + np.floor(series.times).astype(np.int64)
    keep = session.contains(seconds)
    count = int(keep.sum())
    return pd.DataFrame({
        "date": pd.Series([date] * count, dtype=object),
        "seconds": seconds[keep],
        "symbol": pd.Series([symbol] * count, dtype=object),
        "price": np.asarray(levels, dtype=float)[keep],
        "volume": np.asarray(series.volumes, dtype=np.int64)[keep],
    }, columns=TRADE_COLUMNS)


def write_trades(trades: pd.DataFrame, path: str, schema: Optional[TradeSchema] = None) -> str:
    schema = schema or TradeSchema()
    frame = pd.DataFrame({
        schema.date: trades["date"],
        schema.time: clock_strings(trades["seconds"]),
        schema.symbol: trades["symbol"],
        schema.price: trades["price"],
        schema.volume: trades["volume"],
    }, columns=schema.columns())
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} trades to {path}")
    return str(path)
