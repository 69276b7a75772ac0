"""
Result Export
Atomic CSV/JSON writers for event streams, transactions, grids, estimates and
curves, plus readers for the simulation outputs
"""

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .clocks import SampledGrid
from .errors import ParseError
from .hawkes_engine import EventStream
from .market_model import TransactionSeries

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# round-trip precision for doubles
FLOAT_FORMAT = "%.17g"

STREAM_COLUMNS = ["process_index", "time_seconds"]
TRANSACTION_COLUMNS = ["asset", "time_seconds", "price", "volume"]
GRID_COLUMNS = ["asset", "clock", "interval", "index_or_time", "log_price"]


@contextmanager
def atomic_path(path: PathLike) -> Iterator[Path]:
    """Yield a temporary sibling of path; it replaces path only if the block succeeds."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_frame(frame: pd.DataFrame, path: PathLike) -> str:
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return str(path)


def write_json(data: Dict[str, Any], path: PathLike) -> str:
    with atomic_path(path) as tmp:
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
    return str(path)


def write_event_streams(streams: Sequence[EventStream], path: PathLike) -> str:
    frame = pd.DataFrame({
        "process_index": np.concatenate([np.full(s.count, s.process_index) for s in streams]).astype(int),
        "time_seconds": np.concatenate([s.times for s in streams]),
    }, columns=STREAM_COLUMNS)
    return write_frame(frame, path)


def read_event_streams(path: PathLike, dimension: int) -> List[EventStream]:
    frame = pd.read_csv(path)
    if list(frame.columns) != STREAM_COLUMNS:
        raise ParseError(f"expected columns {STREAM_COLUMNS}, got {list(frame.columns)}", line=1)
    streams = []
    for m in range(dimension):
        times = frame.loc[frame["process_index"] == m, "time_seconds"].to_numpy(dtype=float)
        streams.append(EventStream(times=np.sort(times), process_index=m))
    return streams


def transactions_frame(pair: Sequence[TransactionSeries]) -> pd.DataFrame:
    parts = [
        pd.DataFrame({
            "asset": s.asset,
            "time_seconds": s.times,
            "price": s.prices,
            "volume": s.volumes,
        }, columns=TRANSACTION_COLUMNS)
        for s in pair
    ]
    return pd.concat(parts, ignore_index=True)


def write_transactions(pair: Sequence[TransactionSeries], path: PathLike) -> str:
    return write_frame(transactions_frame(pair), path)


def read_transactions(path: PathLike, log_transform: bool = False) -> Tuple[TransactionSeries, ...]:
    frame = pd.read_csv(path, dtype={"asset": str})
    if list(frame.columns) != TRANSACTION_COLUMNS:
        raise ParseError(f"expected columns {TRANSACTION_COLUMNS}, got {list(frame.columns)}", line=1)
    series = []
    for asset, block in frame.groupby("asset", sort=True):
        series.append(TransactionSeries(
            asset=str(asset),
            times=block["time_seconds"].to_numpy(dtype=float),
            prices=block["price"].to_numpy(dtype=float),
            volumes=block["volume"].to_numpy(dtype=np.int64),
            log_transform=log_transform,
        ))
    return tuple(series)


def grid_frame(grid: SampledGrid) -> pd.DataFrame:
    interval = grid.interval if grid.interval is not None else np.nan
    parts = [
        pd.DataFrame({
            "asset": str(i + 1),
            "clock": grid.clock.value,
            "interval": interval,
            "index_or_time": times,
            "log_price": prices,
        }, columns=GRID_COLUMNS)
        for i, (times, prices) in enumerate(zip(grid.times, grid.log_prices))
    ]
    return pd.concat(parts, ignore_index=True)


def write_grid(grid: SampledGrid, path: PathLike) -> str:
    return write_frame(grid_frame(grid), path)
