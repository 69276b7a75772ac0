"""
Market Model
Builds fine-to-coarse price paths from Hawkes event streams and attaches
transaction volumes drawn from configurable distributions
"""

import logging
from dataclasses import dataclass
from typing import Dict, Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .errors import BadParameters, DomainError
from .hawkes_engine import EventStream, SeedLike, as_seed_sequence

logger = logging.getLogger(__name__)

PriceMode = Literal["log_level", "exp"]


@dataclass(frozen=True, eq=False)
class PricePath:
    """Log-price level X_t observed at its jump times"""
    times: np.ndarray
    log_prices: np.ndarray
    x0: float

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True, eq=False)
class TransactionSeries:
    """
    The (time, price, volume) tuples of one asset.

    With log_transform=True the prices are raw levels and the clocks take
    their log once, after any averaging; otherwise prices are used as-is.
    """
    asset: str
    times: np.ndarray
    prices: np.ndarray
    volumes: np.ndarray
    log_transform: bool = False

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        prices = np.array(self.prices, dtype=float)
        volumes = np.array(self.volumes, dtype=np.int64)
        if not (times.shape == prices.shape == volumes.shape) or times.ndim != 1:
            raise DomainError(f"asset {self.asset}: times, prices and volumes must be equal-length vectors")
        if times.size > 1 and np.any(np.diff(times) < 0):
            raise DomainError(f"asset {self.asset}: transaction times must be non-decreasing")
        if np.any(volumes < 1):
            raise DomainError(f"asset {self.asset}: volumes must be at least 1")
        if self.log_transform and np.any(prices <= 0):
            raise DomainError(f"asset {self.asset}: raw prices must be positive for the log transform")
        for name, value in (("times", times), ("prices", prices), ("volumes", volumes)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.times) > 0))

    @property
    def total_volume(self) -> int:
        return int(self.volumes.sum())

    def values(self) -> np.ndarray:
        """Prices on the scale the estimators use."""
        return transform_prices(self.prices, self.log_transform)


def transform_prices(prices: np.ndarray, log_transform: bool) -> np.ndarray:
    return np.log(prices) if log_transform else np.asarray(prices, dtype=float)


class VolumeDistSpec(BaseModel):
    """IID transaction-volume distribution"""
    kind: Literal["power_law", "uniform", "normal", "beta"] = "power_law"
    # power law: density alpha * x_m^alpha / x^(alpha + 1), x >= x_m
    x_m: float = 20.0
    tail_alpha: float = 1.7
    lo: int = 1
    hi: int = 100
    mean: float = 50.0
    sd: float = 5.0
    a: float = 2.0
    b: float = 2.0
    scale: float = 100.0

    @property
    def label(self) -> str:
        if self.kind == "beta":
            return f"beta({self.a:g},{self.b:g})"
        return self.kind

    def validate_parameters(self) -> None:
        if self.kind == "power_law":
            if not self.x_m > 0:
                raise BadParameters(f"power-law scale x_m must be positive, got {self.x_m}")
            if not self.tail_alpha > 0:
                raise BadParameters(f"power-law tail exponent must be positive, got {self.tail_alpha}")
        elif self.kind == "uniform":
            if self.lo < 1 or self.hi < self.lo:
                raise BadParameters(f"uniform bounds must satisfy 1 <= lo <= hi, got [{self.lo}, {self.hi}]")
        elif self.kind == "normal":
            if not self.sd > 0 or not self.mean > 0:
                raise BadParameters("normal volumes need a positive mean and standard deviation")
        elif self.kind == "beta":
            if not (self.a > 0 and self.b > 0 and self.scale > 0):
                raise BadParameters("beta shapes and scale must be positive")


STANDARD_VOLUME_SPECS: Dict[str, VolumeDistSpec] = {
    spec.label: spec
    for spec in (
        VolumeDistSpec(kind="power_law"),
        VolumeDistSpec(kind="uniform"),
        VolumeDistSpec(kind="normal"),
        VolumeDistSpec(kind="beta", a=0.1, b=0.1),
        VolumeDistSpec(kind="beta", a=0.2, b=0.2),
        VolumeDistSpec(kind="beta", a=2.0, b=2.0),
    )
}


def build_price_paths(
    streams: Sequence[EventStream],
    x0: Tuple[float, float] = (0.0, 0.0),
) -> Tuple[PricePath, PricePath]:
    """X^1 = X0^1 + N_1 - N_2 and X^2 = X0^2 + N_3 - N_4 (processes 0..3)."""
    if len(streams) != 4:
        raise DomainError(f"expected 4 event streams, got {len(streams)}")
    by_index = {stream.process_index: stream for stream in streams}
    if sorted(by_index) != [0, 1, 2, 3]:
        raise DomainError("event streams must carry process indices 0..3")

    paths = []
    for asset, (up, down) in enumerate(((0, 1), (2, 3))):
        up_times = by_index[up].times
        down_times = by_index[down].times
        times = np.concatenate([up_times, down_times])
        jumps = np.concatenate([np.ones(up_times.size), -np.ones(down_times.size)])
        # stable sort keeps up-ticks first on (impossible) exact ties
        order = np.argsort(times, kind="stable")
        start = float(x0[asset])
        paths.append(PricePath(
            times=times[order],
            log_prices=start + np.cumsum(jumps[order]),
            x0=start,
        ))
    return paths[0], paths[1]


def sample_volumes(dist: VolumeDistSpec, count: int, seed: SeedLike) -> np.ndarray:
    """IID volumes rounded to integers and floored at 1."""
    dist.validate_parameters()
    if count < 0:
        raise DomainError(f"count must be non-negative, got {count}")
    rng = np.random.default_rng(as_seed_sequence(seed))

    if dist.kind == "power_law":
        draws = dist.x_m * (1.0 + rng.pareto(dist.tail_alpha, size=count))
    elif dist.kind == "uniform":
        draws = rng.integers(dist.lo, dist.hi + 1, size=count).astype(float)
    elif dist.kind == "normal":
        draws = rng.normal(dist.mean, dist.sd, size=count)
        bad = draws <= 0
        while np.any(bad):
            draws[bad] = rng.normal(dist.mean, dist.sd, size=int(bad.sum()))
            bad = draws <= 0
    else:
        draws = dist.scale * rng.beta(dist.a, dist.b, size=count)

    return np.maximum(np.rint(draws), 1).astype(np.int64)


def to_transactions(
    path: PricePath,
    dist: VolumeDistSpec,
    seed: SeedLike,
    asset: str = "1",
    price_mode: PriceMode = "log_level",
) -> TransactionSeries:
    """One transaction per price event; volumes independent of the path."""
    volumes = sample_volumes(dist, len(path), seed)
    if price_mode == "log_level":
        return TransactionSeries(asset=asset, times=path.times, prices=path.log_prices, volumes=volumes)
    if price_mode == "exp":
        return TransactionSeries(
            asset=asset,
            times=path.times,
            prices=np.exp(path.log_prices),
            volumes=volumes,
            log_transform=True,
        )
    raise DomainError(f"unknown price mode: {price_mode}")
