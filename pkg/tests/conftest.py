import numpy as np
import pytest

from epps_pipeline.clocks import Clock, SampledGrid
from epps_pipeline.experiments import ExperimentConfig, HawkesParams
from epps_pipeline.market_model import TransactionSeries
from epps_pipeline.theory import params_from_hawkes

DEFAULT_LIMIT = 13300 / 20189


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_hawkes():
    return HawkesParams()


@pytest.fixture
def default_params(default_hawkes):
    return params_from_hawkes(default_hawkes)


@pytest.fixture
def small_config():
    """A sweep that finishes in seconds."""
    return ExperimentConfig(
        replications=3,
        horizon=2000.0,
        intervals=[1.0, 2.0, 5.0, 10.0],
        master_seed=7,
        threads=1,
    )


def make_series(asset, times, prices, volumes=None, log_transform=False):
    times = np.asarray(times, dtype=float)
    if volumes is None:
        volumes = np.ones(times.size, dtype=np.int64)
    return TransactionSeries(asset=asset, times=times, prices=prices, volumes=volumes, log_transform=log_transform)


def lattice_grid(x, y, interval=1.0, span=None, clock=Clock.CALENDAR):
    """Synchronous homogeneous grid from two equal-length log-price vectors."""
    from epps_pipeline.clocks import periodic_span

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    times = interval * np.arange(x.size)
    return SampledGrid(
        times=(times, times),
        log_prices=(x, y),
        clock=clock,
        synchronous=True,
        homogeneous=True,
        interval=interval,
        origin=0.0,
        span=periodic_span(x.size, interval) if span is None else span,
    )


def async_grid(t1, x, t2, y, span=None, origin=0.0):
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if span is None:
        span = max(t1[-1], t2[-1]) - origin
    return SampledGrid(
        times=(t1, t2),
        log_prices=(np.asarray(x, dtype=float), np.asarray(y, dtype=float)),
        clock=Clock.CALENDAR,
        synchronous=False,
        homogeneous=False,
        interval=None,
        origin=origin,
        span=span,
    )
