import math
from fractions import Fraction

import numpy as np
import pytest

from epps_pipeline.clocks import (
    Clock,
    bucket_averages,
    calendar_grid_previous_tick,
    event_grid_previous_tick,
    interval_to_sample_count,
    periodic_span,
    raw_calendar,
    shared_event_clock,
    volume_bucketing,
    volume_clock,
)
from epps_pipeline.errors import DomainError, EmptySeries, InsufficientVolume
from tests.conftest import make_series


def test_previous_tick_single_trade():
    pair = (make_series("1", [0.0], [100.0]), make_series("2", [0.0], [5.0]))
    grid = calendar_grid_previous_tick(pair, 10.0, 30.0)
    np.testing.assert_array_equal(grid.times[0], [0.0, 10.0, 20.0, 30.0])
    np.testing.assert_array_equal(grid.log_prices[0], [100.0] * 4)
    assert grid.synchronous and grid.homogeneous
    assert grid.interval == 10.0


def test_previous_tick_carries_last_price():
    pair = (make_series("1", [0.0, 15.0], [100.0, 101.0]), make_series("2", [3.0], [5.0]))
    grid = calendar_grid_previous_tick(pair, 10.0, 30.0)
    np.testing.assert_array_equal(grid.log_prices[0], [100.0, 100.0, 101.0, 101.0])
    # asset 2 trades first at t=3, so t=0 is backfilled
    np.testing.assert_array_equal(grid.log_prices[1], [5.0, 5.0, 5.0, 5.0])
    assert grid.leading_fill == (0, 1)


def test_initial_leading_rule_uses_x0():
    pair = (make_series("1", [5.0], [1.0]), make_series("2", [0.0], [2.0]))
    grid = calendar_grid_previous_tick(pair, 2.0, 6.0, leading="initial", x0=(0.0, 0.0))
    np.testing.assert_array_equal(grid.log_prices[0], [0.0, 0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        calendar_grid_previous_tick(pair, 2.0, 6.0, leading="initial")


def test_previous_tick_needs_an_observation():
    pair = (make_series("1", [], []), make_series("2", [0.0], [2.0]))
    with pytest.raises(EmptySeries):
        calendar_grid_previous_tick(pair, 1.0, 3.0)


def test_previous_tick_rejects_bad_interval():
    pair = (make_series("1", [0.0], [1.0]), make_series("2", [0.0], [2.0]))
    with pytest.raises(DomainError):
        calendar_grid_previous_tick(pair, 0.0, 3.0)
    with pytest.raises(DomainError):
        calendar_grid_previous_tick(pair, 5.0, 3.0)


def test_log_transform_applied_on_sampling():
    pair = (
        make_series("1", [0.0, 1.0], [100.0, 110.0], log_transform=True),
        make_series("2", [0.0], [50.0], log_transform=True),
    )
    grid = calendar_grid_previous_tick(pair, 1.0, 2.0)
    np.testing.assert_allclose(grid.log_prices[0], np.log([100.0, 110.0, 110.0]))


def test_raw_calendar_window():
    pair = (make_series("1", [1.0, 4.0], [0.0, 1.0]), make_series("2", [2.0, 6.0], [0.0, -1.0]))
    grid = raw_calendar(pair, horizon=10.0)
    assert (grid.origin, grid.span) == (0.0, 10.0)
    assert grid.counts == (2, 2)
    assert not grid.synchronous and not grid.homogeneous
    np.testing.assert_array_equal(grid.times[1], [2.0, 6.0])

    union = raw_calendar(pair)
    assert (union.origin, union.span) == (1.0, 5.0)


def test_raw_calendar_rejects_empty_asset():
    with pytest.raises(EmptySeries):
        raw_calendar((make_series("1", [], []), make_series("2", [1.0], [1.0])))


def test_event_clock_merge_order():
    pair = (make_series("1", [1.2, 3.4], [0.0, 1.0]), make_series("2", [2.0], [5.0]))
    clock = shared_event_clock(pair)
    np.testing.assert_array_equal(clock.times[0], [1.0, 3.0])
    np.testing.assert_array_equal(clock.times[1], [2.0])
    assert clock.span == 3.0
    assert clock.clock is Clock.EVENT


def test_event_clock_shares_index_on_ties():
    pair = (make_series("1", [1.0], [1.0]), make_series("2", [1.0], [2.0]))
    clock = shared_event_clock(pair)
    assert clock.times[0][0] == clock.times[1][0] == 1.0
    assert clock.synchronous


def test_event_clock_with_one_empty_asset():
    pair = (make_series("1", [1.0, 2.0], [1.0, 2.0]), make_series("2", [], []))
    clock = shared_event_clock(pair)
    np.testing.assert_array_equal(clock.times[0], [1.0, 2.0])
    assert clock.counts == (2, 0)


def test_event_clock_errors():
    with pytest.raises(EmptySeries):
        shared_event_clock((make_series("1", [], []), make_series("2", [], [])))
    with pytest.raises(DomainError):
        shared_event_clock((make_series("1", [1.0, 1.0], [1.0, 2.0]), make_series("2", [2.0], [1.0])))


def test_event_grid_previous_tick():
    pair = (make_series("1", [1.2, 3.4], [10.0, 11.0]), make_series("2", [2.0], [5.0]))
    clock = shared_event_clock(pair)
    grid = event_grid_previous_tick(clock, 1)
    np.testing.assert_array_equal(grid.times[0], [0.0, 1.0, 2.0, 3.0])
    # clock index 2 is asset 2's trade; asset 1 carries its index-1 price
    np.testing.assert_array_equal(grid.log_prices[0], [10.0, 10.0, 10.0, 11.0])
    np.testing.assert_array_equal(grid.log_prices[1], [5.0, 5.0, 5.0, 5.0])

    assert event_grid_previous_tick(clock, 10).counts == (1, 1)
    with pytest.raises(DomainError):
        event_grid_previous_tick(clock, 1.5)


def test_event_grid_halves_with_double_step(rng):
    times = np.cumsum(rng.exponential(1.0, size=200))
    pair = (make_series("1", times[::2], rng.normal(size=100)), make_series("2", times[1::2], rng.normal(size=100)))
    clock = shared_event_clock(pair)
    one = event_grid_previous_tick(clock, 1)
    two = event_grid_previous_tick(clock, 2)
    assert abs(len(two.times[0]) - len(one.times[0]) / 2) <= 1


def test_event_grid_needs_event_clock():
    pair = (make_series("1", [0.0], [1.0]), make_series("2", [0.0], [2.0]))
    with pytest.raises(DomainError):
        event_grid_previous_tick(calendar_grid_previous_tick(pair, 1.0, 2.0), 1)


def test_volume_clock_hand_examples():
    series = make_series("1", [1.0, 2.0, 3.0], [10.0, 11.0, 12.0], volumes=[2, 3, 5])
    pair = (series, series)
    grid = volume_clock(pair, 3)
    np.testing.assert_array_equal(grid.log_prices[0], [31 / 3, 34 / 3, 12.0])
    assert grid.clock is Clock.VOLUME
    assert volume_bucketing(series, 3).bucket_size == 3

    grid = volume_clock(pair, 2)
    np.testing.assert_array_equal(grid.log_prices[0], [10.6, 12.0])


def test_volume_clock_constant_price():
    series = make_series("1", [5.0], [7.0], volumes=[10])
    grid = volume_clock((series, series), 2)
    np.testing.assert_array_equal(grid.log_prices[1], [7.0, 7.0])


def test_volume_clock_averages_before_log():
    series = make_series("1", [1.0, 2.0], [100.0, 200.0], volumes=[1, 1], log_transform=True)
    grid = volume_clock((series, series), 1)
    assert grid.log_prices[0][0] == pytest.approx(math.log(150.0), rel=1e-15)


def test_bucket_averages_match_expanded_list(rng):
    for _ in range(1000):
        size = int(rng.integers(1, 12))
        prices = rng.normal(0.0, 50.0, size=size)
        volumes = rng.integers(1, 40, size=size)
        total = int(volumes.sum())
        n = int(rng.integers(1, total + 1))
        bucket = total // n
        expanded = np.repeat(prices, volumes)[: n * bucket].reshape(n, bucket)
        expected = [math.fsum(row) / bucket for row in expanded]
        np.testing.assert_array_equal(bucket_averages(prices, volumes, n, bucket), expected)


def test_bucket_averages_with_huge_volumes():
    prices = np.array([0.1, 0.7])
    volumes = np.array([(1 << 26) + 3, 3 * (1 << 26)])
    bucket = int(volumes.sum()) // 2
    first = int(volumes[0])
    result = bucket_averages(prices, volumes, 2, bucket)

    # correctly rounded bucket sum, then one division
    first_sum = float(Fraction(0.1) * first + Fraction(0.7) * (bucket - first))
    assert result[0] == first_sum / bucket
    assert result[1] == float(Fraction(0.7) * bucket) / bucket


def test_volume_bucketing_errors():
    series = make_series("1", [1.0], [1.0], volumes=[3])
    with pytest.raises(InsufficientVolume):
        volume_bucketing(series, 4)
    with pytest.raises(DomainError):
        volume_bucketing(series, 0)
    with pytest.raises(EmptySeries):
        volume_bucketing(make_series("1", [], []), 1)


@pytest.mark.parametrize("dt, horizon, expected", [(10, 300, 30), (1, 300, 300), (300, 300, 1), (0.1, 0.3, 3)])
def test_interval_to_sample_count(dt, horizon, expected):
    assert interval_to_sample_count(dt, horizon) == expected


def test_periodic_span_is_odd_steps():
    assert periodic_span(4, 1.0) == 3.0
    assert periodic_span(5, 2.0) == 10.0
    assert periodic_span(1, 1.0) == 1.0


@pytest.mark.parametrize("n1,n2,shared", [(50, 80, 0), (50, 80, 17), (30, 30, 30), (1, 40, 1)])
def test_event_clock_span_counts_collisions_once(rng, n1, n2, shared):
    common = rng.choice(np.arange(0.0, 10000.0, 0.5), size=shared, replace=False)
    pool = np.setdiff1d(np.arange(0.25, 10000.0, 0.5), common)
    own = rng.choice(pool, size=n1 + n2 - 2 * shared, replace=False)
    t1 = np.sort(np.concatenate([common, own[:n1 - shared]]))
    t2 = np.sort(np.concatenate([common, own[n1 - shared:]]))
    pair = (make_series("1", t1, np.zeros(n1)), make_series("2", t2, np.zeros(n2)))
    clock = shared_event_clock(pair)
    assert clock.span == n1 + n2 - shared
    # the last transaction of either asset sits at index K
    assert max(clock.times[0][-1], clock.times[1][-1]) == clock.span
    collisions = np.intersect1d(clock.times[0], clock.times[1]).size
    assert collisions == shared
