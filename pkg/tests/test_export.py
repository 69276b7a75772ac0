import json

import numpy as np
import pandas as pd
import pytest

from epps_pipeline.clocks import calendar_grid_previous_tick, raw_calendar
from epps_pipeline.errors import ParseError
from epps_pipeline.export import (
    GRID_COLUMNS,
    atomic_path,
    grid_frame,
    read_event_streams,
    read_transactions,
    write_event_streams,
    write_grid,
    write_json,
    write_transactions,
)
from epps_pipeline.hawkes_engine import build_fine_to_coarse_spec, simulate
from tests.conftest import make_series


def test_event_streams_survive_a_file(tmp_path):
    streams = simulate(build_fine_to_coarse_spec(0.015, 0.023, 0.05, 0.11, 3000.0), 4)
    path = write_event_streams(streams, tmp_path / "streams.csv")
    back = read_event_streams(path, 4)
    for a, b in zip(streams, back):
        assert a.process_index == b.process_index
        np.testing.assert_array_equal(a.times, b.times)


def test_transactions_survive_a_file(tmp_path):
    pair = (
        make_series("1", [0.1, 1.0 / 3.0], [100.0, 100.25], volumes=[5, 7], log_transform=True),
        make_series("2", [2.0], [0.5], volumes=[1], log_transform=True),
    )
    path = write_transactions(pair, tmp_path / "tx.csv")
    back = read_transactions(path, log_transform=True)
    assert [s.asset for s in back] == ["1", "2"]
    for a, b in zip(pair, back):
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.prices, b.prices)
        np.testing.assert_array_equal(a.volumes, b.volumes)
        assert b.log_transform


def test_readers_check_columns(tmp_path):
    path = tmp_path / "wrong.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        read_transactions(path)
    with pytest.raises(ParseError):
        read_event_streams(path, 4)


def test_grid_frame():
    pair = (make_series("1", [0.0, 1.5], [1.0, 2.0]), make_series("2", [0.5], [3.0]))
    frame = grid_frame(calendar_grid_previous_tick(pair, 1.0, 2.0))
    assert list(frame.columns) == GRID_COLUMNS
    assert len(frame) == 6
    assert set(frame["clock"]) == {"calendar"}
    assert list(frame.loc[frame["asset"] == "1", "log_price"]) == [1.0, 1.0, 2.0]

    raw = grid_frame(raw_calendar(pair))
    assert raw["interval"].isna().all()


def test_write_grid_and_json(tmp_path):
    pair = (make_series("1", [0.0], [1.0]), make_series("2", [0.0], [2.0]))
    path = write_grid(calendar_grid_previous_tick(pair, 1.0, 3.0), tmp_path / "grids" / "grid.csv")
    assert len(pd.read_csv(path)) == 8
    json_path = write_json({"a": 1, "name": "ρ"}, tmp_path / "m.json")
    assert json.loads(open(json_path, encoding="utf-8").read()) == {"a": 1, "name": "ρ"}


def test_atomic_path_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out.csv"
    target.write_text("old")
    with pytest.raises(RuntimeError):
        with atomic_path(target) as tmp:
            tmp.write_text("partial")
            raise RuntimeError("boom")
    assert target.read_text() == "old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.csv"]
