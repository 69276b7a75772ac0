import json

import pandas as pd
import pytest

import config as env
from cli import main
from epps_pipeline.export import read_event_streams
from epps_pipeline.ingest import load_trades
from tests.conftest import DEFAULT_LIMIT

LAMBDA = 0.015 / (1 - 0.073 / 0.11)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("EPPS_OUT_DIR", "EPPS_LOG_LEVEL", "EPPS_THREADS", "EPPS_MASTER_SEED", "EPPS_TRADE_SCHEMA"):
        monkeypatch.delenv(name, raising=False)


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def small_experiment(**overrides):
    data = {
        "replications": 2,
        "horizon": 500,
        "intervals": [1, 5, 10],
        "master_seed": 3,
        "threads": 1,
    }
    data.update(overrides)
    return data


class TestTheory:
    def test_default_grid(self, tmp_path):
        assert main(["theory", "--out-dir", str(tmp_path), "--points", "5"]) == 0
        table = pd.read_csv(tmp_path / "theory.csv")
        assert list(table.columns) == ["dt", "rho_theory", "variance_rate", "covariance_rate"]
        assert len(table) == 5
        assert table["dt"].iloc[0] == pytest.approx(0.01)
        assert table["dt"].iloc[-1] == pytest.approx(1e4)
        manifest = json.loads((tmp_path / "theory_manifest.json").read_text())
        assert manifest["command"] == "theory"
        assert str(tmp_path / "theory.csv") in manifest["outputs"]

    def test_large_interval_reaches_limit(self, tmp_path):
        assert main(["theory", "--out-dir", str(tmp_path), "--dt", "1e7"]) == 0
        table = pd.read_csv(tmp_path / "theory.csv")
        assert len(table) == 1
        assert table["rho_theory"].iloc[0] == pytest.approx(DEFAULT_LIMIT, abs=1e-6)

    def test_decoupled_gives_zero_column(self, tmp_path):
        path = write_config(tmp_path, {"hawkes": {"alpha_c": 0.0}})
        assert main(["theory", "--config", path, "--out-dir", str(tmp_path), "--points", "20"]) == 0
        table = pd.read_csv(tmp_path / "theory.csv")
        assert (table["rho_theory"] == 0.0).all()

    def test_single_point(self, tmp_path):
        assert main(["theory", "--out-dir", str(tmp_path), "--points", "1", "--dt-min", "3"]) == 0
        assert len(pd.read_csv(tmp_path / "theory.csv")) == 1

    def test_bad_range_is_a_runtime_failure(self, tmp_path):
        assert main(["theory", "--out-dir", str(tmp_path), "--dt-min", "-1"]) == 1


class TestConfigErrors:
    def test_unstable_model(self, tmp_path):
        path = write_config(tmp_path, {"hawkes": {"alpha_r": 0.06, "alpha_c": 0.06}})
        assert main(["epps", "--config", path, "--out-dir", str(tmp_path)]) == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["simulate", "--config", str(path), "--out-dir", str(tmp_path)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == 2

    def test_bad_log_level(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EPPS_LOG_LEVEL", "chatty")
        assert main(["theory", "--out-dir", str(tmp_path)]) == 2

    def test_validate_config(self, monkeypatch):
        assert env.validate_config()
        monkeypatch.setenv("EPPS_THREADS", "0")
        assert not env.validate_config()
        with pytest.raises(env.ConfigError):
            env.env_threads()


class TestSimulate:
    def test_seed_repeat_gives_identical_files(self, tmp_path):
        path = write_config(tmp_path, small_experiment(horizon=20000))
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", path, "--seed", "11", "--out-dir", str(first)]) == 0
        assert main(["simulate", "--config", path, "--seed", "11", "--out-dir", str(second)]) == 0
        assert (first / "transactions.csv").read_bytes() == (second / "transactions.csv").read_bytes()

        frame = pd.read_csv(first / "transactions.csv", dtype={"asset": str})
        counts = frame.groupby("asset").size()
        for asset in ("1", "2"):
            assert counts[asset] == pytest.approx(2 * LAMBDA * 20000, rel=0.35)
        manifest = json.loads((first / "simulate_manifest.json").read_text())
        assert manifest["seed"] == 11

    def test_empirical_format(self, tmp_path):
        path = write_config(tmp_path, small_experiment(horizon=5000))
        assert main(["simulate", "--config", path, "--empirical-format", "--out-dir", str(tmp_path)]) == 0
        book = load_trades(str(tmp_path / "trades.csv"))
        assert book.dates() == ["2000-01-03"]
        assert set(book.trades["symbol"]) == {"1", "2"}
        assert book.trades["seconds"].between(32400, 60600).all()

    def test_events_and_grids(self, tmp_path):
        path = write_config(tmp_path, small_experiment(horizon=2000))
        argv = ["simulate", "--config", path, "--events", "--grids", "1", "2.5", "--out-dir", str(tmp_path)]
        assert main(argv) == 0
        events = read_event_streams(tmp_path / "events.csv", dimension=4)
        transactions = pd.read_csv(tmp_path / "transactions.csv", dtype={"asset": str})
        assert sum(s.count for s in events) > 0
        assert all(s.times.max() <= 2000 for s in events if s.count)
        # every event moves exactly one price
        assert sum(s.count for s in events) == len(transactions)

        calendar = pd.read_csv(tmp_path / "grid_calendar_1.csv", dtype={"asset": str})
        assert (calendar.groupby("asset").size() == 2001).all()
        assert (tmp_path / "grid_calendar_2.5.csv").exists()
        assert (tmp_path / "grid_event_1.csv").exists()
        assert not (tmp_path / "grid_event_2.5.csv").exists()
        volume = pd.read_csv(tmp_path / "grid_volume_1.csv", dtype={"asset": str})
        assert (volume.groupby("asset").size() == 2000).all()
        outputs = json.loads((tmp_path / "simulate_manifest.json").read_text())["outputs"]
        assert str(tmp_path / "events.csv") in outputs

    def test_replication_out_of_range(self, tmp_path):
        path = write_config(tmp_path, small_experiment())
        assert main(["simulate", "--config", path, "--replication", "5", "--out-dir", str(tmp_path)]) == 2

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EPPS_MASTER_SEED", "42")
        data = small_experiment()
        del data["master_seed"]
        path = write_config(tmp_path, data)
        assert main(["simulate", "--config", path, "--out-dir", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "simulate_manifest.json").read_text())["seed"] == 42


class TestEpps:
    def test_all_curves_with_theory(self, tmp_path):
        path = write_config(tmp_path, small_experiment())
        assert main(["epps", "--config", path, "--out-dir", str(tmp_path), "--theory"]) == 0
        curve_files = sorted(p.name for p in tmp_path.glob("epps_*.csv"))
        assert len(curve_files) == 9
        calendar = pd.read_csv(tmp_path / "epps_calendar_RV.csv")
        assert list(calendar["interval"]) == [1.0, 5.0, 10.0]
        assert calendar["rho_theory"].notna().all()
        event = pd.read_csv(tmp_path / "epps_event_MM.csv")
        assert event["rho_theory"].isna().all()
        estimates = pd.read_csv(tmp_path / "estimates.csv")
        assert set(estimates["replication"]) == {0, 1}
        manifest = json.loads((tmp_path / "epps_manifest.json").read_text())
        assert manifest["config"]["experiment"]["replications"] == 2

    def test_clock_and_estimator_flags(self, tmp_path):
        path = write_config(tmp_path, small_experiment())
        argv = ["epps", "--config", path, "--out-dir", str(tmp_path), "--clock", "calendar", "--estimator", "RV"]
        assert main(argv) == 0
        assert [p.name for p in tmp_path.glob("epps_*.csv")] == ["epps_calendar_RV.csv"]
        assert "rho_theory" not in pd.read_csv(tmp_path / "epps_calendar_RV.csv").columns

    def test_uncorrelated_scenario(self, tmp_path):
        path = write_config(tmp_path, small_experiment())
        argv = ["epps", "--config", path, "--out-dir", str(tmp_path), "--scenario", "uncorrelated",
                "--clock", "calendar", "--estimator", "RV", "--theory"]
        assert main(argv) == 0
        curve = pd.read_csv(tmp_path / "epps_calendar_RV.csv")
        assert (curve["rho_theory"] == 0.0).all()
        manifest = json.loads((tmp_path / "epps_manifest.json").read_text())
        assert manifest["config"]["experiment"]["scenario"] == "uncorrelated"

    def test_distributions_scenario(self, tmp_path):
        path = write_config(tmp_path, small_experiment(scenario="distributions", horizon=2000))
        assert main(["epps", "--config", path, "--out-dir", str(tmp_path), "--comparison"]) == 0
        curves = sorted(p.name for p in tmp_path.glob("epps_*.csv"))
        assert curves and all(name.startswith("epps_volume_RV_") for name in curves)
        comparison = pd.read_csv(tmp_path / "comparison.csv")
        assert list(comparison.columns) == ["scenario", "interval", "VT-RV"]
        assert comparison["scenario"].nunique() == len(curves)

    def test_comparison_and_diagnostics(self, tmp_path):
        intervals = [float(i) for i in range(1, 21)]
        path = write_config(tmp_path, small_experiment(horizon=2000, intervals=intervals))
        argv = ["epps", "--config", path, "--out-dir", str(tmp_path), "--clock", "calendar",
                "--estimator", "RV", "--estimator", "HY", "--comparison", "--diagnostics"]
        assert main(argv) == 0
        comparison = pd.read_csv(tmp_path / "comparison.csv")
        assert list(comparison.columns) == ["interval", "CT-HY", "CT-RV"]
        assert list(comparison["interval"]) == intervals
        linearity = pd.read_csv(tmp_path / "linearity.csv")
        assert list(linearity.columns) == ["clock", "estimator", "slope", "r_squared"]
        assert set(linearity["estimator"]) == {"RV", "HY"}
        # HY does not depend on the interval
        assert linearity.set_index("estimator").loc["HY", "slope"] == pytest.approx(0.0, abs=1e-12)

    def test_empirical_mode(self, tmp_path):
        trades = tmp_path / "trades.csv"
        rows = ["date,time,symbol,price,volume"]
        for date in ("2019-05-06", "2019-05-07"):
            for k in range(200):
                stamp = f"{9 + k // 60:02d}:{k % 60:02d}:{(7 * k) % 60:02d}"
                rows.append(f"{date},{stamp},AAA,{100 + (k * 37) % 11},{1 + k % 5}")
                rows.append(f"{date},{stamp},BBB,{50 + (k * 13) % 7},{2 + k % 3}")
        trades.write_text("\n".join(rows) + "\n")
        path = write_config(tmp_path, {
            "intervals": [60, 120],
            "clocks": ["calendar"],
            "estimators": ["RV", "HY"],
            "threads": 1,
            "empirical": {"files": [str(trades)], "symbols": ["AAA", "BBB"]},
        })
        out = tmp_path / "out"
        assert main(["epps", "--config", path, "--out-dir", str(out)]) == 0
        curve = pd.read_csv(out / "epps_calendar_RV.csv")
        assert list(curve["n_reps"]) == [2, 2]
        estimates = pd.read_csv(out / "estimates.csv")
        assert set(estimates["date"]) == {"2019-05-06", "2019-05-07"}


class TestIngest:
    def test_daily_files(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(
            "date,time,symbol,price,volume\n"
            "2019-05-06,09:00:05,AAA,100,2\n"
            "2019-05-06,09:00:05,AAA,101,2\n"
            "2019-05-06,09:01:00,BBB,50,1\n"
            "2019-05-07,10:00:00,AAA,99,1\n"
            "2019-05-07,10:00:01,BBB,51,1\n"
            "2019-05-07,08:00:00,BBB,51,1\n"
        )
        out = tmp_path / "out"
        assert main(["ingest", str(trades), "--symbols", "AAA", "BBB", "--out-dir", str(out)]) == 0
        first = pd.read_csv(out / "transactions_2019-05-06.csv")
        aaa = first[first["asset"] == "AAA"]
        assert list(aaa["time_seconds"]) == [5.0]
        assert list(aaa["price"]) == [100.5]
        assert list(aaa["volume"]) == [4]
        assert (out / "transactions_2019-05-07.csv").exists()
        manifest = json.loads((out / "ingest_manifest.json").read_text())
        assert manifest["config"]["dropped_out_of_session"] == 1
        assert manifest["config"]["days"] == ["2019-05-06", "2019-05-07"]

    def test_missing_file(self, tmp_path):
        argv = ["ingest", str(tmp_path / "missing.csv"), "--symbols", "AAA", "BBB", "--out-dir", str(tmp_path)]
        assert main(argv) == 1

    def test_symbols_required(self, tmp_path):
        assert main(["ingest", "--out-dir", str(tmp_path)]) == 2
