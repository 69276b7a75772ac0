"""
Command-line interface for the Epps pipeline

Usage examples:
  python cli.py simulate --config configs/default.json --seed 7 --out-dir out
  python cli.py simulate --events --grids 1 10 --out-dir out
  python cli.py epps --scenario uncorrelated --comparison --diagnostics
  python cli.py epps --config configs/default.json --clock calendar --estimator RV --theory
  python cli.py theory --dt-min 0.01 --dt-max 10000 --points 200
  python cli.py ingest day1.csv day2.csv --symbols FSR SBK
  python cli.py epps --config configs/empirical.json

Notes:
- Exit codes: 0 success, 1 runtime failure, 2 configuration error.
- Flags override the config file, which overrides EPPS_* environment values.
"""

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, ValidationError

import config as env
from epps_pipeline import __version__
from epps_pipeline.clocks import Clock
from epps_pipeline.errors import ConfigError, EppsError
from epps_pipeline.estimators import Estimator
from epps_pipeline.experiments import (
    ExperimentConfig,
    HawkesParams,
    SweepResult,
    comparison_table,
    decoupled,
    distribution_comparison,
    linearity_table,
    run_epps_sweep,
    uncorrelated_scenario,
    with_theory,
)
from epps_pipeline.export import write_event_streams, write_frame, write_grid, write_json, write_transactions
from epps_pipeline.ingest import (
    EmpiricalConfig,
    TradeBook,
    build_daily_pairs,
    load_trades,
    per_day_epps,
    synthetic_trades,
    write_trades,
)
from epps_pipeline.pipeline import plan_for, sample_grid, simulate_replication
from epps_pipeline.theory import dt_grid, params_from_hawkes, theory_table

logger = logging.getLogger("epps_pipeline.cli")


class RunManifest(BaseModel):
    """Everything needed to rerun a command and get the same files"""
    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    version: str = __version__
    started_at: str
    finished_at: str = ""
    outputs: List[str] = []


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def read_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def resolve_experiment(args: argparse.Namespace) -> Tuple[ExperimentConfig, Optional[EmpiricalConfig]]:
    """Merge environment, config file and flags, in increasing priority."""
    data = read_config_file(args.config)
    empirical = data.pop("empirical", None)

    seed = env.env_master_seed()
    if seed is not None:
        data.setdefault("master_seed", seed)
    threads = env.env_threads()
    if threads is not None:
        data.setdefault("threads", threads)

    if args.seed is not None:
        data["master_seed"] = args.seed
        data.pop("seeds", None)
    if args.threads is not None:
        data["threads"] = args.threads
    if getattr(args, "clock", None):
        data["clocks"] = args.clock
    if getattr(args, "estimator", None):
        data["estimators"] = args.estimator
    if getattr(args, "scenario", None):
        data["scenario"] = args.scenario

    experiment = ExperimentConfig.model_validate(data)
    if empirical is None:
        return experiment, None

    if "trade_schema" not in empirical:
        schema = env.env_trade_schema()
        if schema is not None:
            empirical["trade_schema"] = schema.model_dump()
    for key in ("clocks", "estimators", "intervals", "ribbon", "threads"):
        empirical.setdefault(key, data.get(key, getattr(experiment, key)))
    if getattr(args, "clock", None):
        empirical["clocks"] = args.clock
    if getattr(args, "estimator", None):
        empirical["estimators"] = args.estimator
    return experiment, EmpiricalConfig.model_validate(empirical)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir or env.env_out_dir())
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(manifest: RunManifest, out: Path) -> None:
    manifest.finished_at = _now()
    path = out / f"{manifest.command}_manifest.json"
    manifest.outputs.append(str(path))
    write_json(manifest.model_dump(mode="json"), path)
    logger.info(f"Wrote {len(manifest.outputs)} files to {out}")


def _load_book(files: List[str], empirical: EmpiricalConfig) -> TradeBook:
    book = TradeBook()
    for path in files:
        book = book.merged(load_trades(path, empirical.trade_schema, empirical.session))
    return book


def _write_curves(
    result: SweepResult, out: Path, theory: Optional[ExperimentConfig], suffix: str = ""
) -> List[str]:
    outputs = []
    for curve in result.curves:
        frame = curve.to_frame()
        if theory is not None:
            frame = with_theory(frame, theory)
        path = out / f"epps_{curve.clock.value}_{curve.estimator.value}{suffix}.csv"
        outputs.append(write_frame(frame, path))
    return outputs


def _write_extras(args: argparse.Namespace, results: Dict[str, SweepResult], out: Path) -> List[str]:
    """comparison.csv and linearity.csv on request; several results get a `scenario` column."""
    outputs = []
    labelled = len(results) > 1
    if args.comparison:
        tables = []
        for label, result in results.items():
            table = comparison_table(result).reset_index()
            if labelled:
                table.insert(0, "scenario", label)
            tables.append(table)
        outputs.append(write_frame(pd.concat(tables, ignore_index=True), out / "comparison.csv"))
    if args.diagnostics:
        tables = []
        for label, result in results.items():
            table = linearity_table(result.curves)
            if labelled:
                table.insert(0, "scenario", label)
            tables.append(table)
        outputs.append(write_frame(pd.concat(tables, ignore_index=True), out / "linearity.csv"))
    return outputs


def _write_grids(experiment: ExperimentConfig, pair, intervals: List[float], out: Path) -> List[str]:
    plan = plan_for(experiment)
    outputs = []
    for clock in experiment.clocks:
        for interval in intervals:
            if clock is Clock.EVENT and int(interval) != interval:
                logger.warning(f"Event clock needs whole trade counts; grid at {interval:g} skipped")
                continue
            grid = sample_grid(pair, clock, interval, plan)
            outputs.append(write_grid(grid, out / f"grid_{clock.value}_{interval:g}.csv"))
    return outputs


def cmd_simulate(args: argparse.Namespace) -> int:
    started = _now()
    experiment, empirical = resolve_experiment(args)
    if not 0 <= args.replication < experiment.replications:
        raise ConfigError(f"replication {args.replication} outside 0..{experiment.replications - 1}")
    out = _out_dir(args)

    streams, pair = simulate_replication(experiment, args.replication)
    outputs = [write_transactions(pair, out / "transactions.csv")]
    if args.events:
        outputs.append(write_event_streams(streams, out / "events.csv"))
    if args.grids:
        outputs.extend(_write_grids(experiment, pair, args.grids, out))
    logger.info(f"Replication {args.replication}: {len(pair[0])} and {len(pair[1])} transactions")

    if args.empirical_format:
        session = empirical.session if empirical else None
        symbols = empirical.symbols if empirical else ("1", "2")
        trades = pd.concat(
            [synthetic_trades(series, symbol, args.date, session) for series, symbol in zip(pair, symbols)],
            ignore_index=True,
        )
        outputs.append(write_trades(trades, out / "trades.csv"))

    manifest = RunManifest(
        command="simulate",
        config={
            "experiment": experiment.model_dump(mode="json"),
            "replication": args.replication,
            "empirical_format": args.empirical_format,
            "date": args.date,
            "events": args.events,
            "grids": args.grids or [],
        },
        seed=experiment.master_seed,
        started_at=started,
        outputs=outputs,
    )
    _finish(manifest, out)
    return 0


def cmd_epps(args: argparse.Namespace) -> int:
    started = _now()
    experiment, empirical = resolve_experiment(args)
    out = _out_dir(args)

    outputs: List[str] = []
    if empirical is None:
        config_dump: Dict[str, Any] = {"experiment": experiment.model_dump(mode="json")}
        if experiment.scenario == "distributions":
            results = distribution_comparison(experiment, threads=args.threads)
            for label, result in results.items():
                outputs.extend(_write_curves(result, out, None, suffix=f"_{label}"))
                outputs.append(write_frame(result.estimates, out / f"estimates_{label}.csv"))
            if args.theory:
                logger.warning("No closed form applies to volume time; theory overlay skipped")
            outputs.extend(_write_extras(args, results, out))
            return _finish_epps(started, config_dump, experiment.master_seed, outputs, out)
        if experiment.scenario == "uncorrelated":
            result = uncorrelated_scenario(experiment, args.threads)
            theory = decoupled(experiment) if args.theory else None
        else:
            result = run_epps_sweep(experiment, args.threads)
            theory = experiment if args.theory else None
    else:
        book = _load_book(empirical.files, empirical)
        days = build_daily_pairs(book, empirical.symbols, empirical.session, empirical.log_prices)
        result = per_day_epps(
            days,
            empirical.intervals,
            empirical.clocks,
            empirical.estimators,
            horizon=empirical.session.length,
            ribbon_kind=empirical.ribbon,
            threads=args.threads or empirical.threads,
            strict=empirical.strict,
        )
        if args.theory:
            logger.warning("No closed form applies to empirical data; theory overlay skipped")
        theory = None
        config_dump = {"empirical": empirical.model_dump(mode="json")}

    outputs.extend(_write_curves(result, out, theory))
    outputs.append(write_frame(result.estimates, out / "estimates.csv"))
    outputs.extend(_write_extras(args, {experiment.scenario: result}, out))
    return _finish_epps(started, config_dump, experiment.master_seed if empirical is None else None, outputs, out)


def _finish_epps(started: str, config: Dict[str, Any], seed: Optional[int], outputs: List[str], out: Path) -> int:
    manifest = RunManifest(command="epps", config=config, seed=seed, started_at=started, outputs=outputs)
    _finish(manifest, out)
    return 0


def cmd_theory(args: argparse.Namespace) -> int:
    started = _now()
    data = read_config_file(args.config)
    hawkes = HawkesParams.model_validate(data.get("hawkes", {}))
    variance_form = args.variance_form or data.get("variance_form", "corrected")
    if variance_form not in ("corrected", "verbatim"):
        raise ConfigError(f"unknown variance form {variance_form!r}")
    out = _out_dir(args)

    dts = args.dt if args.dt else dt_grid(args.dt_min, args.dt_max, args.points)
    table = theory_table(params_from_hawkes(hawkes), dts, variance_form)
    outputs = [write_frame(table, out / "theory.csv")]

    manifest = RunManifest(
        command="theory",
        config={
            "hawkes": hawkes.model_dump(),
            "variance_form": variance_form,
            "dts": [float(dt) for dt in dts],
        },
        started_at=started,
        outputs=outputs,
    )
    _finish(manifest, out)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    started = _now()
    data = read_config_file(args.config)
    empirical_data = dict(data.get("empirical", {}))
    if args.files:
        empirical_data["files"] = args.files
    if args.symbols:
        empirical_data["symbols"] = args.symbols
    if "trade_schema" not in empirical_data:
        schema = env.env_trade_schema()
        if schema is not None:
            empirical_data["trade_schema"] = schema.model_dump()
    if "symbols" not in empirical_data:
        raise ConfigError("ingest needs two symbols (--symbols or empirical.symbols)")
    empirical = EmpiricalConfig.model_validate(empirical_data)
    out = _out_dir(args)

    book = _load_book(empirical.files, empirical)
    days = build_daily_pairs(book, empirical.symbols, empirical.session, empirical.log_prices)
    outputs = [write_transactions(pair, out / f"transactions_{date}.csv") for date, pair in days]

    manifest = RunManifest(
        command="ingest",
        config={
            "empirical": empirical.model_dump(mode="json"),
            "trades": len(book),
            "dropped_out_of_session": book.dropped_out_of_session,
            "days": [date for date, _ in days],
        },
        started_at=started,
        outputs=outputs,
    )
    _finish(manifest, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Epps effect simulation and estimation")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON configuration file.")
    common.add_argument("--out-dir", type=str, help="Output directory (default EPPS_OUT_DIR or ./epps_output).")
    common.add_argument("--log-level", type=str, help="Logging level (default EPPS_LOG_LEVEL or INFO).")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--seed", type=int, help="Master seed for all replications.")
    run.add_argument("--threads", type=int, help="Worker processes (default: all cores).")

    selection = argparse.ArgumentParser(add_help=False)
    selection.add_argument("--clock", action="append", choices=[c.value for c in Clock],
                           help="Clock to include; repeat for several.")
    selection.add_argument("--estimator", action="append", choices=[e.value for e in Estimator],
                           help="Estimator to include; repeat for several.")

    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common, run], help="Simulate one replication's transactions.")
    simulate.add_argument("--replication", type=int, default=0, help="Replication index to simulate.")
    simulate.add_argument("--empirical-format", action="store_true",
                          help="Also write trades.csv in the empirical trade format.")
    simulate.add_argument("--date", type=str, default="2000-01-03", help="Date stamp for --empirical-format.")
    simulate.add_argument("--events", action="store_true", help="Also write the raw Hawkes event times to events.csv.")
    simulate.add_argument("--grids", type=float, nargs="+", metavar="DT",
                          help="Also write each configured clock's sampled grid at these intervals.")
    simulate.set_defaults(handler=cmd_simulate)

    epps = sub.add_parser("epps", parents=[common, run, selection], help="Epps curves (Monte Carlo or empirical).")
    epps.add_argument("--theory", action="store_true", help="Add the closed-form rho_theory column.")
    epps.add_argument("--scenario", choices=["standard", "uncorrelated", "distributions"],
                      help="Monte Carlo variant (default from config, else standard).")
    epps.add_argument("--comparison", action="store_true",
                      help="Also write comparison.csv, one mean-correlation column per clock and estimator.")
    epps.add_argument("--diagnostics", action="store_true",
                      help="Also write linearity.csv, the slope and R^2 of each curve.")
    epps.set_defaults(handler=cmd_epps)

    theory = sub.add_parser("theory", parents=[common], help="Closed-form correlation over a dt range.")
    theory.add_argument("--dt", type=float, action="append", help="Explicit interval; repeat for several.")
    theory.add_argument("--dt-min", type=float, default=0.01)
    theory.add_argument("--dt-max", type=float, default=1e4)
    theory.add_argument("--points", type=int, default=100)
    theory.add_argument("--variance-form", choices=["corrected", "verbatim"])
    theory.set_defaults(handler=cmd_theory)

    ingest = sub.add_parser("ingest", parents=[common], help="Normalize trade files into daily transactions.")
    ingest.add_argument("files", nargs="*", help="Trade CSV files.")
    ingest.add_argument("--symbols", nargs=2, metavar=("ASSET1", "ASSET2"))
    ingest.set_defaults(handler=cmd_ingest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        level = (args.log_level or env.env_log_level()).upper()
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except (EppsError, OSError) as e:
        logger.error(f"Run failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
