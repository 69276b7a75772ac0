"""
Monte Carlo Experiments
Epps-curve sweeps over replications, clocks and estimators with t-based ribbons
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, field_validator, model_validator
from scipy import stats
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from .clocks import Clock
from .errors import BadParameters, TooFewPoints, TooFewValues
from .estimators import Estimator
from .market_model import STANDARD_VOLUME_SPECS, PriceMode, VolumeDistSpec
from .pipeline import run_replication
from .theory import VarianceForm, params_from_hawkes, theory_rho

logger = logging.getLogger(__name__)

RibbonKind = Literal["dispersion", "standard_error"]
Scenario = Literal["standard", "uncorrelated", "distributions"]

CURVE_COLUMNS = ["clock", "estimator", "interval", "mean_rho", "ribbon_lo", "ribbon_hi", "n_reps"]

_CLOCK_PREFIX = {Clock.CALENDAR: "CT", Clock.EVENT: "ET", Clock.VOLUME: "VT"}


class HawkesParams(BaseModel):
    """Fine-to-coarse model parameters; defaults are the reference calibration"""
    mu: float = 0.015
    alpha_r: float = 0.023
    alpha_c: float = 0.05
    beta: float = 0.11

    @model_validator(mode="after")
    def _stable(self) -> "HawkesParams":
        if self.mu < 0 or self.alpha_r < 0 or self.alpha_c < 0:
            raise ValueError("mu, alpha_r and alpha_c must be non-negative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        radius = (self.alpha_r + self.alpha_c) / self.beta
        if radius >= 1.0:
            raise ValueError(f"spectral radius {radius:.6f} of the branching matrix must be below 1")
        return self

    @property
    def gamma12(self) -> float:
        return self.alpha_r / self.beta

    @property
    def gamma13(self) -> float:
        return self.alpha_c / self.beta


class ExperimentConfig(BaseModel):
    replications: int = 100
    horizon: float = 72000.0
    intervals: List[float] = [float(i) for i in range(1, 101)]
    clocks: List[Clock] = [Clock.CALENDAR, Clock.EVENT, Clock.VOLUME]
    estimators: List[Estimator] = [Estimator.MM, Estimator.RV, Estimator.HY]
    volume: VolumeDistSpec = VolumeDistSpec()
    master_seed: int = 0
    seeds: Optional[List[int]] = None
    hawkes: HawkesParams = HawkesParams()
    x0: Tuple[float, float] = (0.0, 0.0)
    price_mode: PriceMode = "log_level"
    ribbon: RibbonKind = "dispersion"
    variance_form: VarianceForm = "corrected"
    threads: Optional[int] = None
    scenario: Scenario = "standard"
    # a replication whose clock cannot be built aborts the sweep
    strict: bool = True

    @field_validator("replications")
    @classmethod
    def _enough_replications(cls, value: int) -> int:
        if value < 2:
            raise ValueError("at least two replications are needed for a ribbon")
        return value

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

    @field_validator("threads")
    @classmethod
    def _threads(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 1:
            raise ValueError("threads must be at least 1")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.seeds is not None and len(self.seeds) != self.replications:
            raise ValueError(f"{len(self.seeds)} seeds given for {self.replications} replications")
        if Clock.EVENT in self.clocks and any(int(v) != v for v in self.intervals):
            raise ValueError("event-time intervals must be whole trade counts")
        if self.intervals[-1] > self.horizon:
            raise ValueError("sampling intervals cannot exceed the horizon")
        try:
            self.volume.validate_parameters()
        except BadParameters as e:
            raise ValueError(str(e)) from e
        return self


@dataclass(frozen=True, eq=False)
class EppsCurve:
    """Mean correlation and ribbon per interval for one (clock, estimator)"""
    clock: Clock
    estimator: Estimator
    intervals: np.ndarray
    mean_rho: np.ndarray
    ribbon_lo: np.ndarray
    ribbon_hi: np.ndarray
    n_reps: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "clock": self.clock.value,
            "estimator": self.estimator.value,
            "interval": self.intervals,
            "mean_rho": self.mean_rho,
            "ribbon_lo": self.ribbon_lo,
            "ribbon_hi": self.ribbon_hi,
            "n_reps": self.n_reps,
        }, columns=CURVE_COLUMNS)


@dataclass
class SweepResult:
    curves: List[EppsCurve]
    estimates: pd.DataFrame

    def curve(self, clock: Clock, estimator: Estimator) -> EppsCurve:
        for curve in self.curves:
            if curve.clock is Clock(clock) and curve.estimator is Estimator(estimator):
                return curve
        raise KeyError(f"no curve for {clock}/{estimator}")

    def curves_frame(self) -> pd.DataFrame:
        if not self.curves:
            return pd.DataFrame(columns=CURVE_COLUMNS)
        return pd.concat([curve.to_frame() for curve in self.curves], ignore_index=True)


def ribbon(values: Sequence[float], kind: RibbonKind = "dispersion") -> Tuple[float, float, float]:
    """
    Mean with a Student-t band: mean +/- t(0.975, n-1) * sd for "dispersion",
    or the same over sqrt(n) for "standard_error".
    """
    data = np.asarray(values, dtype=float)
    n = data.size
    if n < 2:
        raise TooFewValues(f"a ribbon needs at least 2 values, got {n}")
    mean = float(np.mean(data))
    sd = float(np.std(data, ddof=1))
    half = float(stats.t.ppf(0.975, n - 1)) * sd
    if kind == "standard_error":
        half /= np.sqrt(n)
    elif kind != "dispersion":
        raise ValueError(f"unknown ribbon kind: {kind}")
    return mean, mean - half, mean + half


def aggregate_curves(
    estimates: pd.DataFrame,
    ribbon_kind: RibbonKind = "dispersion",
    group_column: str = "replication",
) -> List[EppsCurve]:
    """
    Collapse per-replication (or per-day) estimates into curves.

    Non-finite correlations are left out of the ribbon; a single remaining
    value collapses the ribbon onto it.
    """
    frame = estimates.sort_values([group_column], kind="stable")
    curves = []
    dropped = 0
    for (clock, estimator), group in frame.groupby(["clock", "estimator"], sort=True):
        intervals, means, lows, highs, counts = [], [], [], [], []
        for interval, block in group.groupby("interval", sort=True):
            values = block["rho"].to_numpy(dtype=float)
            finite = values[np.isfinite(values)]
            dropped += values.size - finite.size
            if finite.size >= 2:
                mean, lo, hi = ribbon(finite, ribbon_kind)
            elif finite.size == 1:
                mean = lo = hi = float(finite[0])
            else:
                mean = lo = hi = float("nan")
            intervals.append(float(interval))
            means.append(mean)
            lows.append(lo)
            highs.append(hi)
            counts.append(int(finite.size))
        curves.append(EppsCurve(
            clock=Clock(clock),
            estimator=Estimator(estimator),
            intervals=np.array(intervals),
            mean_rho=np.array(means),
            ribbon_lo=np.array(lows),
            ribbon_hi=np.array(highs),
            n_reps=np.array(counts),
        ))
    if dropped:
        logger.warning(f"Left {dropped} undefined correlations out of the curves")
    return curves


def _worker_count(config: ExperimentConfig, threads: Optional[int]) -> int:
    workers = threads or config.threads or os.cpu_count() or 1
    return max(1, min(int(workers), config.replications))


def run_epps_sweep(config: ExperimentConfig, threads: Optional[int] = None) -> SweepResult:
    """
    Simulate every replication, estimate all combinations and aggregate curves.

    Args:
        config: Validated experiment; replication i draws from
            replication_seed(master_seed, i) unless explicit seeds are given
        threads: Worker processes, overriding config.threads (default: all cores)

    Returns:
        SweepResult with one curve per (clock, estimator) and the per-replication
        estimates sorted by replication, identical for any worker count
    """
    workers = _worker_count(config, threads)
    indices = range(config.replications)
    logger.info(
        f"Sweep: {config.replications} replications, {len(config.intervals)} intervals, "
        f"clocks {[c.value for c in config.clocks]}, estimators {[e.value for e in config.estimators]}, "
        f"{workers} workers"
    )

    if workers == 1:
        frames = [run_replication(config, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(run_replication, repeat(config), indices))

    estimates = pd.concat(frames, ignore_index=True)
    estimates = estimates.sort_values("replication", kind="stable").reset_index(drop=True)
    curves = aggregate_curves(estimates, config.ribbon)
    logger.info(f"Sweep finished: {len(curves)} curves from {len(estimates)} estimates")
    return SweepResult(curves=curves, estimates=estimates)


def decoupled(config: ExperimentConfig) -> ExperimentConfig:
    return config.model_copy(update={"hawkes": config.hawkes.model_copy(update={"alpha_c": 0.0})})


def uncorrelated_scenario(config: ExperimentConfig, threads: Optional[int] = None) -> SweepResult:
    """The same sweep with the cross-excitation switched off."""
    return run_epps_sweep(decoupled(config), threads)


def distribution_comparison(
    config: ExperimentConfig,
    specs: Optional[Dict[str, VolumeDistSpec]] = None,
    threads: Optional[int] = None,
) -> Dict[str, SweepResult]:
    """Volume-time RV sweeps, one per volume distribution, on shared price paths."""
    specs = STANDARD_VOLUME_SPECS if specs is None else specs
    results = {}
    for label, spec in specs.items():
        logger.info(f"Volume distribution {label}")
        variant = config.model_copy(update={
            "volume": spec,
            "clocks": [Clock.VOLUME],
            "estimators": [Estimator.RV],
        })
        results[label] = run_epps_sweep(variant, threads)
    return results


def comparison_table(result: SweepResult) -> pd.DataFrame:
    """Mean correlation per interval with one column per clock/estimator, e.g. "CT-RV"."""
    columns = {}
    for curve in result.curves:
        name = f"{_CLOCK_PREFIX[curve.clock]}-{curve.estimator.value}"
        columns[name] = pd.Series(curve.mean_rho, index=curve.intervals)
    table = pd.DataFrame(columns)
    table.index.name = "interval"
    return table


def with_theory(frame: pd.DataFrame, config: ExperimentConfig) -> pd.DataFrame:
    """Add rho_theory to calendar-time rows; other clocks have no closed form."""
    params = params_from_hawkes(config.hawkes)
    out = frame.copy()
    calendar = out["clock"] == Clock.CALENDAR.value
    out["rho_theory"] = np.nan
    out.loc[calendar, "rho_theory"] = [
        theory_rho(params, dt, config.variance_form) for dt in out.loc[calendar, "interval"]
    ]
    return out


def linearity_diagnostic(curve: EppsCurve, min_interval: float = 10.0) -> Tuple[float, float]:
    """OLS slope and R^2 of mean correlation against interval, for intervals >= min_interval."""
    if curve.intervals.size < 10:
        raise TooFewPoints(f"need at least 10 intervals, got {curve.intervals.size}")
    mask = (curve.intervals >= min_interval) & np.isfinite(curve.mean_rho)
    if mask.sum() < 2:
        raise TooFewPoints(f"only {int(mask.sum())} usable points at intervals >= {min_interval}")
    x = curve.intervals[mask].reshape(-1, 1)
    y = curve.mean_rho[mask]
    model = LinearRegression().fit(x, y)
    return float(model.coef_[0]), float(r2_score(y, model.predict(x)))


def linearity_table(curves: Sequence[EppsCurve], min_interval: float = 10.0) -> pd.DataFrame:
    """Slope and R^2 per curve; curves with too few usable intervals are left out."""
    rows = []
    for curve in curves:
        try:
            slope, r_squared = linearity_diagnostic(curve, min_interval)
        except TooFewPoints as e:
            logger.warning(f"No linearity fit for {curve.clock.value}/{curve.estimator.value}: {e}")
            continue
        rows.append({
            "clock": curve.clock.value,
            "estimator": curve.estimator.value,
            "slope": slope,
            "r_squared": r_squared,
        })
    return pd.DataFrame(rows, columns=["clock", "estimator", "slope", "r_squared"])
