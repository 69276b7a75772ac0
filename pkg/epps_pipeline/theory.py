"""
Closed-Form Theory
Calendar-time covariance rates and correlation of the fine-to-coarse Hawkes model
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
import pandas as pd

from .errors import DomainError

logger = logging.getLogger(__name__)

VarianceForm = Literal["corrected", "verbatim"]

_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class TheoryParams:
    """Scalars of the closed-form covariance; q2/q3 are carried but unused."""
    lam: float
    r: float
    c1: float
    c2: float
    q1: float
    q2: float
    q3: float
    q4: float
    g1: float
    g2: float

    @property
    def a(self) -> float:
        return self.r * self.c1 / (2.0 * self.g1)

    @property
    def b(self) -> float:
        return self.r * self.c2 / (2.0 * self.g2)


def theory_params(mu: float, beta: float, gamma12: float, gamma13: float) -> TheoryParams:
    s = gamma12 + gamma13
    d = gamma12 - gamma13
    if s >= 1.0:
        raise DomainError(f"Gamma12 + Gamma13 = {s} must be below 1")
    if gamma12 < 0 or gamma13 < 0:
        raise DomainError("branching ratios must be non-negative")
    if not beta > 0 or mu < 0:
        raise DomainError("need beta > 0 and mu >= 0")

    q_denominator = ((gamma12 + 1.0) ** 2 - gamma13 ** 2) * (1.0 - s)
    q_outer = -mu * (gamma12 ** 2 + gamma12 - gamma13 ** 2) / q_denominator
    q_inner = -mu * gamma13 / q_denominator
    return TheoryParams(
        lam=mu / (1.0 - s),
        r=beta * mu / (s - 1.0),
        c1=(2.0 + s) * s / (1.0 + s),
        c2=(2.0 + d) * d / (1.0 + d),
        q1=q_outer,
        q2=q_inner,
        q3=q_inner,
        q4=q_outer,
        g1=beta * (1.0 + s),
        g2=beta * (1.0 + d),
    )


def params_from_hawkes(hawkes) -> TheoryParams:
    """TheoryParams of a model given by mu, alpha_r, alpha_c and beta attributes."""
    return theory_params(
        mu=hawkes.mu,
        beta=hawkes.beta,
        gamma12=hawkes.alpha_r / hawkes.beta,
        gamma13=hawkes.alpha_c / hawkes.beta,
    )


def _saturation(x: float) -> float:
    """1 - (1 - exp(-x)) / x, rising from 0 at x = 0 to 1 as x grows."""
    if x < _SERIES_CUTOFF:
        return x / 2.0 - x * x / 6.0 + x ** 3 / 24.0 - x ** 4 / 120.0
    return 1.0 + math.expm1(-x) / x


def _check_dt(dt: float) -> float:
    if not dt > 0 or not math.isfinite(dt):
        raise DomainError(f"sampling interval must be positive and finite, got {dt}")
    return float(dt)


def theory_variance_rate(params: TheoryParams, dt: float, variance_form: VarianceForm = "corrected") -> float:
    """
    C11 / dt.

    "verbatim" keeps the Q1 coefficient of the printed formula, which grows
    like 1/dt at small scales; "corrected" uses C1 in its place.
    """
    dt = _check_dt(dt)
    x1, x2 = params.g1 * dt, params.g2 * dt
    if variance_form == "corrected":
        return params.lam + params.a * _saturation(x1) + params.b * _saturation(x2)
    if variance_form == "verbatim":
        tail = params.r * (params.q1 * math.exp(-x1) - params.c1) / (2.0 * params.g1 ** 2 * dt)
        return params.lam + params.a + params.b * _saturation(x2) + tail
    raise DomainError(f"unknown variance form: {variance_form}")


def theory_covariance_rate(params: TheoryParams, dt: float) -> float:
    """C12 / dt."""
    dt = _check_dt(dt)
    return -params.a * _saturation(params.g1 * dt) + params.b * _saturation(params.g2 * dt)


def theory_rho(params: TheoryParams, dt: float, variance_form: VarianceForm = "corrected") -> float:
    return theory_covariance_rate(params, dt) / theory_variance_rate(params, dt, variance_form)


def theory_rho_limit(gamma12: float, gamma13: float) -> float:
    """Large-scale correlation 2 G13 (1 + G12) / (1 + G13^2 + 2 G12 + G12^2)."""
    if gamma12 + gamma13 >= 1.0:
        raise DomainError(f"Gamma12 + Gamma13 = {gamma12 + gamma13} must be below 1")
    return 2.0 * gamma13 * (1.0 + gamma12) / (1.0 + gamma13 ** 2 + 2.0 * gamma12 + gamma12 ** 2)


def dt_grid(dt_min: float, dt_max: float, points: int) -> np.ndarray:
    """Log-spaced sampling intervals; a single point yields [dt_min]."""
    if points < 1:
        raise DomainError(f"need at least one point, got {points}")
    if not (0 < dt_min <= dt_max):
        raise DomainError(f"need 0 < dt_min <= dt_max, got {dt_min}, {dt_max}")
    if points == 1:
        return np.array([float(dt_min)])
    return np.geomspace(dt_min, dt_max, points)


def theory_table(
    params: TheoryParams,
    dts: Iterable[float],
    variance_form: VarianceForm = "corrected",
) -> pd.DataFrame:
    rows = []
    for dt in dts:
        rows.append({
            "dt": float(dt),
            "rho_theory": theory_rho(params, dt, variance_form),
            "variance_rate": theory_variance_rate(params, dt, variance_form),
            "covariance_rate": theory_covariance_rate(params, dt),
        })
    logger.debug(f"Evaluated theory at {len(rows)} sampling intervals ({variance_form})")
    return pd.DataFrame(rows, columns=["dt", "rho_theory", "variance_rate", "covariance_rate"])
