"""
Covariance Estimators
Malliavin-Mancino Fourier, Hayashi-Yoshida and realised-volatility estimates of
the integrated covariance of a sampled pair
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clocks import SampledGrid, periodic_span
from .errors import AliasingWarning, DomainError, GridNotSynchronous, TooFewObservations

logger = logging.getLogger(__name__)

# Modes per block / blocks per matrix product in the nonuniform sum
_BLOCK = 64
_CHUNK = 256
_IMAG_TOLERANCE = 1e-8
_RHO_TOLERANCE = 1e-12


class Estimator(str, Enum):
    MM = "MM"
    RV = "RV"
    HY = "HY"


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """
    Integrated covariance matrix of two assets with its correlation.

    scale is the time-scale parameter: N for MM, the grid interval for RV/HY.
    flags: "aliasing", "rho_clamped" or "degenerate".
    """
    sigma: np.ndarray
    rho: float
    estimator: Estimator
    scale: float
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.shape != (2, 2):
            raise DomainError(f"covariance matrix must be 2x2, got {sigma.shape}")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "estimator", Estimator(self.estimator))

    @property
    def sigma11(self) -> float:
        return float(self.sigma[0, 0])

    @property
    def sigma12(self) -> float:
        return float(self.sigma[0, 1])

    @property
    def sigma22(self) -> float:
        return float(self.sigma[1, 1])


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """
    Per asset c(s) = sum_h exp(-i s tau_h) delta_h for s = -N..N.

    tau holds the left endpoints of the returns rescaled onto [0, 2pi].
    """
    coefficients: Tuple[np.ndarray, np.ndarray]
    tau: Tuple[np.ndarray, np.ndarray]
    returns: Tuple[np.ndarray, np.ndarray]
    n_modes: int

    def truncated(self, n_modes: int) -> Tuple[np.ndarray, np.ndarray]:
        if not 1 <= n_modes <= self.n_modes:
            raise DomainError(f"N={n_modes} outside 1..{self.n_modes}")
        lo = self.n_modes - n_modes
        hi = self.n_modes + n_modes + 1
        return self.coefficients[0][lo:hi], self.coefficients[1][lo:hi]


def _check_observations(grid: SampledGrid, minimum: int = 2) -> None:
    for asset, count in enumerate(grid.counts, start=1):
        if count < minimum:
            raise TooFewObservations(f"asset {asset} has {count} observations, need at least {minimum}")


def _require_lattice(grid: SampledGrid) -> None:
    if not (grid.synchronous and grid.homogeneous):
        raise GridNotSynchronous(f"{grid.clock.value} grid is not synchronous and homogeneous")


def _correlation(sigma: np.ndarray, flags: List[str]) -> float:
    s11, s12, s22 = sigma[0, 0], sigma[0, 1], sigma[1, 1]
    if not (s11 > 0 and s22 > 0):
        flags.append("degenerate")
        return float("nan")
    rho = float(s12 / math.sqrt(s11 * s22))
    if abs(rho) > 1.0:
        if abs(rho) - 1.0 > _RHO_TOLERANCE:
            flags.append("rho_clamped")
            logger.warning(f"Correlation {rho:.12f} outside [-1, 1], clamped")
        rho = math.copysign(1.0, rho)
    return rho


def _build_estimate(sigma: np.ndarray, estimator: Estimator, scale: float, flags: List[str]) -> CovarianceEstimate:
    rho = _correlation(sigma, flags)
    return CovarianceEstimate(sigma=sigma, rho=rho, estimator=estimator, scale=float(scale), flags=tuple(flags))


def _lattice_indices(grid: SampledGrid, times: np.ndarray) -> Optional[Tuple[np.ndarray, int]]:
    """Integer lattice positions and period when the grid sits on a lattice."""
    if not grid.homogeneous or not grid.interval:
        return None
    period = grid.span / grid.interval
    m = int(round(period))
    if m < 1 or abs(period - m) > 1e-6:
        return None
    position = (times - grid.origin) / grid.interval
    k = np.rint(position)
    if np.any(np.abs(position - k) > 1e-6) or np.any(k < 0) or np.any(k >= m):
        return None
    return k.astype(np.int64), m


def _lattice_coefficients(k: np.ndarray, m: int, returns: np.ndarray, n_modes: int) -> np.ndarray:
    spread = np.bincount(k, weights=returns, minlength=m)
    spectrum = np.fft.fft(spread)
    return spectrum[np.arange(n_modes + 1) % m]


def _nonuniform_coefficients(tau: np.ndarray, returns: np.ndarray, n_modes: int) -> np.ndarray:
    """
    c(s) for s = 0..N as anchor exponentials times one shared block of
    exponentials: c(s0 + k) = sum_h [exp(-i s0 tau_h) delta_h] exp(-i k tau_h).
    """
    out = np.empty(n_modes + 1, dtype=complex)
    inner = np.exp(-1j * np.outer(np.arange(_BLOCK), tau)).T
    starts = np.arange(0, n_modes + 1, _BLOCK)
    for lo in range(0, starts.size, _CHUNK):
        anchors = starts[lo:lo + _CHUNK]
        weighted = np.exp(-1j * np.outer(anchors, tau)) * returns
        flat = (weighted @ inner).ravel()
        first = int(anchors[0])
        length = min(flat.size, n_modes + 1 - first)
        out[first:first + length] = flat[:length]
    return out


def fourier_coefficients(grid: SampledGrid, n_modes: int) -> FourierCoefficients:
    """Coefficient vectors of both assets' returns up to mode N."""
    _check_observations(grid)
    if int(n_modes) != n_modes or n_modes < 1:
        raise DomainError(f"number of Fourier modes must be a positive integer, got {n_modes}")
    if not grid.span > 0:
        raise DomainError(f"Fourier window must have positive span, got {grid.span}")
    n_modes = int(n_modes)

    coefficients, taus, deltas = [], [], []
    for times, prices in zip(grid.times, grid.log_prices):
        returns = np.diff(prices)
        left = times[:-1]
        tau = 2.0 * np.pi * (left - grid.origin) / grid.span
        lattice = _lattice_indices(grid, left)
        if lattice is not None:
            half = _lattice_coefficients(lattice[0], lattice[1], returns, n_modes)
        else:
            half = _nonuniform_coefficients(tau, returns, n_modes)
        half[0] = returns.sum()
        coefficients.append(np.concatenate([np.conj(half[:0:-1]), half]))
        taus.append(tau)
        deltas.append(returns)

    return FourierCoefficients(
        coefficients=(coefficients[0], coefficients[1]),
        tau=(taus[0], taus[1]),
        returns=(deltas[0], deltas[1]),
        n_modes=n_modes,
    )


def _smallest_gap(grid: SampledGrid) -> float:
    merged = np.unique(np.concatenate(grid.times))
    gaps = np.diff(merged)
    gaps = gaps[gaps > 0]
    return float(gaps.min()) if gaps.size else float("inf")


def _mm_sigma(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    norm = c1.size
    cross = np.sum(c1 * np.conj(c2)) / norm
    if abs(cross.imag) > _IMAG_TOLERANCE * max(abs(cross.real), np.finfo(float).tiny):
        logger.warning(f"Fourier cross term has imaginary residue {cross.imag:.3e}")
    s11 = float(np.sum(np.abs(c1) ** 2) / norm)
    s22 = float(np.sum(np.abs(c2) ** 2) / norm)
    s12 = float(cross.real)
    return np.array([[s11, s12], [s12, s22]])


def _aliasing(grid: SampledGrid, n_modes: int, gap: float) -> bool:
    implied = grid.span / (2 * n_modes + 1)
    return implied < gap * (1.0 - 1e-9)


def mm_covariance_curve(grid: SampledGrid, n_modes_list: Sequence[int]) -> List[CovarianceEstimate]:
    """MM estimates at several N from one set of coefficient vectors."""
    if len(n_modes_list) == 0:
        return []
    coefficients = fourier_coefficients(grid, max(int(n) for n in n_modes_list))
    gap = _smallest_gap(grid)

    estimates, aliased = [], []
    for n_modes in n_modes_list:
        flags: List[str] = []
        if _aliasing(grid, n_modes, gap):
            flags.append("aliasing")
            aliased.append(int(n_modes))
        c1, c2 = coefficients.truncated(int(n_modes))
        estimates.append(_build_estimate(_mm_sigma(c1, c2), Estimator.MM, n_modes, flags))

    if aliased:
        warnings.warn(
            f"N in {aliased} implies a sampling interval below the smallest observation gap {gap:g}",
            AliasingWarning,
            stacklevel=2,
        )
    return estimates


def mm_covariance(grid: SampledGrid, n_modes: int) -> CovarianceEstimate:
    """
    Fourier estimate with Dirichlet weights 1/(2N + 1) over |s| <= N.

    Args:
        grid: Sampled prices of both assets; need not be synchronous
        n_modes: Cutoff N, a positive integer

    Returns:
        CovarianceEstimate scaled by the window span; flagged `aliasing`
        when N exceeds the Nyquist cutoff of the smallest sampling gap
    """
    return mm_covariance_curve(grid, [n_modes])[0]


def n_from_interval(horizon: float, dt: float) -> int:
    """Number of Fourier modes matching a sampling interval: floor((T/dt - 1) / 2)."""
    if not (dt > 0 and dt <= horizon):
        raise DomainError(f"need 0 < dt <= T, got dt={dt}, T={horizon}")
    return int(math.floor((horizon / dt - 1.0) / 2.0))


def nyquist_modes(grid: SampledGrid) -> int:
    """N at which MM coincides with RV on a synchronous homogeneous grid."""
    _require_lattice(grid)
    steps = int(round(grid.span / grid.interval))
    return max((steps - 1) // 2, 1)


def rv_covariance(grid: SampledGrid) -> CovarianceEstimate:
    """Sum of products of aligned returns."""
    _require_lattice(grid)
    _check_observations(grid)
    r1 = np.diff(grid.log_prices[0])
    r2 = np.diff(grid.log_prices[1])
    s11 = math.fsum(r1 * r1)
    s12 = math.fsum(r1 * r2)
    s22 = math.fsum(r2 * r2)
    sigma = np.array([[s11, s12], [s12, s22]])
    return _build_estimate(sigma, Estimator.RV, grid.interval, [])


def hayashi_yoshida_sum(
    times1: np.ndarray,
    returns1: np.ndarray,
    times2: np.ndarray,
    returns2: np.ndarray,
) -> float:
    """
    Sum of return products over overlapping half-open intervals.

    times hold all observation times, returns the differences between them, so
    return h covers (times[h], times[h + 1]].
    """
    products = []
    h, l = 0, 0
    n1, n2 = returns1.size, returns2.size
    while h < n1 and l < n2:
        a0, a1 = times1[h], times1[h + 1]
        b0, b1 = times2[l], times2[l + 1]
        if max(a0, b0) < min(a1, b1):
            products.append(returns1[h] * returns2[l])
        if a1 < b1:
            h += 1
        elif b1 < a1:
            l += 1
        else:
            h += 1
            l += 1
    return math.fsum(products)


def hy_covariance(grid: SampledGrid) -> CovarianceEstimate:
    """Hayashi-Yoshida estimate; diagonals are each asset's own realised variance."""
    _check_observations(grid)
    t1, t2 = grid.times
    r1 = np.diff(grid.log_prices[0])
    r2 = np.diff(grid.log_prices[1])
    s12 = hayashi_yoshida_sum(t1, r1, t2, r2)
    sigma = np.array([[math.fsum(r1 * r1), s12], [s12, math.fsum(r2 * r2)]])
    scale = grid.interval if grid.interval is not None else float("nan")
    return _build_estimate(sigma, Estimator.HY, scale, [])


def downsample(grid: SampledGrid, k: int) -> SampledGrid:
    """Keep every k-th observation (indices 0, k, 2k, ...) of both assets."""
    _require_lattice(grid)
    if int(k) != k or k < 1:
        raise DomainError(f"downsampling factor must be a positive integer, got {k}")
    k = int(k)
    if k == 1:
        return grid
    times = grid.times[0][::k]
    interval = grid.interval * k
    return SampledGrid(
        times=(times, times),
        log_prices=(grid.log_prices[0][::k], grid.log_prices[1][::k]),
        clock=grid.clock,
        synchronous=True,
        homogeneous=True,
        interval=interval,
        origin=grid.origin,
        span=periodic_span(times.size, interval),
        leading_fill=tuple(-(-n // k) for n in grid.leading_fill),
    )


def estimate(grid: SampledGrid, estimator: Estimator, n_modes: Optional[int] = None) -> CovarianceEstimate:
    """Dispatch by estimator; MM defaults to the Nyquist N of a lattice grid."""
    estimator = Estimator(estimator)
    if estimator is Estimator.RV:
        return rv_covariance(grid)
    if estimator is Estimator.HY:
        return hy_covariance(grid)
    if n_modes is None:
        n_modes = nyquist_modes(grid)
    return mm_covariance(grid, n_modes)
