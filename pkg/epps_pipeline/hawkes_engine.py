"""
Hawkes Engine
Simulates M-variate mutually exciting Hawkes processes with exponential kernels
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from .errors import DomainError, StabilityViolation

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence]

_UINT64_MASK = (1 << 64) - 1


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def spectral_radius(gamma: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {gamma.shape}")
    if gamma.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(gamma))))


@dataclass(frozen=True, eq=False)
class HawkesSpec:
    """Baseline intensities, exponential kernel parameters and horizon (seconds)"""
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    horizon: float

    def __post_init__(self):
        mu = _readonly(np.atleast_1d(self.mu))
        alpha = _readonly(self.alpha)
        beta = _readonly(self.beta)
        m = mu.shape[0]

        if mu.ndim != 1 or m < 1:
            raise DomainError("mu must be a non-empty vector")
        if alpha.shape != (m, m) or beta.shape != (m, m):
            raise DomainError(f"alpha and beta must be {m}x{m}")
        if np.any(mu < 0):
            raise DomainError("baseline intensities must be non-negative")
        if np.any(alpha < 0):
            raise DomainError("excitation amplitudes must be non-negative")
        if np.any((alpha > 0) & ~(beta > 0)):
            raise DomainError("decay rates must be positive wherever alpha > 0")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")

        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "horizon", float(self.horizon))

        radius = spectral_radius(self.branching_matrix)
        if radius >= 1.0:
            raise StabilityViolation(
                f"spectral radius of the branching matrix is {radius:.6f} (must be < 1)"
            )

    @property
    def dimension(self) -> int:
        return int(self.mu.shape[0])

    @property
    def branching_matrix(self) -> np.ndarray:
        gamma = np.zeros_like(self.alpha)
        active = self.alpha > 0
        gamma[active] = self.alpha[active] / self.beta[active]
        return gamma


@dataclass(frozen=True, eq=False)
class EventStream:
    """Event times (seconds) of one counting process"""
    times: np.ndarray
    process_index: int

    def __post_init__(self):
        times = _readonly(np.atleast_1d(np.asarray(self.times, dtype=float)))
        if times.ndim != 1:
            raise DomainError("event times must be one-dimensional")
        if times.size and (times[0] < 0 or np.any(np.diff(times) <= 0)):
            raise DomainError("event times must be non-negative and strictly increasing")
        object.__setattr__(self, "times", times)

    @property
    def count(self) -> int:
        return int(self.times.size)


def build_fine_to_coarse_spec(
    mu: float,
    alpha_r: float,
    alpha_c: float,
    beta: float,
    horizon: float,
) -> HawkesSpec:
    """
    Four-process spec of the fine-to-coarse price model.

    Processes 0/1 are the up/down ticks of asset 1, 2/3 those of asset 2.
    Reversal kernels link 0<->1 and 2<->3, cross kernels link 0<->2 and 1<->3.
    """
    if mu < 0 or alpha_r < 0 or alpha_c < 0:
        raise DomainError("mu, alpha_r and alpha_c must be non-negative")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")

    r, c = alpha_r, alpha_c
    alpha = np.array([
        [0.0, r, c, 0.0],
        [r, 0.0, 0.0, c],
        [c, 0.0, 0.0, r],
        [0.0, c, r, 0.0],
    ])
    return HawkesSpec(
        mu=np.full(4, float(mu)),
        alpha=alpha,
        beta=np.full((4, 4), float(beta)),
        horizon=horizon,
    )


def replication_seed(master_seed: int, replication: int) -> np.random.SeedSequence:
    """Independent stream for one Monte Carlo replication."""
    return np.random.SeedSequence(
        entropy=int(master_seed) & _UINT64_MASK,
        spawn_key=(int(replication),),
    )


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed) & _UINT64_MASK)


class IntensityState:
    """
    Recursive exponential-kernel state.

    excitation[m, n] holds sum_s alpha[m, n] * exp(-beta[m, n] * (t - s)) over
    past events s of process n, decayed lazily to the last advance() time.
    """

    def __init__(self, spec: HawkesSpec):
        self.spec = spec
        self.time = 0.0
        self.excitation = np.zeros_like(spec.alpha)

    def advance(self, t: float) -> None:
        if t < self.time:
            raise DomainError(f"cannot move intensity state back from {self.time} to {t}")
        if t > self.time:
            self.excitation *= np.exp(-self.spec.beta * (t - self.time))
            self.time = t

    def register(self, process: int) -> None:
        self.excitation[:, process] += self.spec.alpha[:, process]

    def intensities(self) -> np.ndarray:
        return self.spec.mu + self.excitation.sum(axis=1)

    def total(self) -> float:
        return float(self.intensities().sum())


def simulate(spec: HawkesSpec, seed: SeedLike) -> List[EventStream]:
    """
    Simulate one path on [0, horizon] by Ogata thinning.

    Kernels are non-increasing, so the total intensity right after the current
    time bounds the intensity until the next candidate.

    Args:
        spec: Baselines, kernels and horizon of the process
        seed: Integer or SeedSequence; equal seeds give identical paths

    Returns:
        One sorted EventStream per dimension, all times in (0, horizon]
    """
    rng = np.random.default_rng(as_seed_sequence(seed))
    state = IntensityState(spec)
    accepted: List[List[float]] = [[] for _ in range(spec.dimension)]

    t = 0.0
    bound = state.total()
    candidates = 0
    while bound > 0:
        t += rng.exponential(1.0 / bound)
        if t > spec.horizon:
            break
        candidates += 1
        state.advance(t)
        lam = state.intensities()
        total = float(lam.sum())
        u = rng.random() * bound
        if u < total:
            process = int(np.searchsorted(np.cumsum(lam), u, side="right"))
            process = min(process, spec.dimension - 1)
            accepted[process].append(t)
            state.register(process)
        bound = state.total()

    streams = [EventStream(times=np.array(times), process_index=m) for m, times in enumerate(accepted)]
    logger.debug(
        f"Simulated {sum(s.count for s in streams)} events from {candidates} candidates "
        f"over {spec.horizon:.0f}s"
    )
    return streams


def intensity_at(spec: HawkesSpec, history: Sequence[EventStream], m: int, t: float) -> float:
    """Conditional intensity of process m at time t by full-history summation."""
    if not 0 <= m < spec.dimension:
        raise DomainError(f"process index {m} outside 0..{spec.dimension - 1}")

    terms = [float(spec.mu[m])]
    for stream in history:
        n = stream.process_index
        if stream.count == 0:
            continue
        if stream.times[-1] > t:
            raise DomainError(f"history of process {n} contains events after t={t}")
        a = spec.alpha[m, n]
        if a == 0:
            continue
        terms.extend(a * np.exp(-spec.beta[m, n] * (t - stream.times)))
    return float(np.sum(terms))
