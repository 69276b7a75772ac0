"""
Exception types for the Epps pipeline
"""


class EppsError(Exception):
    """Base class for every error raised by the pipeline"""


class StabilityViolation(EppsError):
    """Branching matrix has spectral radius >= 1"""


class DomainError(EppsError):
    """Argument outside the domain of an operation"""


class BadParameters(EppsError):
    """Invalid distribution or model parameters"""


class EmptySeries(EppsError):
    """A transaction series has no observations where some are required"""


class InsufficientVolume(EppsError):
    """Total traded volume is smaller than the requested number of buckets"""


class TooFewObservations(EppsError):
    """An estimator needs at least two observations per asset"""


class GridNotSynchronous(EppsError):
    """Estimator requires a synchronous, homogeneous grid"""


class TooFewValues(EppsError):
    """Not enough replications to form a ribbon"""


class TooFewPoints(EppsError):
    """Not enough curve points for a regression"""


class ConfigError(EppsError):
    """Configuration file or environment value is invalid"""


class ParseError(EppsError):
    """Malformed input record"""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class AliasingWarning(UserWarning):
    """Requested Fourier time scale is finer than the observation spacing"""
