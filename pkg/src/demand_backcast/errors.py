"""Exception types shared across the package.

The three top-level families map onto CLI exit codes: ``ConfigError`` -> 1,
``DataError`` -> 2, ``NumericalError`` -> 3.
"""


class BackcastError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(BackcastError):
    pass


class DataError(BackcastError):
    pass


class NumericalError(BackcastError):
    pass


# ingest
class MalformedHeader(DataError):
    pass


class BadTimestamp(DataError):
    def __init__(self, line: int, text: str):
        super().__init__(f"line {line}: cannot parse timestamp {text!r}")
        self.line = line
        self.text = text


class EmptyInput(DataError):
    pass


class MissingTemperature(DataError):
    def __init__(self, timestamp):
        super().__init__(f"no temperature for demand hour {timestamp}")
        self.timestamp = timestamp


class TooManyMissing(DataError):
    def __init__(self, fraction: float, threshold: float):
        super().__init__(
            f"missing demand fraction {fraction:.4f} exceeds threshold {threshold:.4f}"
        )
        self.fraction = fraction
        self.threshold = threshold


class NegativeKelvin(DataError):
    pass


class ImplausibleTemperature(DataError):
    pass


# features
class TooFewRecords(DataError):
    pass


class SeriesTooShort(DataError):
    pass


# piecewise
class NonFiniteInput(DataError):
    pass


class RankDeficientWarning(UserWarning):
    """Design matrix lost rank; a minimum-norm solution was returned."""


# neural
class DimensionMismatch(BackcastError, ValueError):
    pass


class StaleCache(BackcastError):
    pass


class Diverged(NumericalError):
    pass


# metrics
class LengthMismatch(BackcastError, ValueError):
    pass


class ConstantTarget(DataError):
    pass


class DegreesOfFreedom(DataError):
    pass


class AllTargetsZero(DataError):
    pass


class ConstantInput(DataError):
    pass


# synth / pipeline
class InvalidScenario(ConfigError):
    pass


class ConfigSpanError(ConfigError):
    pass
