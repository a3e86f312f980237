"""Exception hierarchy shared by all ecgkit modules.

Two broad families matter for the CLI exit-code contract: ``ConfigError``
(bad flags/parameters, exit 2) and ``DataError`` (bad input data, exit 3).
"""


class EcgKitError(Exception):
    """Base class for all ecgkit errors."""


class ConfigError(EcgKitError):
    """Invalid configuration or parameters."""


class DataError(EcgKitError):
    """Invalid or unusable input data."""


# --- file ingestion ---------------------------------------------------------

class MissingMetadata(DataError):
    """A required ``# key=value`` metadata line is absent or unparseable."""


class NonContiguousIndex(DataError):
    """sample_index column is not 0,1,2,... contiguous."""


class NonFiniteSample(DataError):
    """A NaN or infinite voltage value was encountered."""


class TooShort(DataError):
    """Record shorter than the minimum duration for the operation."""


class IoFailure(EcgKitError):
    """Underlying file I/O failed."""


class BadHeader(DataError):
    """CSV header row does not match the expected columns."""


class NegativeInterval(DataError):
    """An interval value is zero or negative."""


class IntervalOutOfRange(DataError):
    """An interval value is implausibly large (>= 2000 ms)."""


class EmptyJoin(DataError):
    """No overlapping records carry the requested parameter on both sides."""


# --- preprocessing ----------------------------------------------------------

class WindowTooLong(ConfigError):
    """Median-filter window does not fit in the record."""


class InvalidCutoffs(ConfigError):
    """Bandpass cutoffs invalid for the record's sampling rate."""


# --- delineation ------------------------------------------------------------

class SignalTooShort(DataError):
    """Signal shorter than the support of the largest wavelet scale."""


class EmptyBeats(DataError):
    """No R peaks supplied to the delineator."""


# --- intervals --------------------------------------------------------------

class NonPositiveInput(ConfigError):
    """qt/rr arguments must be strictly positive."""


# --- statistics -------------------------------------------------------------

class DegenerateVariance(DataError):
    """Zero variance where a spread is required."""


class TooFewPairs(DataError):
    """Not enough pairs for the statistic."""


class TooFewValues(DataError):
    """Not enough values for the statistic."""


class AllTied(DataError):
    """Every value identical on one side; ranks are undefined."""


# --- diagnostics ------------------------------------------------------------

class LengthMismatch(DataError):
    """Paired sequences have different lengths."""


class Empty(DataError):
    """Empty input where at least one element is required."""


class OneClassOnly(DataError):
    """Both classes must be represented in the truth labels."""


class UnknownSource(ConfigError):
    """No classification threshold is configured for this source tag."""


# --- synthesis --------------------------------------------------------------

class InfeasibleTargets(ConfigError):
    """Requested intervals/morphology cannot be realized consistently."""


class InvalidNoiseSpec(ConfigError):
    """Noise parameters are out of range or inconsistent."""
