"""Exception types shared across the suite.

Each pipeline stage raises these instead of bare ValueError so callers can
route failures (skip-and-count, retry, abort) without string matching.
"""


class DtfError(Exception):
    """Base class for all suite errors."""


# ingest
class MalformedRow(DtfError):
    """CSV row has the wrong arity or cannot be split."""


class UnknownSensor(DtfError):
    """Column or topic names a sensor that no config resolves."""


class ConnectionLost(DtfError):
    """Telemetry transport died before a clean close."""


class PayloadDecode(DtfError):
    """Message payload could not be decoded into a reading."""


# preprocess
class EmptyDataset(DtfError):
    """No rows left (or provided) where at least one is required."""


class NoLabels(DtfError):
    """Operation requires a labeled dataset."""


class SingleClass(DtfError):
    """Operation requires both classes present in the labels."""


# labeler
class WindowTooSmall(DtfError):
    """Confidence interval needs at least two samples."""


class WeightMismatch(DtfError):
    """Sensor weights do not satisfy the sum-to-one constraint."""


class SensorSetMismatch(DtfError):
    """Labels do not cover exactly the configured sensor set."""


# automl
class TooFewRows(DtfError):
    """Not enough rows for the requested fold count."""


class NonFiniteFeature(DtfError):
    """Training data contains NaN or infinite values."""


class FeatureMismatch(DtfError):
    """Prediction input columns differ from the training columns."""


# knowledge
class UnknownPredicate(DtfError):
    """Fact uses a predicate absent from the loaded schema."""


class NonTermination(DtfError):
    """Forward chaining exceeded the iteration cap."""


class UnknownQuery(DtfError):
    """No competency query registered under that id."""


# agent
class DeliveryFailure(DtfError):
    """An action could not be delivered to its target."""


# store
class DiskFull(DtfError):
    """Append failed because the device is out of space."""


class SchemaViolation(DtfError):
    """Event payload does not match its kind's schema."""


class VersionMismatch(DtfError):
    """Artifact format_version is not supported."""


class CorruptArtifact(DtfError):
    """Artifact fingerprint check failed."""


# config / cli
class ConfigError(DtfError):
    """Configuration file is missing, unreadable, or invalid."""
