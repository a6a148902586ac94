"""Predictive-maintenance digital-twin service suite.

Telemetry ingest (MQTT + CSV replay), statistical condition labeling,
classifier selection and tuning, rule-based inference with competency
queries, an autonomous actuation agent, a durable event log, and an HTTP
fleet API, composed behind the `dtf` command line.
"""

__version__ = "0.1.0"

from .labeler import (  # noqa: E402
    ConditionEstimate,
    MachineLabeler,
    ManagementPolicy,
    SensorSpec,
    compute_ci,
    expected_value,
    label_stream,
    load_sensor_specs,
)
from .ingest import ReplayStream, SensorReading, TopicRoute  # noqa: E402
from .eventlog import EventLog, EventRecord, load_model, save_model, scan  # noqa: E402

__all__ = [
    "__version__",
    "ConditionEstimate",
    "MachineLabeler",
    "ManagementPolicy",
    "SensorSpec",
    "compute_ci",
    "expected_value",
    "label_stream",
    "load_sensor_specs",
    "ReplayStream",
    "SensorReading",
    "TopicRoute",
    "EventLog",
    "EventRecord",
    "load_model",
    "save_model",
    "scan",
]
