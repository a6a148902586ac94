"""Typed fact store, forward-chaining rule engine, and named queries."""

from .instances import failure_instance_facts, sensor_reading_facts
from .queries import COMPETENCY_QUERIES, answer_competency_query, count_failures_by_sensor
from .rules import (
    Alert,
    InferenceResult,
    Rule,
    eval_maintenance_rules,
    load_rules,
    run_inference,
    satisfies,
)
from .store import Fact, FactStore

__all__ = [
    "Fact",
    "FactStore",
    "Rule",
    "Alert",
    "InferenceResult",
    "load_rules",
    "run_inference",
    "eval_maintenance_rules",
    "satisfies",
    "failure_instance_facts",
    "sensor_reading_facts",
    "answer_competency_query",
    "count_failures_by_sensor",
    "COMPETENCY_QUERIES",
]
