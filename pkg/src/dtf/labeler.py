"""Statistical condition labeling.

Per sensor, a sliding window of recent values yields a confidence
interval x̄ ± z·s/√n; the sensor is labeled 1 (failure condition) when
the interval leaves its configured normal range. The per-sensor labels
combine into a weighted expected value E = Σ S_i·P_i, and a management
policy threshold on E decides whether intervention is signaled.
"""

from __future__ import annotations

import json
import math
import statistics
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    ConfigError,
    SensorSetMismatch,
    WeightMismatch,
    WindowTooSmall,
)
from .ingest import SensorReading

WEIGHT_TOLERANCE = 1e-9
DEFAULT_Z = 1.96  # 95% confidence
DEFAULT_WINDOW = 30

POLICY_PRESETS = {"conservative": 0.2, "moderate": 0.6, "aggressive": 0.8}


@dataclass(frozen=True)
class SensorSpec:
    sensor_id: str
    low: float
    high: float
    weight: float

    def __post_init__(self) -> None:
        if self.low > self.high:
            raise ConfigError(f"{self.sensor_id}: low {self.low} > high {self.high}")
        if self.weight < 0:
            raise WeightMismatch(f"{self.sensor_id}: negative weight {self.weight}")


@dataclass(frozen=True)
class WindowStats:
    n: int
    mean: float
    std: float
    z: float


@dataclass(frozen=True)
class SensorLabel:
    sensor_id: str
    label: int
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ManagementPolicy:
    style: str
    threshold: float

    def __post_init__(self) -> None:
        if self.style not in POLICY_PRESETS:
            raise ConfigError(f"unknown policy style {self.style!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold {self.threshold} outside [0,1]")

    @classmethod
    def preset(cls, style: str, threshold: float | None = None) -> "ManagementPolicy":
        if style not in POLICY_PRESETS:
            raise ConfigError(f"unknown policy style {style!r}")
        return cls(style, POLICY_PRESETS[style] if threshold is None else threshold)


@dataclass(frozen=True)
class ConditionEstimate:
    machine_id: str
    timestamp: int
    labels: tuple[SensorLabel, ...]
    expected_value: float
    intervene: int

    def to_json(self) -> dict:
        return {
            "machine_id": self.machine_id,
            "timestamp": self.timestamp,
            "labels": [
                {"sensor_id": l.sensor_id, "label": l.label, "ci_low": l.ci_low, "ci_high": l.ci_high}
                for l in self.labels
            ],
            "expected_value": self.expected_value,
            "intervene": self.intervene,
        }


def validate_weights(specs: Iterable[SensorSpec]) -> None:
    """Enforce Σ weight = 1 ± 1e−9 with all weights nonnegative.

    Violations are load errors; weights are never silently renormalized.
    """
    specs = list(specs)
    total = math.fsum(s.weight for s in specs)
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise WeightMismatch(f"weights sum to {total!r}, expected 1")


def load_sensor_specs(path: str | Path) -> dict[str, list[SensorSpec]]:
    """Load per-machine spec sets from JSON; "*" keys a default set.

    Accepts either {"machine_id": [spec, ...], ...} or a bare list, which
    becomes the default set for every machine.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, list):
        doc = {"*": doc}
    out: dict[str, list[SensorSpec]] = {}
    for machine, entries in doc.items():
        specs = [
            SensorSpec(e["sensor_id"], float(e["low"]), float(e["high"]), float(e["weight"]))
            for e in entries
        ]
        validate_weights(specs)
        out[machine] = specs
    return out


def window_stats(window: Iterable[float], z: float) -> WindowStats:
    values = list(window)
    if len(values) < 2:
        raise WindowTooSmall(f"need at least 2 values, got {len(values)}")
    if z <= 0:
        raise ValueError(f"z must be positive, got {z}")
    return WindowStats(len(values), statistics.fmean(values), statistics.stdev(values), z)


def compute_ci(window: Iterable[float], z: float = DEFAULT_Z) -> tuple[float, float]:
    """Confidence interval x̄ ± z·s/√n with s the sample (n−1) std."""
    stats = window_stats(window, z)
    half = stats.z * stats.std / math.sqrt(stats.n)
    return stats.mean - half, stats.mean + half


def label_sensor(ci: tuple[float, float], spec: SensorSpec) -> int:
    """0 while the interval stays inside the normal range, else 1."""
    ci_low, ci_high = ci
    return 0 if spec.low <= ci_low and ci_high <= spec.high else 1


def expected_value(labels: Iterable[SensorLabel], specs: Iterable[SensorSpec]) -> float:
    """E = Σ S_i·P_i over the machine's sensors."""
    specs = list(specs)
    validate_weights(specs)
    by_sensor = {}
    for label in labels:
        if label.sensor_id in by_sensor:
            raise SensorSetMismatch(f"duplicate label for {label.sensor_id}")
        by_sensor[label.sensor_id] = label
    spec_ids = {s.sensor_id for s in specs}
    if set(by_sensor) != spec_ids:
        raise SensorSetMismatch(
            f"labels cover {sorted(by_sensor)} but specs define {sorted(spec_ids)}"
        )
    return math.fsum(by_sensor[s.sensor_id].label * s.weight for s in specs)


def classify_condition(e: float, policy: ManagementPolicy) -> int:
    """1 signals intervention: E at or above the policy threshold."""
    if not -WEIGHT_TOLERANCE <= e <= 1.0 + WEIGHT_TOLERANCE:
        raise ValueError(f"expected value {e} outside [0,1]")
    return 1 if e >= policy.threshold else 0


class MachineLabeler:
    """Sliding-window labeling state for one machine.

    An estimate is emitted once every configured sensor has a fresh
    reading since the last estimate and every window holds at least two
    values (warm-up). Sensors that lag between estimates contribute their
    existing window content. Readings for unconfigured sensors are
    ignored; the configured set defines the machine tuple.
    """

    def __init__(
        self,
        machine_id: str,
        specs: list[SensorSpec],
        window_size: int = DEFAULT_WINDOW,
        z: float = DEFAULT_Z,
        policy: ManagementPolicy | None = None,
    ):
        if window_size < 2:
            raise WindowTooSmall(f"window_size must be ≥ 2, got {window_size}")
        validate_weights(specs)
        self.machine_id = machine_id
        self.specs = list(specs)
        self.z = z
        self.policy = policy or ManagementPolicy.preset("moderate")
        self._windows: dict[str, deque] = {
            s.sensor_id: deque(maxlen=window_size) for s in specs
        }
        self._fresh: set[str] = set()
        self._latest_ts = 0

    def push(self, reading: SensorReading) -> ConditionEstimate | None:
        if reading.sensor_id not in self._windows:
            return None
        self._windows[reading.sensor_id].append(reading.value)
        self._fresh.add(reading.sensor_id)
        self._latest_ts = max(self._latest_ts, reading.timestamp)
        if len(self._fresh) < len(self._windows):
            return None
        if any(len(w) < 2 for w in self._windows.values()):
            return None  # warm-up: no estimate until every window has n ≥ 2
        self._fresh.clear()
        labels = []
        for spec in self.specs:
            ci = compute_ci(self._windows[spec.sensor_id], self.z)
            labels.append(SensorLabel(spec.sensor_id, label_sensor(ci, spec), ci[0], ci[1]))
        e = expected_value(labels, self.specs)
        return ConditionEstimate(
            machine_id=self.machine_id,
            timestamp=self._latest_ts,
            labels=tuple(labels),
            expected_value=e,
            intervene=classify_condition(e, self.policy),
        )

    def set_policy(self, policy: ManagementPolicy) -> None:
        self.policy = policy


def label_stream(
    readings: Iterable[SensorReading],
    specs: dict[str, list[SensorSpec]] | list[SensorSpec],
    window_size: int = DEFAULT_WINDOW,
    z: float = DEFAULT_Z,
    policy: ManagementPolicy | None = None,
) -> Iterator[ConditionEstimate]:
    """Label a reading stream, one independent state machine per machine.

    ``specs`` may be a per-machine dict (key "*" is the fallback set) or a
    bare list applied to every machine. Machines with no spec set are
    skipped.
    """
    if isinstance(specs, list):
        specs = {"*": specs}
    labelers: dict[str, MachineLabeler] = {}
    for reading in readings:
        labeler = labelers.get(reading.machine_id)
        if labeler is None:
            spec_set = specs.get(reading.machine_id, specs.get("*"))
            if spec_set is None:
                continue
            labeler = MachineLabeler(reading.machine_id, spec_set, window_size, z, policy)
            labelers[reading.machine_id] = labeler
        estimate = labeler.push(reading)
        if estimate is not None:
            yield estimate


def label_rows(
    row_batches: Iterable[list[SensorReading]],
    specs: dict[str, list[SensorSpec]] | list[SensorSpec],
    window_size: int = DEFAULT_WINDOW,
    z: float = DEFAULT_Z,
    policy: ManagementPolicy | None = None,
) -> list[list[ConditionEstimate]]:
    """Row-aligned labeling: estimates triggered by each batch of readings.

    Used by the CSV labeling command, where one input row carries one
    reading per sensor and should line up with one output row.
    """
    if isinstance(specs, list):
        specs = {"*": specs}
    labelers: dict[str, MachineLabeler] = {}
    out: list[list[ConditionEstimate]] = []
    for batch in row_batches:
        emitted: list[ConditionEstimate] = []
        for reading in batch:
            labeler = labelers.get(reading.machine_id)
            if labeler is None:
                spec_set = specs.get(reading.machine_id, specs.get("*"))
                if spec_set is None:
                    continue
                labeler = MachineLabeler(reading.machine_id, spec_set, window_size, z, policy)
                labelers[reading.machine_id] = labeler
            estimate = labeler.push(reading)
            if estimate is not None:
                emitted.append(estimate)
        out.append(emitted)
    return out
