"""Telemetry acquisition: CSV parsing, file replay, and topic subscription.

Everything funnels into SensorReading records. Two CSV schemas are
understood: the failure-history table (one row per failure event, nine
typed columns) and the wide per-sensor table whose column names embed the
machine and sensor ids (e.g. ``2F03_COLISÃO_S3``).
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .bus import Message, MessageBus
from .errors import MalformedRow, PayloadDecode, UnknownSensor
from .mqtt import MqttClient

CS1_COLUMNS = (
    "machine_id",
    "type_of_failure",
    "timestamp",
    "time_repair",
    "cost",
    "criticality",
    "humid",
    "temp",
    "label",
)

_SENSOR_SUFFIX = re.compile(r"^S\d+$")


@dataclass(frozen=True)
class SensorReading:
    machine_id: str
    sensor_id: str
    timestamp: int
    value: float

    def __post_init__(self) -> None:
        if not self.sensor_id:
            raise ValueError("sensor_id must be non-empty")
        if self.timestamp < 0:
            raise ValueError(f"timestamp {self.timestamp} < 0")
        if not math.isfinite(self.value):
            raise ValueError(f"value {self.value!r} not finite")


@dataclass(frozen=True)
class FailureRecord:
    machine_id: int
    type_of_failure: int
    timestamp: int
    time_repair: float
    cost: float
    criticality: float
    humid: int
    temp: int
    label: int
    extras: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class TopicRoute:
    pattern: str = "plant/{machine}/{sensor}"
    payload_format: str = "json"

    def __post_init__(self) -> None:
        if "{machine}" not in self.pattern or "{sensor}" not in self.pattern:
            raise ValueError("pattern must contain {machine} and {sensor}")

    def parse_topic(self, topic: str) -> tuple[str, str]:
        plevels = self.pattern.split("/")
        tlevels = topic.split("/")
        if len(plevels) != len(tlevels):
            raise PayloadDecode(f"topic {topic!r} does not fit {self.pattern!r}")
        machine = sensor = ""
        for p, t in zip(plevels, tlevels):
            if p == "{machine}":
                machine = t
            elif p == "{sensor}":
                sensor = t
            elif p != t:
                raise PayloadDecode(f"topic {topic!r} does not fit {self.pattern!r}")
        return machine, sensor

    def topic_for(self, machine_id: str, sensor_id: str) -> str:
        return self.pattern.replace("{machine}", machine_id).replace("{sensor}", sensor_id)

    def decode(self, msg: Message) -> tuple[int, float]:
        """Extract (timestamp, value) from a payload."""
        try:
            if self.payload_format == "json":
                doc = json.loads(msg.payload.decode("utf-8"))
                return int(doc["ts"]), float(doc["value"])
            ts_text, value_text = msg.payload.decode("utf-8").strip().split(",")
            return int(ts_text), float(value_text)
        except (ValueError, KeyError, TypeError) as exc:
            raise PayloadDecode(f"bad payload on {msg.topic}: {msg.payload!r}") from exc


# -- CSV parsing -----------------------------------------------------------

def _split(line: str) -> list[str]:
    return next(csv.reader(io.StringIO(line)))


def parse_cs1_row(line: str, header: list[str]) -> FailureRecord:
    """Parse one failure-history row; unknown columns land in extras."""
    missing = [c for c in CS1_COLUMNS if c not in header]
    if missing:
        raise MalformedRow(f"header lacks columns {missing}")
    fields = _split(line)
    if len(fields) != len(header):
        raise MalformedRow(f"expected {len(header)} fields, got {len(fields)}")
    by_name = dict(zip(header, fields))
    label = int(by_name["label"])
    if label not in (0, 1):
        raise TypeError(f"label {label} outside {{0,1}}")
    humid = int(by_name["humid"])
    if not 0 <= humid <= 100:
        raise TypeError(f"humid {humid} outside [0,100]")
    return FailureRecord(
        machine_id=int(by_name["machine_id"]),
        type_of_failure=int(by_name["type_of_failure"]),
        timestamp=int(by_name["timestamp"]),
        time_repair=float(by_name["time_repair"]),
        cost=float(by_name["cost"]),
        criticality=float(by_name["criticality"]),
        humid=humid,
        temp=int(by_name["temp"]),
        label=label,
        extras={k: v for k, v in by_name.items() if k not in CS1_COLUMNS},
    )


def serialize_cs1_row(rec: FailureRecord, header: list[str] | None = None) -> str:
    """Inverse of parse_cs1_row for the canonical column order."""
    header = header or list(CS1_COLUMNS)
    parts = []
    for col in header:
        value = rec.extras[col] if col in rec.extras else getattr(rec, col)
        parts.append(repr(value) if isinstance(value, float) else str(value))
    return ",".join(parts)


def sensor_from_column(column: str, sensor_map: dict[str, tuple[str, str]] | None = None) -> tuple[str, str]:
    """Resolve a wide-table column name to (machine_id, sensor_id).

    Convention: machine id is the first underscore token; sensor id is the
    trailing token when it looks like S<number>, else the whole remainder.
    An explicit map overrides the convention per column.
    """
    if sensor_map and column in sensor_map:
        machine, sensor = sensor_map[column]
        return machine, sensor
    tokens = column.split("_")
    if len(tokens) < 2 or not tokens[0]:
        raise UnknownSensor(f"column {column!r} has no machine prefix")
    machine = tokens[0]
    if _SENSOR_SUFFIX.match(tokens[-1]):
        return machine, tokens[-1]
    return machine, "_".join(tokens[1:])


def parse_cs2_row(
    line: str,
    header: list[str],
    row_index: int = 0,
    sensor_map: dict[str, tuple[str, str]] | None = None,
    known_sensors: set[str] | None = None,
) -> tuple[list[SensorReading], int | None]:
    """Parse one wide-table row into per-sensor readings plus optional label.

    Timestamp comes from a "timestamp" column when present, else row_index.
    """
    fields = _split(line) if line.strip() else []
    if not fields:
        return [], None
    if len(fields) != len(header):
        raise MalformedRow(f"expected {len(header)} fields, got {len(fields)}")
    by_name = dict(zip(header, fields))
    ts = int(by_name["timestamp"]) if "timestamp" in by_name else row_index
    label = None
    if "label" in by_name and by_name["label"] != "":
        label = int(by_name["label"])
    readings = []
    for col in header:
        if col in ("label", "timestamp"):
            continue
        machine, sensor = sensor_from_column(col, sensor_map)
        if known_sensors is not None and sensor not in known_sensors:
            raise UnknownSensor(f"column {col!r} maps to unconfigured sensor {sensor!r}")
        try:
            value = float(by_name[col])
        except ValueError as exc:
            raise MalformedRow(f"non-numeric value {by_name[col]!r} in {col}") from exc
        readings.append(SensorReading(machine, sensor, ts, value))
    return readings, label


# -- file replay -----------------------------------------------------------

class ReplayStream:
    """Iterates SensorReadings from a CSV file, optionally paced.

    ``speed`` is a wall-clock multiplier over the timestamp deltas in the
    file ("max" disables pacing). Malformed rows are skipped and recorded
    in ``skipped`` (1-based data row numbers), never fatal.
    """

    def __init__(
        self,
        path: str | Path,
        speed: float | str = "max",
        sensor_map: dict[str, tuple[str, str]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.path = Path(path)
        if speed != "max" and (not isinstance(speed, (int, float)) or speed <= 0):
            raise ValueError(f"speed must be positive or 'max', got {speed!r}")
        self.speed = speed
        self.sensor_map = sensor_map
        self.skipped: list[int] = []
        self.count = 0
        self._sleep = sleep

    def __iter__(self) -> Iterator[SensorReading]:
        with open(self.path, newline="", encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                return
            header = _split(header_line.strip())
            cs1 = all(c in header for c in CS1_COLUMNS)
            start_wall: float | None = None
            first_ts: int | None = None
            for row_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    batch = self._parse_row(line.strip(), header, cs1, row_no)
                except (MalformedRow, TypeError, ValueError, UnknownSensor):
                    self.skipped.append(row_no)
                    continue
                if not batch:
                    continue
                if self.speed != "max":
                    # schedule against absolute targets so pacing never drifts
                    ts = batch[0].timestamp
                    now = time.monotonic()
                    if first_ts is None:
                        first_ts, start_wall = ts, now
                    target = start_wall + (ts - first_ts) / float(self.speed)
                    if target > now:
                        self._sleep(target - now)
                for reading in batch:
                    self.count += 1
                    yield reading

    def _parse_row(self, line: str, header: list[str], cs1: bool, row_no: int) -> list[SensorReading]:
        if cs1:
            rec = parse_cs1_row(line, header)
            machine = str(rec.machine_id)
            # failure-history rows carry two live signals worth streaming
            return [
                SensorReading(machine, "temp", rec.timestamp, float(rec.temp)),
                SensorReading(machine, "humid", rec.timestamp, float(rec.humid)),
            ]
        readings, _ = parse_cs2_row(line, header, row_index=row_no, sensor_map=self.sensor_map)
        return readings


def replay(path: str | Path, speed: float | str = "max", **kwargs) -> ReplayStream:
    return ReplayStream(path, speed, **kwargs)


# -- live subscription -----------------------------------------------------

class SubscriptionStream:
    """Ordered SensorReading stream off a bus or MQTT subscription.

    Undecodable payloads are dropped and counted in ``dropped``. If the
    transport dies the iterator raises ConnectionLost after draining, so
    consumers see an explicit end-of-stream error rather than silence.
    """

    def __init__(self, route: TopicRoute):
        self.route = route
        self.dropped = 0
        self._lost: Exception | None = None

    def _convert(self, messages: Iterable[Message | None]) -> Iterator[SensorReading]:
        for msg in messages:
            if msg is None:
                break
            try:
                machine, sensor = self.route.parse_topic(msg.topic)
                ts, value = self.route.decode(msg)
                yield SensorReading(machine, sensor, ts, value)
            except (PayloadDecode, ValueError):
                self.dropped += 1
        if self._lost is not None:
            raise self._lost


def subscribe_bus(bus: MessageBus, topic_filter: str, route: TopicRoute | None = None) -> Iterator[SensorReading]:
    """Subscribe on an in-process bus; ends cleanly when the bus closes."""
    route = route or TopicRoute()
    stream = SubscriptionStream(route)
    sub = bus.subscribe(topic_filter)
    return stream._convert(iter(sub))


def subscribe_mqtt(
    host: str, port: int, topic_filter: str, route: TopicRoute | None = None, client_id: str = "dtf-ingest"
) -> Iterator[SensorReading]:
    """Subscribe over TCP; raises ConnectionLost if the broker goes away."""
    import queue

    from .errors import ConnectionLost

    route = route or TopicRoute()
    stream = SubscriptionStream(route)
    inbox: "queue.Queue[Message | None]" = queue.Queue()
    client = MqttClient(host, port, client_id, on_message=inbox.put)
    client.subscribe(topic_filter)

    def drain() -> Iterator[Message | None]:
        while True:
            msg = inbox.get()
            if msg is None:
                stream._lost = ConnectionLost(f"broker {host}:{port} went away")
                return
            yield msg

    return stream._convert(drain())
