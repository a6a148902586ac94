"""Fact encoders: domain records to triples.

The encodings mirror the two ontology shapes the rule files expect. A
failure instance fans out into a failure entity plus linked environment
entities (Temperature, Humidity) and one placeholder Alert entity; the
alert placeholder exists because the temperature/humidity rule quantifies
over Alert instances in its antecedent, so a store without any Alert
entity could never fire it.
"""

from __future__ import annotations

from typing import Iterable

from .store import Fact


def failure_instance_facts(
    failure_id: str,
    type_of_failure: int,
    number_of_occurrences: int,
    temperature: float,
    humidity: float,
    criticality: float | None = None,
    timestamp: int | None = None,
    machine_id: str | None = None,
    time_repair: float | None = None,
    cost: float | None = None,
) -> list[Fact]:
    f = failure_id
    facts = [
        Fact(f, "a", "Failure"),
        Fact(f"{f}/alert", "a", "Alert"),
        Fact(f"{f}/temperature", "a", "Temperature"),
        Fact(f"{f}/temperature", "temperatureValue", temperature),
        Fact(f"{f}/humidity", "a", "Humidity"),
        Fact(f"{f}/humidity", "humidityValue", humidity),
        Fact(f, "typeOfFailure", type_of_failure),
        Fact(f, "numberOfOccurrences", number_of_occurrences),
    ]
    if criticality is not None:
        facts.append(Fact(f, "criticality", criticality))
    if timestamp is not None:
        facts.append(Fact(f, "failureTimestamp", timestamp))
    if machine_id is not None:
        facts.append(Fact(f, "machineId", machine_id))
    if time_repair is not None:
        facts.append(Fact(f, "timeRepair", time_repair))
    if cost is not None:
        facts.append(Fact(f, "cost", cost))
    return facts


def failure_record_facts(rec, failure_id: str | None = None) -> list[Fact]:
    """Encode an ingest FailureRecord (row of the failure-history CSV)."""
    fid = failure_id or f"failure_{rec.machine_id}_{rec.timestamp}"
    return failure_instance_facts(
        fid,
        type_of_failure=rec.type_of_failure,
        number_of_occurrences=rec.extras.get("number_of_occurrences", 1),
        temperature=rec.temp,
        humidity=rec.humid,
        criticality=rec.criticality,
        timestamp=rec.timestamp,
        machine_id=str(rec.machine_id),
        time_repair=rec.time_repair,
        cost=rec.cost,
    )


def sensor_reading_facts(
    machine_id: str,
    sensor_type: str,
    value: int,
    timestamp: int,
    reading_id: str | None = None,
) -> list[Fact]:
    """Encode one labeled sensor reading (0 normal / 1 error).

    Sensor entities are per (machine, sensor type); each reading gets its
    own SensorReading and SensorValue entities, per the ontology shape
    Machine -hasSensor-> Sensor -generatesReading-> SensorReading
    -hasValue-> SensorValue -sensorReadingValue-> {0,1}.
    """
    sensor = f"{machine_id}_{sensor_type}"
    rid = reading_id or f"{sensor}_r{timestamp}"
    vid = f"{rid}_v"
    return [
        Fact(machine_id, "a", "Machine"),
        Fact(sensor, "a", "Sensor"),
        Fact(sensor, "a", sensor_type),
        Fact(machine_id, "hasSensor", sensor),
        Fact(rid, "a", "SensorReading"),
        Fact(sensor, "generatesReading", rid),
        Fact(vid, "a", "SensorValue"),
        Fact(rid, "hasValue", vid),
        Fact(vid, "sensorReadingValue", int(value)),
        Fact(rid, "readingTimestamp", int(timestamp)),
    ]


def estimate_facts(estimate) -> list[Fact]:
    """Encode a labeler ConditionEstimate as per-sensor labeled readings."""
    facts: list[Fact] = []
    for label in estimate.labels:
        facts.extend(
            sensor_reading_facts(
                estimate.machine_id, label.sensor_id, label.label, estimate.timestamp
            )
        )
    return facts


def assert_many(store, fact_lists: Iterable[list[Fact]]) -> int:
    version = store.version
    for facts in fact_lists:
        version = store.assert_all(facts)
    return version
