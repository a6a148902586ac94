"""Named competency queries over the fact store.

Twelve questions the knowledge base must answer, five for the
failure-history domain and seven for the sensor-equipment domain. Each is
a deterministic aggregation; parameters (humidity split, shift
boundaries, time windows) are explicit with stated defaults.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Any, Callable

from ..errors import UnknownQuery
from .store import FactStore

DEFAULT_HUMIDITY_SPLIT = 50.0
DEFAULT_TEMPERATURE_SPLIT = 30.0
# shift starts in seconds since midnight UTC: morning/afternoon/night
DEFAULT_SHIFT_BOUNDARIES = (6 * 3600, 14 * 3600, 22 * 3600)


def _failures(store: FactStore) -> list[str]:
    return store.entities_of("Failure")


def _failure_env(store: FactStore, fid: str, predicate: str) -> float | None:
    value = store.value_of(f"{fid}/{'temperature' if predicate == 'temperatureValue' else 'humidity'}", predicate)
    if value is None:
        # tolerate flat encodings where the value sits on the failure itself
        value = store.value_of(fid, predicate)
    return None if value is None else float(value)


def avg_temperature_at_failure(store: FactStore) -> float | None:
    """Mean temperature across failure occurrences."""
    temps = [t for f in _failures(store) if (t := _failure_env(store, f, "temperatureValue")) is not None]
    return sum(temps) / len(temps) if temps else None


def failures_by_humidity(store: FactStore, split: float = DEFAULT_HUMIDITY_SPLIT) -> dict[str, int]:
    """Failure counts in high (≥ split) vs low humidity conditions."""
    out = {"high": 0, "low": 0}
    for f in _failures(store):
        humid = _failure_env(store, f, "humidityValue")
        if humid is None:
            continue
        out["high" if humid >= split else "low"] += 1
    return out


def common_failure_type(
    store: FactStore,
    min_temp: float | None = None,
    max_temp: float | None = None,
    min_humid: float | None = None,
    max_humid: float | None = None,
) -> tuple[int, int] | None:
    """Most frequent failure type under the given environmental bounds.

    Returns (type, count); ties prefer the smaller type code.
    """
    counts: Counter[int] = Counter()
    for f in _failures(store):
        temp = _failure_env(store, f, "temperatureValue")
        humid = _failure_env(store, f, "humidityValue")
        if min_temp is not None and (temp is None or temp < min_temp):
            continue
        if max_temp is not None and (temp is None or temp > max_temp):
            continue
        if min_humid is not None and (humid is None or humid < min_humid):
            continue
        if max_humid is not None and (humid is None or humid > max_humid):
            continue
        type_code = store.value_of(f, "typeOfFailure")
        if type_code is not None:
            counts[int(type_code)] += 1
    if not counts:
        return None
    best = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    return best


def failures_by_shift(
    store: FactStore, boundaries: tuple[int, ...] = DEFAULT_SHIFT_BOUNDARIES
) -> dict[int, int]:
    """Failure counts per work shift.

    ``boundaries`` are shift start times as seconds since midnight UTC,
    ascending; shift i runs from boundaries[i] up to the next boundary
    (wrapping past midnight for the last shift).
    """
    out = {i: 0 for i in range(len(boundaries))}
    for f in _failures(store):
        ts = store.value_of(f, "failureTimestamp")
        if ts is None:
            continue
        second_of_day = int(ts) % 86_400
        shift = len(boundaries) - 1  # before the first boundary = last shift
        for i in range(len(boundaries) - 1):
            if boundaries[i] <= second_of_day < boundaries[i + 1]:
                shift = i
                break
        out[shift] += 1
    return out


def avg_criticality_by_temperature(
    store: FactStore, split: float = DEFAULT_TEMPERATURE_SPLIT
) -> dict[str, float | None]:
    """Mean failure criticality in high (≥ split) vs low temperature."""
    bands: dict[str, list[float]] = {"high": [], "low": []}
    for f in _failures(store):
        temp = _failure_env(store, f, "temperatureValue")
        crit = store.value_of(f, "criticality")
        if temp is None or crit is None:
            continue
        bands["high" if temp >= split else "low"].append(float(crit))
    return {k: (sum(v) / len(v) if v else None) for k, v in bands.items()}


# -- sensor equipment domain -------------------------------------------------

def _error_readings(store: FactStore) -> list[tuple[str, str, str, int]]:
    """(machine, sensor_type, reading, timestamp) for every value-1 reading."""
    sensor_machine = {f.object: f.subject for f in store.facts("hasSensor")}
    sensor_type: dict[str, str] = {}
    for sensor in {f.object for f in store.facts("hasSensor")}:
        for fact in store.facts("a", subject=str(sensor)):
            if fact.object not in ("Sensor",):
                sensor_type[str(sensor)] = str(fact.object)
    out = []
    for gen in store.facts("generatesReading"):
        sensor, reading = gen.subject, str(gen.object)
        value_entity = store.value_of(reading, "hasValue")
        if value_entity is None:
            continue
        value = store.value_of(str(value_entity), "sensorReadingValue")
        if value != 1:
            continue
        ts = store.value_of(reading, "readingTimestamp")
        out.append(
            (
                str(sensor_machine.get(sensor, "")),
                sensor_type.get(sensor, ""),
                reading,
                int(ts) if ts is not None else 0,
            )
        )
    return out


def _all_readings(store: FactStore) -> list[tuple[str, str, int, int]]:
    """(machine, sensor_type, value, timestamp) for every reading."""
    sensor_machine = {f.object: f.subject for f in store.facts("hasSensor")}
    sensor_type: dict[str, str] = {}
    for sensor in sensor_machine:
        for fact in store.facts("a", subject=str(sensor)):
            if fact.object != "Sensor":
                sensor_type[str(sensor)] = str(fact.object)
    out = []
    for gen in store.facts("generatesReading"):
        sensor, reading = gen.subject, str(gen.object)
        value_entity = store.value_of(reading, "hasValue")
        if value_entity is None:
            continue
        value = store.value_of(str(value_entity), "sensorReadingValue")
        if value is None:
            continue
        ts = store.value_of(reading, "readingTimestamp")
        out.append(
            (
                str(sensor_machine.get(sensor, "")),
                sensor_type.get(sensor, ""),
                int(value),
                int(ts) if ts is not None else 0,
            )
        )
    return out


def machines_in_error(store: FactStore) -> list[str]:
    """Machines currently flagged by indicatesMaintenance(m, 1)."""
    return sorted({f.subject for f in store.facts("indicatesMaintenance", object=1)})


def error_sensors_for_machine(store: FactStore, machine_id: str) -> list[str]:
    """Sensor types that produced an error reading on one machine."""
    return sorted({stype for m, stype, _, _ in _error_readings(store) if m == machine_id and stype})


def cooccurring_error_patterns(store: FactStore, min_machines: int = 2) -> list[tuple[tuple[str, ...], int]]:
    """Error sensor-type sets appearing on at least min_machines machines.

    Returns (sorted sensor tuple, machine count), most common first.
    """
    per_machine: dict[str, set[str]] = defaultdict(set)
    for machine, stype, _, _ in _error_readings(store):
        if machine and stype:
            per_machine[machine].add(stype)
    counts: Counter[tuple[str, ...]] = Counter(
        tuple(sorted(types)) for types in per_machine.values() if types
    )
    out = [(pattern, n) for pattern, n in counts.items() if n >= min_machines]
    return sorted(out, key=lambda kv: (-kv[1], kv[0]))


def last_readings_before_maintenance(
    store: FactStore, machine_id: str, before: int | None = None
) -> dict[str, tuple[int, int]]:
    """Latest (timestamp, value) per sensor type strictly before an event.

    ``before`` defaults to the machine's newest error-reading timestamp,
    the event that would have triggered maintenance.
    """
    if before is None:
        own_errors = [ts for m, _, _, ts in _error_readings(store) if m == machine_id]
        if not own_errors:
            return {}
        before = max(own_errors)
    latest: dict[str, tuple[int, int]] = {}
    for machine, stype, value, ts in _all_readings(store):
        if machine != machine_id or not stype or ts >= before:
            continue
        if stype not in latest or ts > latest[stype][0]:
            latest[stype] = (ts, value)
    return latest


def maintenance_events_in_window(store: FactStore, start: int, end: int) -> int:
    """Distinct (machine, timestamp) error events inside [start, end]."""
    events = {
        (machine, ts)
        for machine, _, _, ts in _error_readings(store)
        if machine and start <= ts <= end
    }
    return len(events)


def machines_without_error(store: FactStore, start: int, end: int) -> list[str]:
    """Machines with readings in [start, end] and none of them errors."""
    in_window: dict[str, bool] = {}
    for machine, _, value, ts in _all_readings(store):
        if not machine or not start <= ts <= end:
            continue
        in_window[machine] = in_window.get(machine, True) and value != 1
    return sorted(m for m, clean in in_window.items() if clean)


def avg_error_frequency_by_sensor(store: FactStore) -> dict[str, float]:
    """Per sensor type, the mean over machines of its error-reading rate."""
    totals: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0])
    for machine, stype, value, _ in _all_readings(store):
        if not machine or not stype:
            continue
        counts = totals[(machine, stype)]
        counts[0] += 1
        counts[1] += int(value == 1)
    by_type: dict[str, list[float]] = defaultdict(list)
    for (_, stype), (n, errors) in totals.items():
        by_type[stype].append(errors / n)
    return {stype: sum(rates) / len(rates) for stype, rates in sorted(by_type.items())}


def count_failures_by_sensor(
    store: FactStore, sensors: list[str], window: tuple[int, int] | None = None
) -> dict[str, int]:
    """Value-1 reading counts per listed sensor type, zero when absent."""
    if not sensors:
        raise ValueError("sensors list must be non-empty")
    out = {s: 0 for s in sensors}
    for _, stype, _, ts in _error_readings(store):
        if stype not in out:
            continue
        if window is not None and not window[0] <= ts <= window[1]:
            continue
        out[stype] += 1
    return out


COMPETENCY_QUERIES: dict[str, Callable] = {
    # failure-history domain
    "avg_temperature_at_failure": avg_temperature_at_failure,
    "failures_by_humidity": failures_by_humidity,
    "common_failure_type": common_failure_type,
    "failures_by_shift": failures_by_shift,
    "avg_criticality_by_temperature": avg_criticality_by_temperature,
    # sensor-equipment domain
    "machines_in_error": machines_in_error,
    "error_sensors_for_machine": error_sensors_for_machine,
    "cooccurring_error_patterns": cooccurring_error_patterns,
    "last_readings_before_maintenance": last_readings_before_maintenance,
    "maintenance_events_in_window": maintenance_events_in_window,
    "machines_without_error": machines_without_error,
    "avg_error_frequency_by_sensor": avg_error_frequency_by_sensor,
}


def answer_competency_query(store: FactStore, query: str, **params: Any):
    fn = COMPETENCY_QUERIES.get(query)
    if fn is None:
        raise UnknownQuery(f"no query {query!r}; known: {sorted(COMPETENCY_QUERIES)}")
    return fn(store, **params)
