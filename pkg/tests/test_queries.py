"""Competency queries: aggregations over failure history and sensor readings."""

import random

import pytest

from dtf.errors import UnknownQuery
from dtf.knowledge.instances import failure_instance_facts, sensor_reading_facts
from dtf.knowledge.queries import (
    COMPETENCY_QUERIES,
    answer_competency_query,
    avg_criticality_by_temperature,
    avg_error_frequency_by_sensor,
    avg_temperature_at_failure,
    common_failure_type,
    cooccurring_error_patterns,
    count_failures_by_sensor,
    error_sensors_for_machine,
    failures_by_humidity,
    failures_by_shift,
    last_readings_before_maintenance,
    machines_in_error,
    machines_without_error,
    maintenance_events_in_window,
)
from dtf.knowledge.store import Fact, FactStore


def _store_with_failures(rows):
    """rows: (fid, type, occurrences, temp, humid, criticality, ts)."""
    store = FactStore()
    for fid, ftype, occ, temp, humid, crit, ts in rows:
        store.assert_all(
            failure_instance_facts(
                fid,
                type_of_failure=ftype,
                number_of_occurrences=occ,
                temperature=temp,
                humidity=humid,
                criticality=crit,
                timestamp=ts,
            )
        )
    return store


def _store_with_readings(rows):
    """rows: (machine, sensor_type, value, timestamp)."""
    store = FactStore()
    for machine, stype, value, ts in rows:
        store.assert_all(sensor_reading_facts(machine, stype, value, ts))
    return store


# -- failure history ------------------------------------------------------------

def test_avg_temperature_simple_mean():
    store = _store_with_failures(
        [("f1", 1, 1, 30.0, 50.0, 0.5, 0), ("f2", 1, 1, 40.0, 50.0, 0.5, 0)]
    )
    assert avg_temperature_at_failure(store) == 35.0


def test_avg_temperature_empty_store():
    assert avg_temperature_at_failure(FactStore()) is None


def test_humidity_partition_matches_brute_force():
    rng = random.Random(5)
    rows = [
        (f"f{i}", 1, 1, 25.0, rng.uniform(0, 100), 0.1, 0)
        for i in range(50)
    ]
    store = _store_with_failures(rows)
    split = 50.0
    want_high = sum(1 for r in rows if r[4] >= split)
    got = failures_by_humidity(store, split=split)
    assert got == {"high": want_high, "low": 50 - want_high}


def test_common_failure_type_with_bounds():
    store = _store_with_failures(
        [
            ("f1", 4, 1, 45.0, 10.0, 0.9, 0),
            ("f2", 4, 1, 50.0, 12.0, 0.9, 0),
            ("f3", 2, 1, 48.0, 11.0, 0.9, 0),
            ("f4", 2, 1, 15.0, 90.0, 0.1, 0),  # excluded by min_temp
        ]
    )
    assert common_failure_type(store, min_temp=30.0) == (4, 2)
    assert common_failure_type(FactStore()) is None


def test_common_failure_type_tie_prefers_smaller_code():
    store = _store_with_failures(
        [("f1", 3, 1, 40.0, 10.0, 0.5, 0), ("f2", 1, 1, 40.0, 10.0, 0.5, 0)]
    )
    assert common_failure_type(store) == (1, 1)


def test_failures_by_shift_buckets_and_wraparound():
    # boundaries 06:00 / 14:00 / 22:00; 02:00 wraps into the night shift
    times = [7 * 3600, 13 * 3600, 15 * 3600, 23 * 3600, 2 * 3600]
    rows = [(f"f{i}", 1, 1, 30.0, 50.0, 0.5, ts) for i, ts in enumerate(times)]
    out = failures_by_shift(_store_with_failures(rows))
    assert out == {0: 2, 1: 1, 2: 2}


def test_avg_criticality_split_by_temperature():
    store = _store_with_failures(
        [
            ("f1", 1, 1, 40.0, 50.0, 0.8, 0),
            ("f2", 1, 1, 35.0, 50.0, 0.6, 0),
            ("f3", 1, 1, 10.0, 50.0, 0.2, 0),
        ]
    )
    out = avg_criticality_by_temperature(store, split=30.0)
    assert out["high"] == pytest.approx(0.7)
    assert out["low"] == pytest.approx(0.2)


# -- sensor equipment -----------------------------------------------------------

def test_machines_in_error_reads_maintenance_flags():
    store = FactStore()
    store.assert_all(
        [
            Fact("m1", "indicatesMaintenance", 1),
            Fact("m2", "indicatesMaintenance", 0),
        ]
    )
    assert machines_in_error(store) == ["m1"]


def test_error_sensors_for_single_machine():
    store = _store_with_readings(
        [
            ("m1", "S5", 1, 10),
            ("m1", "S6", 0, 10),
            ("m1", "S7", 1, 11),
            ("m2", "S6", 1, 10),
        ]
    )
    assert error_sensors_for_machine(store, "m1") == ["S5", "S7"]


def test_cooccurring_patterns_count_machines():
    store = _store_with_readings(
        [
            ("m1", "S5", 1, 1),
            ("m1", "S6", 1, 1),
            ("m2", "S5", 1, 1),
            ("m2", "S6", 1, 1),
            ("m3", "S1", 1, 1),
        ]
    )
    assert cooccurring_error_patterns(store, min_machines=2) == [(("S5", "S6"), 2)]


def test_last_readings_strictly_before_event():
    store = _store_with_readings(
        [
            ("m1", "S5", 0, 10),
            ("m1", "S5", 0, 20),
            ("m1", "S6", 0, 15),
            ("m1", "S5", 1, 30),  # the triggering error
            ("m1", "S6", 1, 30),
        ]
    )
    out = last_readings_before_maintenance(store, "m1")
    assert out == {"S5": (20, 0), "S6": (15, 0)}
    assert last_readings_before_maintenance(store, "m9") == {}


def test_maintenance_events_counted_distinct():
    store = _store_with_readings(
        [
            ("m1", "S5", 1, 100),
            ("m1", "S6", 1, 100),  # same machine+time: one event
            ("m2", "S5", 1, 150),
            ("m1", "S5", 1, 900),  # outside window
        ]
    )
    assert maintenance_events_in_window(store, 0, 200) == 2


def test_machines_without_error_in_window():
    store = _store_with_readings(
        [
            ("m1", "S5", 0, 10),
            ("m2", "S5", 1, 10),
            ("m3", "S5", 0, 999),  # no readings inside the window
        ]
    )
    assert machines_without_error(store, 0, 100) == ["m1"]


def test_avg_error_frequency_averages_over_machines():
    store = _store_with_readings(
        [
            ("m1", "S5", 1, 1),
            ("m1", "S5", 0, 2),  # m1 rate 0.5
            ("m2", "S5", 0, 1),
            ("m2", "S5", 0, 2),  # m2 rate 0.0
        ]
    )
    assert avg_error_frequency_by_sensor(store) == {"S5": pytest.approx(0.25)}


# -- count_failures_by_sensor -----------------------------------------------------

def test_counts_match_fixture():
    store = _store_with_readings(
        [
            ("m1", "S5", 1, 1),
            ("m1", "S5", 1, 2),
            ("m1", "S6", 1, 3),
            ("m1", "S7", 0, 4),
        ]
    )
    assert count_failures_by_sensor(store, ["S5", "S6", "S7"]) == {"S5": 2, "S6": 1, "S7": 0}


def test_counts_ignore_unrequested_sensors():
    store = _store_with_readings([("m1", "S1", 1, 1), ("m1", "S5", 1, 2)])
    assert count_failures_by_sensor(store, ["S5", "S6", "S7"]) == {"S5": 1, "S6": 0, "S7": 0}


def test_counts_no_errors_all_zero():
    store = _store_with_readings([("m1", "S5", 0, 1)])
    assert count_failures_by_sensor(store, ["S5", "S6"]) == {"S5": 0, "S6": 0}


def test_counts_respect_window():
    store = _store_with_readings([("m1", "S5", 1, 10), ("m1", "S5", 1, 500)])
    assert count_failures_by_sensor(store, ["S5"], window=(0, 100)) == {"S5": 1}


def test_counts_reject_empty_sensor_list():
    with pytest.raises(ValueError):
        count_failures_by_sensor(FactStore(), [])


def test_counts_match_linear_scan_oracle():
    rng = random.Random(23)
    rows = [
        (f"m{rng.randrange(3)}", rng.choice(["S1", "S5", "S6", "S7"]), rng.randrange(2), i)
        for i in range(120)
    ]
    store = _store_with_readings(rows)
    want = {s: 0 for s in ("S5", "S6", "S7")}
    for _, stype, value, _ in rows:
        if value == 1 and stype in want:
            want[stype] += 1
    assert count_failures_by_sensor(store, ["S5", "S6", "S7"]) == want


# -- dispatch ---------------------------------------------------------------------

def test_twelve_queries_registered():
    assert len(COMPETENCY_QUERIES) == 12


def test_dispatch_by_name_with_params():
    store = _store_with_failures([("f1", 1, 1, 30.0, 80.0, 0.5, 0)])
    assert answer_competency_query(store, "failures_by_humidity", split=70.0) == {
        "high": 1,
        "low": 0,
    }


def test_unknown_query_rejected():
    with pytest.raises(UnknownQuery):
        answer_competency_query(FactStore(), "meaning_of_life")
