"""In-process pipeline: broker feed, labeling, alerts, stops, policy port."""

import json
import time

import pytest

from dtf.config import PipelineConfig
from dtf.eventlog import EventLog, scan
from dtf.ingest import SensorReading
from dtf.pipeline import Pipeline

from conftest import FAULTY, HEALTHY


def _config(tmp_path, **overrides):
    base = dict(
        log_root=str(tmp_path / "log"),
        window_size=3,
        debounce=2,
        queue_capacity=64,
    )
    base.update(overrides)
    return PipelineConfig(**base)


@pytest.fixture
def pipeline(tmp_path):
    p = Pipeline(_config(tmp_path)).start()
    try:
        yield p
    finally:
        p.close()


def _feed_round(p, ts, machine="M1", overrides=None):
    values = dict(HEALTHY, **(overrides or {}))
    for sensor, value in values.items():
        p.publish_reading(SensorReading(machine, sensor, ts, value))


def _wait_for(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.02)
    return False


def _records(p, kind=None):
    return scan(p.config.log_root, kind=kind)


def test_readings_become_estimates(pipeline):
    for ts in range(3):
        _feed_round(pipeline, ts)
    assert _wait_for(lambda: len(_records(pipeline, "estimate")) >= 2)
    assert len(_records(pipeline, "reading")) == 21
    estimates = _records(pipeline, "estimate")
    # warm-up consumes the first round; constant in-range values label clean
    for rec in estimates:
        assert rec.payload["machine_id"] == "M1"
        assert rec.payload["expected_value"] == 0.0
        assert rec.payload["intervene"] == 0
        assert {l["sensor_id"] for l in rec.payload["labels"]} == set(HEALTHY)


def test_fault_raises_alert_then_single_stop(pipeline):
    commands = pipeline.broker.bus.subscribe("plant/+/cmd")
    for ts in range(2):
        _feed_round(pipeline, ts)
    for ts in range(2, 5):
        _feed_round(pipeline, ts, overrides=FAULTY)
    assert _wait_for(lambda: len(_records(pipeline, "stop")) == 1)
    pipeline.drain()

    estimates = _records(pipeline, "estimate")
    flagged = [r for r in estimates if r.payload["intervene"] == 1]
    assert len(flagged) >= pipeline.config.debounce
    assert all(r.payload["expected_value"] == 0.75 for r in flagged)

    # the bearing-group rule fires once (edge triggered) despite three bad rounds
    alerts = _records(pipeline, "alert")
    assert [a.payload["code"] for a in alerts] == [302]
    assert alerts[0].payload["subject"] == "M1"

    stops = _records(pipeline, "stop")
    assert stops[0].payload["machine_id"] == "M1"
    assert stops[0].payload["reason"] == "policy_threshold"
    assert stops[0].payload["evidence"]["run_length"] == pipeline.config.debounce

    # stop goes out over MQTT and is recorded intent first, emitted after
    msg = commands.messages.get(timeout=5.0)
    assert msg.topic == "plant/M1/cmd"
    assert json.loads(msg.payload) == {"cmd": "stop", "reason": "policy_threshold"}
    actions = [r for r in _records(pipeline, "action")
               if r.payload["route"] == "stop_commands_to_devices"]
    assert [a.payload["phase"] for a in actions] == ["intent", "emitted"]
    assert actions[0].payload["target"] == "plant/M1/cmd"

    # ordering on the log: the stop follows at least `debounce` flagged estimates
    stop_seq = stops[0].seq
    assert sum(1 for r in flagged if r.seq < stop_seq) >= pipeline.config.debounce


def test_alert_records_precede_agent_actions(pipeline):
    for ts in range(2):
        _feed_round(pipeline, ts)
    _feed_round(pipeline, 2, overrides=FAULTY)
    assert _wait_for(lambda: len(_records(pipeline, "alert")) == 1)
    pipeline.drain()
    alert_seq = _records(pipeline, "alert")[0].seq
    notify = [r for r in _records(pipeline, "action")
              if r.payload["route"] == "failure_alerts_to_log"]
    # webhook is unset, so notify degrades to a logged emission
    assert [r.payload["phase"] for r in notify] == ["intent", "emitted"]
    assert all(r.seq > alert_seq for r in notify)


def test_global_policy_change_applies_to_later_estimates(pipeline):
    for ts in range(3):
        _feed_round(pipeline, ts)
    assert _wait_for(lambda: len(_records(pipeline, "estimate")) >= 2)
    seq = pipeline.apply_policy("aggressive", 0.8, None)
    assert isinstance(seq, int)
    for ts in range(3, 6):
        _feed_round(pipeline, ts, overrides=FAULTY)
    assert _wait_for(lambda: len(_records(pipeline, "estimate")) >= 5)
    pipeline.drain()

    policies = _records(pipeline, "policy")
    assert len(policies) == 1
    assert policies[0].payload["style"] == "aggressive"

    # 0.75 clears the moderate bar but not the aggressive one: no stop
    after = [r for r in _records(pipeline, "estimate") if r.seq > seq]
    assert any(r.payload["expected_value"] == 0.75 for r in after)
    assert all(r.payload["intervene"] == 0 for r in after)
    assert _records(pipeline, "stop") == []


def test_machine_policy_overrides_global(pipeline):
    pipeline.apply_policy("conservative", 0.2, "M2")
    for ts in range(2):
        _feed_round(pipeline, ts, machine="M1")
        _feed_round(pipeline, ts, machine="M2")
    # S5 alone out of range: E = 0.25, above conservative, below moderate
    for ts in range(2, 4):
        _feed_round(pipeline, ts, machine="M1", overrides={"S5": 90.0})
        _feed_round(pipeline, ts, machine="M2", overrides={"S5": 90.0})
    assert _wait_for(lambda: len(_records(pipeline, "estimate")) >= 6)
    pipeline.drain()

    by_machine = {"M1": [], "M2": []}
    for rec in _records(pipeline, "estimate"):
        by_machine[rec.payload["machine_id"]].append(rec.payload)
    hot_m1 = [e for e in by_machine["M1"] if e["expected_value"] == 0.25]
    hot_m2 = [e for e in by_machine["M2"] if e["expected_value"] == 0.25]
    assert hot_m1 and hot_m2
    assert all(e["intervene"] == 0 for e in hot_m1)
    assert all(e["intervene"] == 1 for e in hot_m2)


def test_topic_filter_excludes_foreign_topics(pipeline):
    pipeline.broker.bus.publish("other/M1/S1", json.dumps({"ts": 0, "value": 1.0}))
    pipeline.publish_reading(SensorReading("M1", "S1", 0, 1.2))
    assert _wait_for(lambda: len(_records(pipeline, "reading")) == 1)
    time.sleep(0.1)
    records = _records(pipeline, "reading")
    assert len(records) == 1
    assert records[0].payload["sensor_id"] == "S1"


def test_malformed_payload_is_dropped_not_fatal(pipeline):
    pipeline.broker.bus.publish("plant/M1/S1", b"not json")
    pipeline.publish_reading(SensorReading("M1", "S1", 0, 1.2))
    assert _wait_for(lambda: len(_records(pipeline, "reading")) == 1)
    assert _records(pipeline, "reading")[0].payload["value"] == 1.2


def test_unconfigured_sensor_logged_but_never_estimated(pipeline):
    for ts in range(3):
        pipeline.publish_reading(SensorReading("M1", "S9", ts, 1.0))
    assert _wait_for(lambda: len(_records(pipeline, "reading")) == 3)
    pipeline.drain()
    assert _records(pipeline, "estimate") == []


def test_request_stop_port_round_trip(pipeline):
    seq = pipeline.request_stop("M9", "operator says", False)
    assert isinstance(seq, int)
    # pending until an all-clear estimate re-arms the machine
    assert pipeline.request_stop("M9", "again", False) is None
    stops = _records(pipeline, "stop")
    assert len(stops) == 1
    assert stops[0].payload["reason"] == "rule_alert"
    assert stops[0].payload["evidence"] == {"source": "api", "text": "operator says"}


def test_queues_are_bounded(pipeline):
    assert pipeline._readings.maxsize == 64
    assert pipeline._estimates.maxsize == 64


def test_close_is_idempotent_and_releases_the_log(tmp_path):
    p = Pipeline(_config(tmp_path)).start()
    _feed_round(p, 0)
    p.close()
    p.close()
    # writer lock released: a fresh writer can open the same root
    log = EventLog(p.config.log_root)
    log.close()


def test_context_manager_closes(tmp_path):
    with Pipeline(_config(tmp_path)).start() as p:
        _feed_round(p, 0)
    assert all(not t.is_alive() for t in p._threads)
