"""One-process twin: broker, ingest, labeler, knowledge, agent, API.

Stages run as threads connected by bounded queues; a full queue blocks
the producer (backpressure) rather than dropping data. All durable state
flows through a single EventLog writer, so the HTTP layer can serve
everything from log projections.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import urllib.error
import urllib.request
from typing import Optional

from .agent import Agent, load_routes
from .config import PipelineConfig
from .errors import DeliveryFailure
from .eventlog import EventLog
from .ingest import SensorReading, TopicRoute, subscribe_bus
from .knowledge import FactStore, load_rules, run_inference, sensor_reading_facts
from .labeler import MachineLabeler, ManagementPolicy, load_sensor_specs
from .mqtt import MiniBroker

_SENTINEL = None


class Pipeline:
    """Wires the stages together around one embedded broker and one log."""

    def __init__(self, config: PipelineConfig):
        self.config = config.resolved()
        self.log = EventLog(self.config.log_root)
        self.broker = MiniBroker(self.config.broker_host, self.config.broker_port)
        self.route = TopicRoute()
        self.specs = load_sensor_specs(self.config.specs_path)
        self.rules = [r for path in self.config.rules_paths for r in load_rules(path)]
        self.agent = Agent(
            self.log,
            load_routes(self.config.routes_path),
            transports={"publish_mqtt": self._publish_mqtt, "notify": self._notify},
            debounce=self.config.debounce,
        )
        self._policy = ManagementPolicy.preset(self.config.policy_style, self.config.policy_threshold)
        self._machine_policies: dict[str, ManagementPolicy] = {}
        self._labelers: dict[str, MachineLabeler] = {}
        self._active_alerts: dict[str, set[tuple[int, str]]] = {}
        self._readings: queue.Queue = queue.Queue(self.config.queue_capacity)
        self._estimates: queue.Queue = queue.Queue(self.config.queue_capacity)
        self._threads: list[threading.Thread] = []
        self._lock = threading.Lock()
        self._closed = False

    # -- transports ---------------------------------------------------------

    def _publish_mqtt(self, target: str, payload: dict) -> None:
        body = payload.get("mqtt", payload)
        try:
            self.broker.bus.publish(target, json.dumps(body, ensure_ascii=False))
        except Exception as exc:
            raise DeliveryFailure(str(exc)) from exc

    def _notify(self, target: str, payload: dict) -> None:
        if not self.config.webhook_url:
            return  # log-only notification
        req = urllib.request.Request(
            self.config.webhook_url,
            data=json.dumps(payload, ensure_ascii=False).encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        try:
            urllib.request.urlopen(req, timeout=5.0).close()
        except (urllib.error.URLError, OSError) as exc:
            raise DeliveryFailure(str(exc)) from exc

    # -- stages --------------------------------------------------------------

    def _ingest_loop(self) -> None:
        try:
            for reading in subscribe_bus(self.broker.bus, self.config.topic_filter, self.route):
                self._readings.put(reading)
        finally:
            self._readings.put(_SENTINEL)

    def _labeler_for(self, machine_id: str) -> Optional[MachineLabeler]:
        labeler = self._labelers.get(machine_id)
        if labeler is None:
            specs = self.specs.get(machine_id, self.specs.get("*"))
            if not specs:
                return None
            policy = self._machine_policies.get(machine_id, self._policy)
            labeler = MachineLabeler(
                machine_id,
                specs,
                window_size=self.config.window_size,
                z=self.config.z,
                policy=policy,
            )
            self._labelers[machine_id] = labeler
        return labeler

    def _label_loop(self) -> None:
        try:
            while True:
                reading = self._readings.get()
                if reading is _SENTINEL:
                    return
                self.log.append(
                    "reading",
                    {
                        "machine_id": reading.machine_id,
                        "sensor_id": reading.sensor_id,
                        "timestamp": reading.timestamp,
                        "value": reading.value,
                    },
                )
                with self._lock:
                    labeler = self._labeler_for(reading.machine_id)
                    estimate = labeler.push(reading) if labeler else None
                if estimate is not None:
                    self.log.append("estimate", estimate.to_json())
                    self._estimates.put(estimate)
        finally:
            self._estimates.put(_SENTINEL)

    def _infer_alerts(self, estimate) -> None:
        """Run the rule set over this estimate's per-sensor labels.

        Facts are scoped to one estimate so rules that read several
        sensors see one synchronized snapshot. Alerts are edge
        triggered: a (code, subject) pair fires once and may fire again
        only after an estimate where it stopped holding.
        """
        store = FactStore()
        for label in estimate.labels:
            store.assert_all(
                sensor_reading_facts(
                    estimate.machine_id, label.sensor_id, label.label, estimate.timestamp
                )
            )
        result = run_inference(store, self.rules, timestamp=estimate.timestamp)
        active = self._active_alerts.setdefault(estimate.machine_id, set())
        fired = {(a.code, a.subject) for a in result.alerts}
        for alert in result.alerts:
            if (alert.code, alert.subject) in active:
                continue
            self.log.append("alert", alert.to_json())
            self.agent.handle_alert(alert)
        self._active_alerts[estimate.machine_id] = fired

    def _estimate_loop(self) -> None:
        while True:
            estimate = self._estimates.get()
            if estimate is _SENTINEL:
                return
            self._infer_alerts(estimate)
            self.agent.handle_estimate(estimate)

    # -- control -------------------------------------------------------------

    def start(self) -> "Pipeline":
        self.broker.start()
        for fn in (self._ingest_loop, self._label_loop, self._estimate_loop):
            t = threading.Thread(target=fn, daemon=True, name=fn.__name__)
            t.start()
            self._threads.append(t)
        return self

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self.broker.close()  # ends the ingest stream; sentinels cascade
        for t in self._threads:
            t.join(timeout=10.0)
        self.log.close()

    def __enter__(self) -> "Pipeline":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def drain(self, timeout: float = 10.0) -> bool:
        """Wait for queued work to be consumed (test hook)."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self._readings.empty() and self._estimates.empty():
                return True
            time.sleep(0.02)
        return False

    # -- command port (service writes) ----------------------------------------

    def apply_policy(self, style: str, threshold: float, machine_id: str | None) -> int:
        seq = self.log.append(
            "policy", {"style": style, "threshold": threshold, "machine_id": machine_id}
        )
        policy = ManagementPolicy(style, threshold)
        with self._lock:
            if machine_id:
                self._machine_policies[machine_id] = policy
                if machine_id in self._labelers:
                    self._labelers[machine_id].set_policy(policy)
            else:
                self._policy = policy
                for labeler in self._labelers.values():
                    labeler.set_policy(policy)
        return seq

    def request_stop(self, machine_id: str, reason_text: str, pending: bool) -> int | None:
        # the agent's own pending state is authoritative, ignore the hint
        del pending
        return self.agent.request_stop(
            machine_id, "rule_alert", {"source": "api", "text": reason_text}
        )

    def publish_reading(self, reading: SensorReading) -> None:
        """Inject a reading without a network client (tests, demos)."""
        topic = self.route.topic_for(reading.machine_id, reading.sensor_id)
        self.broker.bus.publish(
            topic, json.dumps({"ts": reading.timestamp, "value": reading.value})
        )
