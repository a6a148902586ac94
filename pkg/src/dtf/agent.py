"""Autonomous actuation: alert routing, notification, and machine stops.

The agent consumes condition estimates and inferred alerts, matches them
against a declarative route table, and performs actions (notify,
publish over MQTT, stop a machine). Every action is written to the event
log before its delivery is attempted (write-ahead), so the log is the
authority on what the agent decided even across a crash mid-delivery.
"""

from __future__ import annotations

import fnmatch
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import ConfigError, DeliveryFailure
from .eventlog import EventLog
from .knowledge.rules import Alert
from .labeler import ConditionEstimate

STOP_TOPIC_TEMPLATE = "plant/{machine}/cmd"

ACTIONS = ("notify", "publish_mqtt", "stop_machine")


EVENT_NAMES = {"Alert": "alert", "ConditionEstimate": "estimate", "StopCommand": "stop"}


@dataclass(frozen=True)
class ActionRoute:
    name: str
    action: str
    target: str
    codes: frozenset[int] = frozenset()
    machines: str = ""  # fnmatch pattern over machine ids
    events: frozenset[str] = frozenset()  # empty = any event kind

    def __post_init__(self) -> None:
        if self.action not in ACTIONS:
            raise ConfigError(f"route {self.name}: unknown action {self.action!r}")
        if not self.target:
            raise ConfigError(f"route {self.name}: empty target")
        if not self.codes and not self.machines:
            raise ConfigError(f"route {self.name}: match must name codes or machines")
        bad = self.events - set(EVENT_NAMES.values())
        if bad:
            raise ConfigError(f"route {self.name}: unknown event kinds {sorted(bad)}")


@dataclass(frozen=True)
class StopCommand:
    machine_id: str
    reason: str  # policy_threshold | rule_alert
    evidence: dict
    issued_at: float

    def to_json(self) -> dict:
        return {
            "machine_id": self.machine_id,
            "reason": self.reason,
            "evidence": self.evidence,
            "issued_at": self.issued_at,
        }


@dataclass
class Action:
    route: str
    action: str
    target: str
    payload: dict
    status: str = "pending"  # emitted | dead_letter
    attempts: int = 0
    intent_seq: int = 0


def load_routes(path: str | Path) -> list[ActionRoute]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != 1:
        raise ConfigError(f"unsupported route file version {doc.get('format_version')!r}")
    routes = []
    for entry in doc["routes"]:
        match = entry.get("match", {})
        routes.append(
            ActionRoute(
                name=entry["name"],
                action=entry["action"],
                target=entry["target"],
                codes=frozenset(match.get("codes", [])),
                machines=match.get("machines", ""),
                events=frozenset(match.get("events", [])),
            )
        )
    return routes


def _machine_of(event) -> str:
    if isinstance(event, ConditionEstimate):
        return event.machine_id
    if isinstance(event, StopCommand):
        return event.machine_id
    return event.subject  # Alert


def route_matches(route: ActionRoute, event) -> bool:
    """Alerts match code sets; estimates and stops match machine patterns.

    A machine pattern also matches alerts whose subject is a machine id,
    so rule alerts can drive per-machine actions. An ``events`` filter
    restricts a route to specific event kinds.
    """
    if route.events and EVENT_NAMES[type(event).__name__] not in route.events:
        return False
    if isinstance(event, Alert) and route.codes:
        return event.code in route.codes
    if route.machines:
        # stop_machine routes never match StopCommands: no self-triggering
        if route.action == "stop_machine" and isinstance(event, StopCommand):
            return False
        return fnmatch.fnmatch(_machine_of(event), route.machines)
    return False


def dispatch_plan(event, routes: Iterable[ActionRoute]) -> list[Action]:
    """Pure route matching: one Action per matching route, in route order."""
    plan = []
    for route in routes:
        if not route_matches(route, event):
            continue
        machine = _machine_of(event)
        payload = {"event": event.to_json(), "kind": type(event).__name__, "route": route.name}
        if isinstance(event, StopCommand):
            # wire body a device-side listener acts on
            payload["mqtt"] = {"cmd": "stop", "reason": event.reason}
        plan.append(
            Action(
                route=route.name,
                action=route.action,
                target=route.target.replace("{machine}", machine),
                payload=payload,
            )
        )
    return plan


class StopEvaluator:
    """Debounced stop decisions from a stream of condition estimates.

    A machine gets one StopCommand after `debounce` consecutive
    intervene=1 estimates, then stays armed-off until an intervene=0
    estimate re-arms it.
    """

    def __init__(self, debounce: int = 3, clock: Callable[[], float] = time.time):
        if debounce < 1:
            raise ValueError(f"debounce must be ≥ 1, got {debounce}")
        self.debounce = debounce
        self._clock = clock
        self._streak: dict[str, int] = {}
        self._pending: dict[str, bool] = {}

    def stop_pending(self, machine_id: str) -> bool:
        return self._pending.get(machine_id, False)

    def rearm(self, machine_id: str) -> None:
        self._pending[machine_id] = False
        self._streak[machine_id] = 0

    def force_pending(self, machine_id: str) -> None:
        """Mark a stop in flight without going through the debounce path."""
        self._pending[machine_id] = True

    def push(self, estimate: ConditionEstimate) -> StopCommand | None:
        m = estimate.machine_id
        if estimate.intervene != 1:
            self.rearm(m)
            return None
        if self._pending.get(m, False):
            return None
        self._streak[m] = self._streak.get(m, 0) + 1
        if self._streak[m] < self.debounce:
            return None
        self._pending[m] = True
        return StopCommand(
            machine_id=m,
            reason="policy_threshold",
            evidence={
                "estimate_timestamp": estimate.timestamp,
                "expected_value": estimate.expected_value,
                "run_length": self._streak[m],
            },
            issued_at=self._clock(),
        )


def evaluate_stop(
    estimates: Iterable[ConditionEstimate], debounce: int = 3, clock: Callable[[], float] = time.time
) -> Iterator[StopCommand]:
    evaluator = StopEvaluator(debounce, clock)
    for estimate in estimates:
        command = evaluator.push(estimate)
        if command is not None:
            yield command


class Agent:
    """Routes events to actions with write-ahead logging and retries.

    ``transports`` maps action names to callables(target, payload dict);
    a transport raises DeliveryFailure to trigger retry with exponential
    backoff; exhausted retries dead-letter the action in the log.
    """

    def __init__(
        self,
        log: EventLog,
        routes: Iterable[ActionRoute],
        transports: dict[str, Callable[[str, dict], None]] | None = None,
        debounce: int = 3,
        retries: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 60.0,
        retry_in_background: bool = True,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.time,
    ):
        self.log = log
        self.routes = list(routes)
        self.transports = transports or {}
        self.stops = StopEvaluator(debounce, clock)
        self.retries = retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.retry_in_background = retry_in_background
        self._sleep = sleep
        self._clock = clock

    # -- delivery ----------------------------------------------------------

    def _finish(self, action: Action) -> None:
        self.log.append(
            "action",
            {
                "phase": action.status,
                "route": action.route,
                "action": action.action,
                "target": action.target,
                "intent_seq": action.intent_seq,
                "attempts": action.attempts,
            },
        )

    def _retry(self, action: Action, transport: Callable[[str, dict], None]) -> None:
        delay = self.backoff_base
        while action.attempts <= self.retries:
            self._sleep(delay)
            delay = min(delay * 2.0, self.backoff_cap)
            action.attempts += 1
            try:
                transport(action.target, action.payload)
                action.status = "emitted"
                break
            except DeliveryFailure:
                continue
        else:
            action.status = "dead_letter"
        self._finish(action)

    def _deliver(self, action: Action) -> None:
        transport = self.transports.get(action.action)
        action.intent_seq = self.log.append(
            "action",
            {
                "phase": "intent",
                "route": action.route,
                "action": action.action,
                "target": action.target,
                "payload": action.payload,
            },
        )
        action.attempts = 1
        try:
            if transport is not None:
                transport(action.target, action.payload)
            action.status = "emitted"
        except DeliveryFailure:
            # retries must not stall the caller's event stream
            if self.retry_in_background:
                threading.Thread(target=self._retry, args=(action, transport), daemon=True).start()
            else:
                self._retry(action, transport)
            return
        self._finish(action)

    def dispatch(self, event) -> list[Action]:
        """Log and deliver one action per matching route."""
        actions = dispatch_plan(event, self.routes)
        for action in actions:
            if action.action == "stop_machine" and not isinstance(event, StopCommand):
                self._deliver(action)
                self.request_stop(
                    _machine_of(event),
                    reason="rule_alert",
                    evidence={"route": action.route, "event": action.payload["event"]},
                )
            else:
                self._deliver(action)
        return actions

    # -- stop path ---------------------------------------------------------

    def _issue(self, command: StopCommand) -> int:
        seq = self.log.append(
            "stop",
            {
                "machine_id": command.machine_id,
                "reason": command.reason,
                "evidence": command.evidence,
                "issued_at": command.issued_at,
            },
        )
        self.dispatch(command)
        return seq

    def request_stop(self, machine_id: str, reason: str, evidence: dict) -> int | None:
        """Stop outside the debounce path (rule alert or operator).

        Returns the stop record's sequence number, or None while a stop
        for the machine is already pending.
        """
        if self.stops.stop_pending(machine_id):
            return None
        self.stops.force_pending(machine_id)
        command = StopCommand(machine_id, reason, evidence, self._clock())
        return self._issue(command)

    def handle_estimate(self, estimate: ConditionEstimate) -> StopCommand | None:
        self.dispatch(estimate)
        command = self.stops.push(estimate)
        if command is not None:
            self._issue(command)
        return command

    def handle_alert(self, alert: Alert) -> list[Action]:
        return self.dispatch(alert)
