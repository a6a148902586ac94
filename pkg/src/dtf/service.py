"""HTTP surface over the event log: fleet state, policy, stops, stream.

The API holds no authoritative state. Every response is a projection of
the event log plus configuration, so any view can be rebuilt by
replaying the log from sequence 1. Writes are commands appended to the
log (directly, or through the live pipeline when one is attached).
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
import time
from pathlib import Path
from typing import Iterable, Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import eventlog
from .config import ENV_TOKEN, PipelineConfig
from .eventlog import EventLog, EventRecord
from .labeler import POLICY_PRESETS

CONDITION_POINT_LIMIT = 2000
STREAM_POLL_S = 0.1


class MachineState:
    def __init__(self, machine_id: str):
        self.machine_id = machine_id
        self.series: list[dict] = []  # one entry per estimate record
        self.last_reading_ts: Optional[int] = None
        self.stop_pending = False
        self.alert_count = 0

    def summary(self, policy: dict) -> dict:
        latest = self.series[-1] if self.series else None
        return {
            "machine_id": self.machine_id,
            "last_estimate": latest,
            "last_reading_timestamp": self.last_reading_ts,
            "stop_pending": self.stop_pending,
            "alert_count": self.alert_count,
            "policy": policy,
        }


class FleetProjection:
    """Fold of the event log into queryable fleet state.

    Deterministic: applying records 1..n yields the same state as any
    incremental application of the same prefix.
    """

    def __init__(self, default_policy: dict | None = None):
        self.machines: dict[str, MachineState] = {}
        self.alerts: list[dict] = []
        self.global_policy = dict(default_policy or {"style": "moderate", "threshold": 0.6})
        self.machine_policies: dict[str, dict] = {}
        self.last_seq = 0

    def _machine(self, machine_id: str) -> MachineState:
        if machine_id not in self.machines:
            self.machines[machine_id] = MachineState(machine_id)
        return self.machines[machine_id]

    def policy_for(self, machine_id: str) -> dict:
        return self.machine_policies.get(machine_id, self.global_policy)

    def apply(self, record: EventRecord) -> None:
        payload = record.payload
        if record.kind == "reading":
            m = self._machine(payload["machine_id"])
            m.last_reading_ts = payload["timestamp"]
        elif record.kind == "estimate":
            m = self._machine(payload["machine_id"])
            m.series.append(
                {
                    "seq": record.seq,
                    "timestamp": payload["timestamp"],
                    "expected_value": payload["expected_value"],
                    "intervene": payload["intervene"],
                    "labels": payload["labels"],
                }
            )
            if payload["intervene"] == 0:
                m.stop_pending = False
        elif record.kind == "alert":
            entry = dict(payload)
            entry["seq"] = record.seq
            self.alerts.append(entry)
            subject = payload.get("subject")
            if subject in self.machines:
                self.machines[subject].alert_count += 1
        elif record.kind == "stop":
            self._machine(payload["machine_id"]).stop_pending = True
        elif record.kind == "policy":
            applied = {"style": payload["style"], "threshold": payload["threshold"]}
            machine_id = payload.get("machine_id")
            if machine_id:
                self.machine_policies[machine_id] = applied
            else:
                self.global_policy = applied
        self.last_seq = max(self.last_seq, record.seq)

    def apply_all(self, records: Iterable[EventRecord]) -> None:
        for record in records:
            self.apply(record)

    def snapshot(self) -> dict:
        """Canonical dict for replay-equivalence checks."""
        return {
            "machines": {
                mid: {
                    "series": m.series,
                    "last_reading_ts": m.last_reading_ts,
                    "stop_pending": m.stop_pending,
                    "alert_count": m.alert_count,
                }
                for mid, m in sorted(self.machines.items())
            },
            "alerts": self.alerts,
            "global_policy": self.global_policy,
            "machine_policies": self.machine_policies,
            "last_seq": self.last_seq,
        }


def downsample_condition(points: list[dict], limit: int = CONDITION_POINT_LIMIT) -> list[dict]:
    """Reduce a series to ≤ limit points without hiding alarms.

    Index-based buckets; each bucket contributes its max-E point, plus
    its max-E alarm point when the winner is not itself an alarm. Bucket
    count is limit // 2 so the output stays within the cap.
    """
    n = len(points)
    if n <= limit:
        return points
    buckets = limit // 2
    out = []
    for b in range(buckets):
        lo = b * n // buckets
        hi = (b + 1) * n // buckets
        chunk = points[lo:hi]
        if not chunk:
            continue
        best = max(chunk, key=lambda p: p["expected_value"])
        picks = [best]
        if best["intervene"] != 1:
            alarms = [p for p in chunk if p["intervene"] == 1]
            if alarms:
                picks.append(max(alarms, key=lambda p: p["expected_value"]))
        out.extend(sorted(picks, key=lambda p: p["seq"]))
    return out


class LogCommandPort:
    """Write path when the service owns the log (no live pipeline)."""

    def __init__(self, root: str | Path, clock=None):
        self.root = Path(root)
        self._writer: EventLog | None = None
        self._clock = clock

    def _log(self) -> EventLog:
        if self._writer is None:
            kwargs = {"clock": self._clock} if self._clock else {}
            self._writer = EventLog(self.root, **kwargs)
        return self._writer

    def apply_policy(self, style: str, threshold: float, machine_id: str | None) -> int:
        return self._log().append(
            "policy", {"style": style, "threshold": threshold, "machine_id": machine_id}
        )

    def request_stop(self, machine_id: str, reason_text: str, pending: bool) -> int | None:
        if pending:
            return None
        return self._log().append(
            "stop",
            {
                "machine_id": machine_id,
                "reason": "rule_alert",
                "evidence": {"source": "api", "text": reason_text},
                "issued_at": time.time(),
            },
        )

    def close(self) -> None:
        if self._writer is not None:
            self._writer.close()
            self._writer = None


class PolicyBody(BaseModel):
    style: str
    threshold: Optional[float] = None
    machine_id: Optional[str] = None


class StopBody(BaseModel):
    reason: str = ""


def _require_token(request: Request) -> None:
    token = os.environ.get(ENV_TOKEN, "")
    if not token:
        return
    header = request.headers.get("authorization", "")
    if header != f"Bearer {token}":
        raise HTTPException(status_code=401, detail="missing or wrong bearer token")


def _sse_frame(record: EventRecord) -> str:
    data = json.dumps(record.to_json(), ensure_ascii=False, separators=(",", ":"))
    return f"id: {record.seq}\nevent: {record.kind}\ndata: {data}\n\n"


def create_app(
    config: PipelineConfig,
    log_root: str | Path | None = None,
    command_port=None,
) -> FastAPI:
    """Build the API over a log directory.

    ``command_port`` handles writes; defaults to direct log appends.
    A live pipeline passes its own port so policy changes reach the
    running labeler and stops go through the agent.
    """
    root = Path(log_root or config.log_root)
    if command_port is None:
        command_port = LogCommandPort(root)

    default_policy = {
        "style": config.policy_style,
        "threshold": (
            config.policy_threshold
            if config.policy_threshold is not None
            else POLICY_PRESETS[config.policy_style]
        ),
    }
    projection = FleetProjection(default_policy)
    lock = threading.Lock()

    app = FastAPI(title="digital twin service", dependencies=[Depends(_require_token)])
    app.state.projection = projection
    app.state.command_port = command_port

    def refresh() -> FleetProjection:
        with lock:
            projection.apply_all(eventlog.scan(root, start=projection.last_seq + 1))
            return projection

    @app.get("/machines")
    def machines() -> list[dict]:
        p = refresh()
        return [
            m.summary(p.policy_for(mid)) for mid, m in sorted(p.machines.items())
        ]

    @app.get("/machines/{machine_id}/condition")
    def condition(machine_id: str, window: Optional[int] = None) -> dict:
        p = refresh()
        state = p.machines.get(machine_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown machine {machine_id!r}")
        points = state.series
        if window is not None and points:
            horizon = points[-1]["timestamp"] - window
            points = [pt for pt in points if pt["timestamp"] > horizon]
        downsampled = downsample_condition(points)
        return {
            "machine_id": machine_id,
            "policy": p.policy_for(machine_id),
            "points": downsampled,
            "total_points": len(points),
            "downsampled": len(downsampled) < len(points),
        }

    @app.post("/policy")
    def set_policy(body: PolicyBody) -> dict:
        if body.style not in POLICY_PRESETS:
            raise HTTPException(status_code=422, detail=f"unknown policy style {body.style!r}")
        threshold = body.threshold
        if threshold is None:
            threshold = POLICY_PRESETS[body.style]
        if not 0.0 <= threshold <= 1.0:
            raise HTTPException(status_code=422, detail=f"threshold outside [0, 1]: {threshold}")
        seq = command_port.apply_policy(body.style, threshold, body.machine_id)
        return {"style": body.style, "threshold": threshold, "machine_id": body.machine_id, "seq": seq}

    @app.post("/machines/{machine_id}/stop", status_code=202)
    def stop_machine(machine_id: str, body: StopBody) -> dict:
        p = refresh()
        state = p.machines.get(machine_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown machine {machine_id!r}")
        seq = command_port.request_stop(machine_id, body.reason, state.stop_pending)
        if seq is None:
            raise HTTPException(status_code=409, detail=f"stop already pending for {machine_id!r}")
        return {"command_id": seq, "machine_id": machine_id}

    @app.get("/alerts")
    def alerts(since_seq: int = 0) -> list[dict]:
        p = refresh()
        return [a for a in p.alerts if a["seq"] > since_seq]

    @app.get("/models")
    def models() -> list[dict]:
        out = []
        models_dir = Path(config.models_dir)
        if not models_dir.is_dir():
            return out
        for path in sorted(models_dir.glob("*.json")):
            if path.name.endswith(".report.json"):
                continue
            entry: dict = {"file": path.name}
            try:
                artifact = json.loads(path.read_text(encoding="utf-8"))
                entry["fingerprint"] = artifact.get("fingerprint", "")
                entry["model"] = artifact.get("spec", {}).get("kind", "")
            except (OSError, json.JSONDecodeError):
                continue
            report_path = path.with_suffix(".report.json")
            if report_path.exists():
                try:
                    entry["report"] = json.loads(report_path.read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError):
                    entry["report"] = None
            out.append(entry)
        return out

    @app.get("/stream")
    async def stream(request: Request, since_seq: int = 0, follow: int = 1) -> StreamingResponse:
        async def generate():
            cursor = since_seq
            while True:
                # scan is cheap at desk scale; cursor guarantees in-order,
                # at-least-once delivery across reconnects
                records = await asyncio.to_thread(
                    lambda c: list(eventlog.scan(root, start=c + 1)), cursor
                )
                for record in records:
                    yield _sse_frame(record)
                    cursor = record.seq
                if not follow:
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(STREAM_POLL_S)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
