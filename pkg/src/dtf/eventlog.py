"""Durable append-only event log and model-artifact storage.

Log layout, byte exact per record:

    <u32 length little-endian><u32 crc32 little-endian><utf8 json>\n

where ``length`` is the byte length of the JSON document (the trailing
newline is framing, not payload) and the CRC covers the JSON bytes. One
file per day, named ``events-YYYYMMDD.log``, inside the log directory. A
record whose frame is incomplete or whose CRC fails marks the end of the
usable log; everything after it is lost tail.

Single writer per directory, enforced with a lock file. Readers never take
the lock and simply stop at the first invalid frame, so they can run while
a writer is active.
"""

from __future__ import annotations

import errno
import json
import os
import struct
import threading
import time
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator

from .errors import DiskFull, SchemaViolation

HEADER = struct.Struct("<II")

EVENT_KINDS = ("reading", "estimate", "alert", "action", "stop", "policy")

# Minimum payload keys per kind; extra keys are allowed.
_KIND_SCHEMA: dict[str, tuple[str, ...]] = {
    "reading": ("machine_id", "sensor_id", "timestamp", "value"),
    "estimate": ("machine_id", "timestamp", "labels", "expected_value", "intervene"),
    "alert": ("code", "subject", "fired_by"),
    "action": ("phase", "route", "action", "target"),
    "stop": ("machine_id", "reason", "issued_at"),
    "policy": ("style", "threshold"),
}


@dataclass(frozen=True)
class EventRecord:
    seq: int
    kind: str
    payload: dict[str, Any]
    wall_time: float

    def to_json(self) -> dict[str, Any]:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload, "wall_time": self.wall_time}


def validate_payload(kind: str, payload: dict[str, Any]) -> None:
    if kind not in _KIND_SCHEMA:
        raise SchemaViolation(f"unknown event kind {kind!r}")
    if not isinstance(payload, dict):
        raise SchemaViolation(f"payload for {kind!r} must be an object")
    missing = [k for k in _KIND_SCHEMA[kind] if k not in payload]
    if missing:
        raise SchemaViolation(f"{kind!r} payload missing keys: {missing}")


def _encode_record(record: dict[str, Any]) -> bytes:
    body = json.dumps(record, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    return HEADER.pack(len(body), zlib.crc32(body)) + body + b"\n"


def _read_records(path: Path) -> tuple[list[EventRecord], int]:
    """Read every intact record in one file.

    Returns (records, clean_byte_length). Bytes past clean_byte_length are a
    truncated or corrupt tail.
    """
    records: list[EventRecord] = []
    data = path.read_bytes()
    pos = 0
    while pos + HEADER.size <= len(data):
        length, crc = HEADER.unpack_from(data, pos)
        end = pos + HEADER.size + length + 1  # +1 for the newline
        if end > len(data):
            break
        body = data[pos + HEADER.size : end - 1]
        if data[end - 1 : end] != b"\n" or zlib.crc32(body) != crc:
            break
        try:
            doc = json.loads(body.decode("utf-8"))
            records.append(EventRecord(doc["seq"], doc["kind"], doc["payload"], doc["wall_time"]))
        except (ValueError, KeyError):
            break
        pos = end
    return records, pos


def _log_files(root: Path) -> list[Path]:
    return sorted(root.glob("events-*.log"))


class EventLog:
    """Writer handle over a log directory.

    Opening recovers from a crashed writer: any corrupt tail in the newest
    file is truncated away (``recovered_truncated`` counts dropped records,
    at most one per the append contract since appends are flushed whole).
    """

    def __init__(self, root: str | Path, fsync: bool = True, clock: Callable[[], float] = time.time):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._clock = clock
        self._lock = threading.Lock()
        self._lockfile = self.root / "writer.lock"
        self._acquire_writer_lock()
        self.recovered_truncated = 0
        self._last_seq = 0
        self._recover()
        self._fh: Any = None
        self._fh_day: str | None = None

    # -- writer lock ------------------------------------------------------
    def _acquire_writer_lock(self) -> None:
        try:
            fd = os.open(self._lockfile, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            pid = self._lockfile.read_text().strip()
            if pid and _pid_alive(pid):
                raise RuntimeError(f"log {self.root} already has a live writer (pid {pid})")
            self._lockfile.unlink()  # stale lock from a dead writer
            fd = os.open(self._lockfile, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        if self._lockfile.exists():
            self._lockfile.unlink()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- recovery ---------------------------------------------------------
    def _recover(self) -> None:
        for path in _log_files(self.root):
            records, clean = _read_records(path)
            size = path.stat().st_size
            if clean < size:
                self.recovered_truncated += 1
                with open(path, "r+b") as fh:
                    fh.truncate(clean)
            if records:
                self._last_seq = max(self._last_seq, records[-1].seq)

    # -- append -----------------------------------------------------------
    def _file_for_today(self):
        day = time.strftime("%Y%m%d", time.gmtime(self._clock()))
        if self._fh is None or self._fh_day != day:
            if self._fh is not None:
                self._fh.close()
            self._fh = open(self.root / f"events-{day}.log", "ab")
            self._fh_day = day
        return self._fh

    def append(self, kind: str, payload: dict[str, Any]) -> int:
        """Append one event; durable (flushed and fsynced) before returning."""
        validate_payload(kind, payload)
        with self._lock:
            seq = self._last_seq + 1
            record = EventRecord(seq, kind, payload, self._clock())
            frame = _encode_record(record.to_json())
            fh = self._file_for_today()
            try:
                fh.write(frame)
                fh.flush()
                if self._fsync:
                    os.fsync(fh.fileno())
            except OSError as exc:
                if exc.errno == errno.ENOSPC:
                    raise DiskFull(str(exc)) from exc
                raise
            self._last_seq = seq
            return seq

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def scan(self, kind: str | None = None, start: int = 1, end: int | None = None) -> list[EventRecord]:
        return scan(self.root, kind=kind, start=start, end=end)


def _pid_alive(pid: str) -> bool:
    try:
        os.kill(int(pid), 0)
    except (ValueError, ProcessLookupError):
        return False
    except PermissionError:
        return True
    return True


def scan(root: str | Path, kind: str | None = None, start: int = 1, end: int | None = None) -> list[EventRecord]:
    """Read records in seq order, read-only; tolerates a dirty tail."""
    if end is not None and end < start:
        raise ValueError(f"invalid seq range {start}..{end}")
    out: list[EventRecord] = []
    for path in _log_files(Path(root)):
        records, _ = _read_records(path)
        for rec in records:
            if rec.seq < start or (end is not None and rec.seq > end):
                continue
            if kind is not None and rec.kind != kind:
                continue
            out.append(rec)
    out.sort(key=lambda r: r.seq)
    return out


# -- model artifacts ------------------------------------------------------

def save_model(model: Any, path: str | Path) -> None:
    """Write a fitted model artifact; see automl.artifact for the format."""
    from .automl.artifact import model_to_json

    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> Any:
    from .automl.artifact import model_from_json

    return model_from_json(Path(path).read_text(encoding="utf-8"))
