"""In-process publish/subscribe bus with MQTT topic-filter semantics.

Stands in for a network broker inside tests and single-process pipelines.
Subscribers get their own unbounded queue; publish never blocks. Topic
filters support the MQTT wildcards `+` (one level) and `#` (rest).
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Iterator


def topic_matches(filter_: str, topic: str) -> bool:
    """MQTT 3.1.1 filter matching over /-separated levels."""
    flevels = filter_.split("/")
    tlevels = topic.split("/")
    for i, fl in enumerate(flevels):
        if fl == "#":
            return True
        if i >= len(tlevels):
            return False
        if fl != "+" and fl != tlevels[i]:
            return False
    return len(flevels) == len(tlevels)


@dataclass
class Message:
    topic: str
    payload: bytes


@dataclass
class Subscription:
    filter: str
    messages: "queue.Queue[Message | None]" = field(default_factory=queue.Queue)

    def get(self, timeout: float | None = None) -> Message | None:
        """Next message, or None once the bus is closed."""
        return self.messages.get(timeout=timeout)

    def __iter__(self) -> Iterator[Message]:
        while True:
            msg = self.messages.get()
            if msg is None:
                return
            yield msg


class MessageBus:
    def __init__(self) -> None:
        self._subs: list[Subscription] = []
        self._lock = threading.Lock()
        self._closed = False

    def subscribe(self, topic_filter: str) -> Subscription:
        sub = Subscription(topic_filter)
        with self._lock:
            if self._closed:
                raise RuntimeError("bus is closed")
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)
        sub.messages.put(None)

    def publish(self, topic: str, payload: bytes | str) -> int:
        """Deliver to every matching subscription; returns receiver count."""
        if isinstance(payload, str):
            payload = payload.encode("utf-8")
        with self._lock:
            targets = [s for s in self._subs if topic_matches(s.filter, topic)]
        for sub in targets:
            sub.messages.put(Message(topic, payload))
        return len(targets)

    def close(self) -> None:
        with self._lock:
            self._closed = True
            subs, self._subs = self._subs, []
        for sub in subs:
            sub.messages.put(None)
