"""Triple store for domain facts.

Facts are (subject, predicate, object) with entity-id strings as subjects
and ids, numbers, or strings as objects. Class membership uses the
reserved predicate "a" (e.g. (m1, a, Machine)). The predicate vocabulary
is fixed per store so typos fail loudly instead of silently matching
nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import UnknownPredicate

CLASS_PREDICATE = "a"

DEFAULT_VOCABULARY = frozenset(
    {
        CLASS_PREDICATE,
        # failure history domain
        "hasAlert",
        "alertCode",
        "humidityValue",
        "temperatureValue",
        "typeOfFailure",
        "numberOfOccurrences",
        "criticality",
        "failureTimestamp",
        "timeRepair",
        "cost",
        "machineId",
        # sensor equipment domain
        "hasSensor",
        "generatesReading",
        "hasValue",
        "sensorReadingValue",
        "readingTimestamp",
        "indicatesMaintenance",
    }
)

Term = str | int | float


@dataclass(frozen=True)
class Fact:
    subject: str
    predicate: str
    object: Term

    def to_json(self) -> dict:
        return {"subject": self.subject, "predicate": self.predicate, "object": self.object}


class FactStore:
    def __init__(self, vocabulary: Iterable[str] | None = DEFAULT_VOCABULARY):
        self.vocabulary = frozenset(vocabulary) if vocabulary is not None else None
        self._facts: dict[Fact, None] = {}  # insertion-ordered set
        self._by_predicate: dict[str, list[Fact]] = {}
        self._version = 0

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts

    @property
    def version(self) -> int:
        return self._version

    def assert_fact(self, fact: Fact) -> int:
        """Add a fact; idempotent. Returns the store version."""
        if self.vocabulary is not None and fact.predicate not in self.vocabulary:
            raise UnknownPredicate(f"predicate {fact.predicate!r} not in schema")
        if fact not in self._facts:
            self._facts[fact] = None
            self._by_predicate.setdefault(fact.predicate, []).append(fact)
            self._version += 1
        return self._version

    def assert_all(self, facts: Iterable[Fact]) -> int:
        version = self._version
        for fact in facts:
            version = self.assert_fact(fact)
        return version

    def facts(
        self,
        predicate: str | None = None,
        subject: str | None = None,
        object: Term | None = None,
    ) -> Iterator[Fact]:
        """All facts matching the given fixed positions, insertion order."""
        pool = self._by_predicate.get(predicate, []) if predicate is not None else self._facts
        for fact in pool:
            if subject is not None and fact.subject != subject:
                continue
            if object is not None and fact.object != object:
                continue
            yield fact

    def entities_of(self, class_name: str) -> list[str]:
        return [f.subject for f in self.facts(CLASS_PREDICATE, object=class_name)]

    def value_of(self, subject: str, predicate: str) -> Term | None:
        """First object for (subject, predicate), or None."""
        for fact in self.facts(predicate, subject=subject):
            return fact.object
        return None

    # -- snapshot export/import (JSON lines of triples) --------------------

    def dump_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"format_version": 1}) + "\n")
            for fact in self._facts:
                fh.write(json.dumps(fact.to_json(), ensure_ascii=False) + "\n")

    @classmethod
    def load_jsonl(cls, path: str | Path, vocabulary: Iterable[str] | None = DEFAULT_VOCABULARY) -> "FactStore":
        store = cls(vocabulary)
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format_version") != 1:
                raise ValueError(f"unsupported snapshot version {header.get('format_version')!r}")
            for line in fh:
                if not line.strip():
                    continue
                doc = json.loads(line)
                store.assert_fact(Fact(doc["subject"], doc["predicate"], doc["object"]))
        return store
