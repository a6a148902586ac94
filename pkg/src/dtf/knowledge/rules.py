"""Forward-chaining production rules over the fact store.

Rules are conjunctive: class atoms, property atoms, and the comparison
builtins lessThanOrEqual / greaterThanOrEqual / equal. Consequents assert
property facts; an alertCode consequent additionally materializes an
Alert. Inference runs semi-naive to fixpoint: after the first pass a rule
only refires on bindings that touch at least one fact derived in the
previous pass. Rules cannot invent entities, so the fixpoint is finite; a
pass cap guards against regressions anyway.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import ConfigError, NonTermination
from .store import CLASS_PREDICATE, Fact, FactStore, Term

MAX_PASSES = 10_000

BUILTINS = {
    "lessThanOrEqual": lambda a, b: a <= b,
    "greaterThanOrEqual": lambda a, b: a >= b,
    "equal": lambda a, b: a == b,
}


def _is_var(term) -> bool:
    return isinstance(term, str) and term.startswith("?")


@dataclass(frozen=True)
class ClassAtom:
    class_name: str
    var: str


@dataclass(frozen=True)
class PropertyAtom:
    predicate: str
    subject: Term
    object: Term


@dataclass(frozen=True)
class BuiltinAtom:
    op: str
    args: tuple


@dataclass(frozen=True)
class Rule:
    name: str
    antecedent: tuple
    consequent: tuple[PropertyAtom, ...]
    description: str = ""

    def __post_init__(self) -> None:
        bound = set()
        for atom in self.antecedent:
            if isinstance(atom, ClassAtom):
                bound.add(atom.var)
            elif isinstance(atom, PropertyAtom):
                bound.update(t for t in (atom.subject, atom.object) if _is_var(t))
        for atom in self.antecedent:
            if isinstance(atom, BuiltinAtom):
                loose = [a for a in atom.args if _is_var(a) and a not in bound]
                if loose:
                    raise ConfigError(f"rule {self.name}: builtin uses unbound {loose}")
        for atom in self.consequent:
            loose = [t for t in (atom.subject, atom.object) if _is_var(t) and t not in bound]
            if loose:
                raise ConfigError(f"rule {self.name}: consequent uses unbound {loose}")
        object.__setattr__(self, "_plan", _plan_atoms(self.antecedent))

    @property
    def plan(self) -> tuple:
        """Antecedent with each builtin deferred until its variables bind."""
        return self._plan


def _plan_atoms(antecedent: tuple) -> tuple:
    """Reorder so builtins run as soon as their variables are bound.

    Source rules may state a comparison before the atom that binds its
    variable; pattern atoms keep their declared order, and each builtin is
    slotted after the earliest prefix that binds all its arguments.
    """
    patterns = [a for a in antecedent if not isinstance(a, BuiltinAtom)]
    builtins = [a for a in antecedent if isinstance(a, BuiltinAtom)]
    plan: list = []
    bound: set[str] = set()
    pending = list(builtins)

    def flush() -> None:
        done = [b for b in pending if all(not _is_var(a) or a in bound for a in b.args)]
        for b in done:
            plan.append(b)
            pending.remove(b)

    flush()
    for atom in patterns:
        plan.append(atom)
        if isinstance(atom, ClassAtom):
            bound.add(atom.var)
        else:
            bound.update(t for t in (atom.subject, atom.object) if _is_var(t))
        flush()
    plan.extend(pending)  # unbound builtins fail loudly at match time
    return tuple(plan)


@dataclass(frozen=True)
class Alert:
    code: int
    subject: str
    fired_by: str
    timestamp: float

    def __post_init__(self) -> None:
        if self.code <= 0:
            raise ValueError(f"alert code must be positive, got {self.code}")

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "subject": self.subject,
            "fired_by": self.fired_by,
            "timestamp": self.timestamp,
        }


@dataclass
class Provenance:
    rule: str
    bindings: dict[str, Term]


@dataclass
class InferenceResult:
    new_facts: list[Fact] = field(default_factory=list)
    alerts: list[Alert] = field(default_factory=list)
    provenance: dict[Fact, Provenance] = field(default_factory=dict)
    passes: int = 0


def _parse_atom(doc: dict):
    if "class" in doc:
        return ClassAtom(doc["class"], doc["var"])
    if "builtin" in doc:
        if doc["builtin"] not in BUILTINS:
            raise ConfigError(f"unknown builtin {doc['builtin']!r}")
        return BuiltinAtom(doc["builtin"], tuple(doc["args"]))
    if "property" in doc:
        return PropertyAtom(doc["property"], doc["subject"], doc["object"])
    raise ConfigError(f"unrecognized atom {doc!r}")


def load_rules(path: str | Path) -> list[Rule]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != 1:
        raise ConfigError(f"unsupported rule file version {doc.get('format_version')!r}")
    rules = []
    for entry in doc["rules"]:
        antecedent = tuple(_parse_atom(a) for a in entry["when"])
        consequent = tuple(_parse_atom(a) for a in entry["then"])
        if not all(isinstance(a, PropertyAtom) for a in consequent):
            raise ConfigError(f"rule {entry['name']}: consequents must be property atoms")
        rules.append(Rule(entry["name"], antecedent, consequent, entry.get("description", "")))
    return rules


def _substitute(term: Term, bindings: dict[str, Term]) -> Term:
    return bindings[term] if _is_var(term) else term


def _match(
    store: FactStore,
    atoms: tuple,
    bindings: dict[str, Term],
    used_delta: bool,
    delta: set[Fact] | None,
) -> Iterator[tuple[dict[str, Term], bool]]:
    """Join the pattern atoms; yields (bindings, used_delta) per solution.

    ``delta`` restricts solutions to those touching at least one delta
    fact (semi-naive); None means no restriction.
    """
    if not atoms:
        if delta is None or used_delta:
            yield bindings, used_delta
        return
    atom, rest = atoms[0], atoms[1:]
    if isinstance(atom, BuiltinAtom):
        args = [_substitute(a, bindings) for a in atom.args]
        if BUILTINS[atom.op](*args):
            yield from _match(store, rest, bindings, used_delta, delta)
        return
    if isinstance(atom, ClassAtom):
        pred, subj, obj = CLASS_PREDICATE, atom.var, atom.class_name
    else:
        pred, subj, obj = atom.predicate, atom.subject, atom.object
    subj_val = _substitute(subj, bindings) if _is_var(subj) and subj in bindings else subj
    obj_val = _substitute(obj, bindings) if _is_var(obj) and obj in bindings else obj
    for fact in store.facts(
        pred,
        subject=None if _is_var(subj_val) else subj_val,
        object=None if _is_var(obj_val) else obj_val,
    ):
        new_bindings = dict(bindings)
        if _is_var(subj_val):
            new_bindings[subj_val] = fact.subject
        if _is_var(obj_val):
            new_bindings[obj_val] = fact.object
        in_delta = used_delta or (delta is not None and fact in delta)
        yield from _match(store, rest, new_bindings, in_delta, delta)


def satisfies(store: FactStore, rule: Rule, bindings: dict[str, Term]) -> bool:
    """Check that fully ground bindings satisfy the rule's antecedent."""
    for atom in rule.antecedent:
        if isinstance(atom, BuiltinAtom):
            args = [_substitute(a, bindings) for a in atom.args]
            if not BUILTINS[atom.op](*args):
                return False
        elif isinstance(atom, ClassAtom):
            if Fact(str(bindings[atom.var]), CLASS_PREDICATE, atom.class_name) not in store:
                return False
        else:
            subj = _substitute(atom.subject, bindings)
            obj = _substitute(atom.object, bindings)
            if Fact(str(subj), atom.predicate, obj) not in store:
                return False
    return True


def run_inference(
    store: FactStore,
    rules: Iterable[Rule],
    timestamp: float | None = None,
) -> InferenceResult:
    """Forward-chain to fixpoint, asserting inferred facts into the store.

    Identical (code, subject) alerts are emitted once per call. Inferred
    facts carry the first rule and binding set that derived them.
    """
    rules = list(rules)
    ts = time.time() if timestamp is None else timestamp
    result = InferenceResult()
    seen_alerts: set[tuple[int, str]] = set()
    delta: set[Fact] | None = None  # first pass matches everything
    while True:
        result.passes += 1
        if result.passes > MAX_PASSES:
            raise NonTermination(f"no fixpoint after {MAX_PASSES} passes")
        fresh: set[Fact] = set()
        for rule in rules:
            for bindings, _ in _match(store, rule.plan, {}, False, delta):
                for atom in rule.consequent:
                    subj = _substitute(atom.subject, bindings)
                    obj = _substitute(atom.object, bindings)
                    fact = Fact(str(subj), atom.predicate, obj)
                    if fact in store or fact in fresh:
                        continue
                    fresh.add(fact)
                    result.new_facts.append(fact)
                    result.provenance[fact] = Provenance(rule.name, dict(bindings))
                    if atom.predicate == "alertCode":
                        key = (int(obj), str(subj))
                        if key not in seen_alerts:
                            seen_alerts.add(key)
                            result.alerts.append(Alert(int(obj), str(subj), rule.name, ts))
        if not fresh:
            return result
        for fact in fresh:
            store.assert_fact(fact)
        delta = fresh


def eval_maintenance_rules(store: FactStore, rules: Iterable[Rule]) -> list[Fact]:
    """Run inference and return the indicatesMaintenance assertions."""
    run_inference(store, rules)
    return list(store.facts("indicatesMaintenance"))
