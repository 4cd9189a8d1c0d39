"""Rule database: attach stored rules to a graph before reasoning, and write derived rules back.

Database document::

    {
      "data":       [{"match": {"data_id": "cmip6/*"}, "rules": "..."}],
      "process":    [{"match": {"action_type": "remove_dob"}, "flow_rules": "..."}],
      "injections": [{"match": {"process_id": "specfem"}, "port": "mesh", "rules": "..."}],
      "derived":    {"mt3d:synthetics": "..."}
    }

Data matchers may use ``data_id``, ``uri_pattern`` and ``port`` (``proc:port``);
process matchers and injections use ``process_id`` and ``action_type``. All
keys given in one ``match`` must hold. Patterns are literal except for ``*``.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

from .errors import RuleDatabaseError, UnknownOutputPort
from .graph import IN, DataFlowGraph, PortRef, ProcessNode, inject_virtual_input
from .model import DataRuleSet, merge_rule_sets
from .notation import parse_flow_rules, parse_rule_set, serialize

DATA_KEYS = {"data_id", "uri_pattern", "port"}
PROCESS_KEYS = {"process_id", "action_type"}


@lru_cache(maxsize=256)
def _glob_re(pattern: str) -> re.Pattern:
    return re.compile(".*".join(re.escape(part) for part in pattern.split("*")) + r"\Z")


def glob_match(pattern: str, text) -> bool:
    return text is not None and bool(_glob_re(pattern).match(text))


@dataclass(frozen=True)
class DataMatcher:
    match: dict
    rules: str


@dataclass(frozen=True)
class ProcessMatcher:
    match: dict
    flow_rules: str


@dataclass(frozen=True)
class Injection:
    match: dict
    port: str
    rules: str


@dataclass
class RuleDatabase:
    data: list = field(default_factory=list)
    process: list = field(default_factory=list)
    injections: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)

    @classmethod
    def from_document(cls, doc: Mapping) -> "RuleDatabase":
        db = cls()
        for i, entry in enumerate(doc.get("data", [])):
            _checked("data", i, lambda: _check_match(entry, DATA_KEYS) or parse_rule_set(entry["rules"]))
            db.data.append(DataMatcher(dict(entry["match"]), entry["rules"]))
        for i, entry in enumerate(doc.get("process", [])):
            _checked("process", i, lambda: _check_match(entry, PROCESS_KEYS) or parse_flow_rules(entry["flow_rules"]))
            db.process.append(ProcessMatcher(dict(entry["match"]), entry["flow_rules"]))
        for i, entry in enumerate(doc.get("injections", [])):
            _checked("injections", i, lambda: _check_match(entry, PROCESS_KEYS) or parse_rule_set(entry["rules"]))
            db.injections.append(Injection(dict(entry["match"]), entry["port"], entry["rules"]))
        for i, (data_id, text) in enumerate(sorted(doc.get("derived", {}).items())):
            _checked("derived", i, lambda: parse_rule_set(text))
            db.derived[data_id] = text
        return db

    def to_document(self) -> dict:
        return {
            "data": [{"match": m.match, "rules": m.rules} for m in self.data],
            "process": [{"match": m.match, "flow_rules": m.flow_rules} for m in self.process],
            "injections": [{"match": m.match, "port": m.port, "rules": m.rules} for m in self.injections],
            "derived": dict(sorted(self.derived.items())),
        }

    @classmethod
    def load(cls, path) -> "RuleDatabase":
        path = Path(path)
        if not path.exists():
            return cls()
        return cls.from_document(json.loads(path.read_text(encoding="utf-8")))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_document(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")


def _checked(section: str, index: int, fn):
    try:
        fn()
    except RuleDatabaseError:
        raise
    except Exception as exc:
        raise RuleDatabaseError(section, index, exc) from exc


def _check_match(entry: Mapping, allowed: set):
    match = entry.get("match")
    if not isinstance(match, dict) or not match:
        raise ValueError("'match' must be a non-empty object")
    unknown = set(match) - allowed
    if unknown:
        raise ValueError(f"unknown match keys: {sorted(unknown)}")


def _process_hit(match: Mapping, p: ProcessNode) -> bool:
    checks = {"process_id": p.id, "action_type": p.action_type}
    return all(glob_match(pattern, checks[key]) for key, pattern in match.items())


def _data_ports(match: Mapping, graph: DataFlowGraph) -> list[PortRef]:
    bindings = [b for b in graph.data_bindings if b.port.direction == IN]
    if "data_id" in match or "uri_pattern" in match:
        candidates = [b.port for b in bindings
                      if ("data_id" not in match or glob_match(match["data_id"], b.data_id))
                      and ("uri_pattern" not in match or glob_match(match["uri_pattern"], b.uri))]
    else:
        candidates = [port for p in graph.processes for port in p.inputs()]
    if "port" in match:
        candidates = [port for port in candidates if glob_match(match["port"], str(port))]
    return list(dict.fromkeys(candidates))


def _attach(graph: DataFlowGraph, extra: Mapping[PortRef, list]) -> DataFlowGraph:
    """Fold extra rule sets into the attachments, one merged entry per port."""
    if not extra:
        return graph
    merged: dict[PortRef, list] = {}
    for port, rs in graph.initial_attachments:
        merged.setdefault(port, []).append(rs)
    for port, sets in extra.items():
        merged.setdefault(port, []).extend(sets)
    attachments = tuple((port, merge_rule_sets(sets)) for port, sets in merged.items())
    return replace(graph, initial_attachments=attachments)


def annotate(graph: DataFlowGraph, db: RuleDatabase) -> DataFlowGraph:
    """Return ``graph`` with matching database rules attached.

    Explicit flow rules in the graph win; otherwise the first matching process
    entry supplies them. Every matching data entry contributes its rules.
    """
    procs = []
    for p in graph.processes:
        if not p.flow_rules:
            hit = next((m for m in db.process if _process_hit(m.match, p)), None)
            if hit is not None:
                p = replace(p, flow_rules=parse_flow_rules(hit.flow_rules))
        procs.append(p)
    if procs != list(graph.processes):
        graph = replace(graph, processes=tuple(procs))

    extra: dict[PortRef, list] = {}
    for m in db.data:
        rules = parse_rule_set(m.rules)
        for port in _data_ports(m.match, graph):
            extra.setdefault(port, []).append(rules)
    for b in graph.data_bindings:
        if b.port.direction == IN and b.data_id in db.derived:
            extra.setdefault(b.port, []).append(parse_rule_set(db.derived[b.data_id]))

    for inj in db.injections:
        rules = parse_rule_set(inj.rules)
        for p in [p for p in graph.processes if _process_hit(inj.match, p)]:
            if inj.port in p.input_ports:
                extra.setdefault(PortRef(p.id, inj.port, IN), []).append(rules)
            else:
                graph = inject_virtual_input(graph, p.id, inj.port, rules)
    return _attach(graph, extra)


def write_back(result, data_ids: Mapping[PortRef, str], db: RuleDatabase) -> RuleDatabase:
    """Store the derived rules of mapped output ports under their data ids."""
    derived = dict(db.derived)
    for port, data_id in data_ids.items():
        if port not in result.output_rules:
            raise UnknownOutputPort(port)
        derived[data_id] = serialize(result.output_rules[port])
    return replace(db, derived=derived)


def rules_for(db: RuleDatabase, data_id: str) -> DataRuleSet:
    return parse_rule_set(db.derived.get(data_id, ""))
