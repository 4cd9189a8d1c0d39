"""The abstract data-flow graph: native JSON format, validation, injection and DOT export.

A graph document looks like::

    {
      "purpose": "research", "user": "alice", "startTime": "2021-01-01T00:00",
      "processes": [{"id": "P1", "action": "remove_dob",
                     "inputs": ["input1"], "outputs": ["output1", "output2"],
                     "flowRules": "pr(input1, [output1, output2])"}],
      "connections": [{"fromProcess": "P1", "fromPort": "output1",
                       "toProcess": "P2", "toPort": "in"}],
      "initialRules": [{"process": "P1", "port": "input1", "rules": "attribute(...)"}],
      "data": [{"process": "P1", "port": "input1", "id": "patients.csv"}]
    }

Processes may also carry ``virtual`` and ``virtualInputs``. ``data`` binds
caller-chosen data ids (and an optional ``uri``) to ports for the recognizer;
a binding names an input port unless it says ``"direction": "out"``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import (
    CycleDetected, DanglingPort, DuplicateId, DuplicatePort, GraphFormatError,
    MultipleProducers, UnknownPort, UnknownProcess,
)
from .model import EMPTY, DataRuleSet, merge_rule_sets
from .notation import parse_flow_rules, parse_rule_set, serialize
from .statements import FlowRuleSet

IN, OUT = "in", "out"


@dataclass(frozen=True, order=True)
class PortRef:
    process_id: str
    port_name: str
    direction: str = OUT

    def __str__(self):
        return f"{self.process_id}:{self.port_name}"


@dataclass(frozen=True)
class Connection:
    source: PortRef
    target: PortRef


@dataclass(frozen=True)
class DataBinding:
    port: PortRef
    data_id: str
    uri: Optional[str] = None


@dataclass(frozen=True)
class ProcessNode:
    id: str
    action_type: str
    input_ports: tuple = ()
    output_ports: tuple = ()
    flow_rules: Optional[FlowRuleSet] = None
    user: Optional[str] = None
    start_time: Optional[str] = None
    virtual: bool = False
    virtual_inputs: frozenset = frozenset()

    def inputs(self) -> list[PortRef]:
        return [PortRef(self.id, p, IN) for p in self.input_ports]

    def outputs(self) -> list[PortRef]:
        return [PortRef(self.id, p, OUT) for p in self.output_ports]


@dataclass(frozen=True)
class DataFlowGraph:
    processes: tuple = ()
    connections: tuple = ()
    initial_attachments: tuple = ()   # (input PortRef, DataRuleSet) pairs
    purpose: Optional[str] = None
    user: Optional[str] = None
    start_time: Optional[str] = None
    data_bindings: tuple = ()
    _index: dict = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        index = {}
        for p in self.processes:
            if p.id in index:
                raise DuplicateId(p.id)
            index[p.id] = p
        object.__setattr__(self, "_index", index)
        self._validate()

    # -- lookup ---------------------------------------------------------

    def process(self, pid: str) -> ProcessNode:
        try:
            return self._index[pid]
        except KeyError:
            raise UnknownProcess(pid) from None

    def has_port(self, ref: PortRef) -> bool:
        node = self._index.get(ref.process_id)
        if node is None:
            return False
        ports = node.input_ports if ref.direction == IN else node.output_ports
        return ref.port_name in ports

    def producer(self, ref: PortRef) -> Optional[PortRef]:
        for c in self.connections:
            if c.target == ref:
                return c.source
        return None

    def consumers(self, ref: PortRef) -> list[PortRef]:
        return [c.target for c in self.connections if c.source == ref]

    def attachment(self, ref: PortRef) -> DataRuleSet:
        sets = [rs for port, rs in self.initial_attachments if port == ref]
        return merge_rule_sets(sets) if sets else EMPTY

    def terminal_outputs(self) -> list[PortRef]:
        fed = {c.source for c in self.connections}
        return [o for pid in topo_order(self) for o in self.process(pid).outputs() if o not in fed]

    # -- validation -----------------------------------------------------

    def _validate(self):
        for p in self.processes:
            for label, ports in (("input", p.input_ports), ("output", p.output_ports)):
                if len(set(ports)) != len(ports):
                    dup = next(x for x in ports if ports.count(x) > 1)
                    raise DuplicatePort(f"{p.id}:{dup} ({label})")
        producers = set()
        for c in self.connections:
            if c.source.direction != OUT or not self.has_port(c.source):
                raise DanglingPort(c.source)
            if c.target.direction != IN or not self.has_port(c.target):
                raise DanglingPort(c.target)
            if c.target in producers:
                raise MultipleProducers(c.target)
            producers.add(c.target)
        for port, _ in self.initial_attachments:
            if port.direction != IN or not self.has_port(port):
                raise DanglingPort(port)
        for b in self.data_bindings:
            if not self.has_port(b.port):
                raise DanglingPort(b.port)
        _check_acyclic(self)


def _successors(graph: DataFlowGraph) -> dict[str, set]:
    succ = {p.id: set() for p in graph.processes}
    for c in graph.connections:
        succ[c.source.process_id].add(c.target.process_id)
    return succ


def _check_acyclic(graph: DataFlowGraph):
    succ = _successors(graph)
    state: dict[str, int] = {}
    for root in sorted(succ):
        if root in state:
            continue
        stack = [(root, iter(sorted(succ[root])))]
        path = [root]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
            elif state.get(nxt) == 1:
                raise CycleDetected(path[path.index(nxt):] + [nxt])
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(sorted(succ[nxt]))))
                path.append(nxt)


def topo_order(graph: DataFlowGraph) -> list[str]:
    """Kahn's algorithm; among ready processes the smallest id goes first."""
    succ = _successors(graph)
    indegree = {pid: 0 for pid in succ}
    for targets in succ.values():
        for t in targets:
            indegree[t] += 1
    ready = [pid for pid, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        pid = heapq.heappop(ready)
        order.append(pid)
        for t in succ[pid]:
            indegree[t] -= 1
            if indegree[t] == 0:
                heapq.heappush(ready, t)
    return order


# -- document format ----------------------------------------------------

def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise GraphFormatError(f"{where}: missing key {key!r}")
    return doc[key]


def load_graph(doc: dict) -> DataFlowGraph:
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be a JSON object")
    processes = []
    for i, p in enumerate(doc.get("processes", [])):
        where = f"processes[{i}]"
        flow = p.get("flowRules")
        processes.append(ProcessNode(
            id=_require(p, "id", where),
            action_type=_require(p, "action", where),
            input_ports=tuple(p.get("inputs", ())),
            output_ports=tuple(p.get("outputs", ())),
            flow_rules=parse_flow_rules(flow) if flow is not None else None,
            user=p.get("user"),
            start_time=p.get("startTime"),
            virtual=bool(p.get("virtual", False)),
            virtual_inputs=frozenset(p.get("virtualInputs", ())),
        ))
    connections = []
    for i, c in enumerate(doc.get("connections", [])):
        where = f"connections[{i}]"
        connections.append(Connection(
            PortRef(_require(c, "fromProcess", where), _require(c, "fromPort", where), OUT),
            PortRef(_require(c, "toProcess", where), _require(c, "toPort", where), IN),
        ))
    attachments = []
    for i, a in enumerate(doc.get("initialRules", [])):
        where = f"initialRules[{i}]"
        port = PortRef(_require(a, "process", where), _require(a, "port", where), IN)
        attachments.append((port, parse_rule_set(_require(a, "rules", where))))
    bindings = []
    for i, d in enumerate(doc.get("data", [])):
        where = f"data[{i}]"
        pid, port = _require(d, "process", where), _require(d, "port", where)
        direction = d.get("direction", IN)
        if direction not in (IN, OUT):
            raise GraphFormatError(f"{where}: direction must be 'in' or 'out'")
        bindings.append(DataBinding(PortRef(pid, port, direction), _require(d, "id", where), d.get("uri")))
    return DataFlowGraph(
        processes=tuple(processes),
        connections=tuple(connections),
        initial_attachments=tuple(attachments),
        purpose=doc.get("purpose"),
        user=doc.get("user"),
        start_time=doc.get("startTime"),
        data_bindings=tuple(bindings),
    )


def to_document(graph: DataFlowGraph) -> dict:
    doc: dict = {}
    for key, value in (("purpose", graph.purpose), ("user", graph.user), ("startTime", graph.start_time)):
        if value is not None:
            doc[key] = value
    procs = []
    for p in graph.processes:
        entry = {"id": p.id, "action": p.action_type,
                 "inputs": list(p.input_ports), "outputs": list(p.output_ports)}
        if p.flow_rules is not None:
            entry["flowRules"] = serialize(p.flow_rules)
        if p.user is not None:
            entry["user"] = p.user
        if p.start_time is not None:
            entry["startTime"] = p.start_time
        if p.virtual:
            entry["virtual"] = True
        if p.virtual_inputs:
            entry["virtualInputs"] = sorted(p.virtual_inputs)
        procs.append(entry)
    doc["processes"] = procs
    doc["connections"] = [
        {"fromProcess": c.source.process_id, "fromPort": c.source.port_name,
         "toProcess": c.target.process_id, "toPort": c.target.port_name}
        for c in graph.connections
    ]
    doc["initialRules"] = [
        {"process": port.process_id, "port": port.port_name, "rules": serialize(rs)}
        for port, rs in graph.initial_attachments
    ]
    if graph.data_bindings:
        doc["data"] = []
        for b in graph.data_bindings:
            entry = {"process": b.port.process_id, "port": b.port.port_name, "id": b.data_id}
            if b.port.direction == OUT:
                entry["direction"] = OUT
            if b.uri is not None:
                entry["uri"] = b.uri
            doc["data"].append(entry)
    return doc


# -- injection ----------------------------------------------------------

def _fresh_id(graph: DataFlowGraph, base: str) -> str:
    taken = {p.id for p in graph.processes}
    if base not in taken:
        return base
    n = 2
    while f"{base}-{n}" in taken:
        n += 1
    return f"{base}-{n}"


def inject_virtual_process(graph: DataFlowGraph, action_type: str, sources) -> DataFlowGraph:
    """Add a sink process consuming each of ``sources`` on its own input port."""
    sources = list(sources)
    if not sources:
        raise UnknownPort("virtual process needs at least one source port")
    for s in sources:
        if s.direction != OUT or not graph.has_port(s):
            raise UnknownPort(s)
    pid = _fresh_id(graph, f"virtual:{action_type}")
    ports = tuple(f"in{i}" for i in range(len(sources)))
    node = ProcessNode(pid, action_type, ports, (), None, virtual=True)
    conns = tuple(Connection(s, PortRef(pid, port, IN)) for s, port in zip(sources, ports))
    return replace(graph, processes=graph.processes + (node,),
                   connections=graph.connections + conns)


def inject_virtual_input(graph: DataFlowGraph, process_id: str, port_name: str,
                         rules: DataRuleSet) -> DataFlowGraph:
    """Give ``process_id`` a new sourceless input port carrying ``rules``."""
    node = graph.process(process_id)
    if port_name in node.input_ports:
        raise DuplicatePort(f"{process_id}:{port_name}")
    new_node = replace(node, input_ports=node.input_ports + (port_name,),
                       virtual_inputs=node.virtual_inputs | {port_name})
    procs = tuple(new_node if p.id == process_id else p for p in graph.processes)
    attachments = graph.initial_attachments + ((PortRef(process_id, port_name, IN), rules),)
    return replace(graph, processes=procs, initial_attachments=attachments)


def with_attachment(graph: DataFlowGraph, port: PortRef, rules: DataRuleSet) -> DataFlowGraph:
    return replace(graph, initial_attachments=graph.initial_attachments + ((port, rules),))


# -- DOT ----------------------------------------------------------------

def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _dot_label(lines) -> str:
    body = "\\l".join(line.replace("\\", "\\\\").replace('"', '\\"') for line in lines)
    return '"' + body + '\\l"'


def export_dot(graph: DataFlowGraph, result=None) -> str:
    """Render ``graph`` (and optionally the rules of a reasoning result) as DOT."""
    lines = ["digraph G {", "  rankdir=LR;", '  node [shape=box, fontname="Helvetica"];']
    for pid in topo_order(graph):
        p = graph.process(pid)
        style = ", style=dashed" if p.virtual else ""
        lines.append(f'  {_dot_id(pid)} [label={_dot_id(pid + chr(10) + p.action_type)}{style}];')
        for port in p.inputs():
            if graph.producer(port) is not None:
                continue
            has_rules = any(ref == port for ref, _ in graph.initial_attachments)
            if not (has_rules or port.port_name in p.virtual_inputs):
                continue
            node = _dot_id(f"{pid}:{port.port_name}:in")
            dashed = port.port_name in p.virtual_inputs
            shape = "egg" if dashed else "ellipse"
            extra = ", style=dashed" if dashed else ""
            lines.append(f"  {node} [shape={shape}, label={_dot_id(port.port_name)}{extra}];")
            lines.append(f"  {node} -> {_dot_id(pid)}{' [style=dashed]' if dashed else ''};")
    for c in sorted(graph.connections, key=lambda c: (c.source, c.target)):
        label = f"{c.source.port_name} -> {c.target.port_name}"
        lines.append(f"  {_dot_id(c.source.process_id)} -> {_dot_id(c.target.process_id)} [label={_dot_id(label)}];")
    if result is not None:
        for port in graph.terminal_outputs():
            rules = result.output_rules.get(port, EMPTY)
            node = _dot_id(f"{port.process_id}:{port.port_name}:out")
            text = [port.port_name] + serialize(rules).splitlines()
            lines.append(f"  {node} [shape=note, label={_dot_label(text)}];")
            lines.append(f"  {_dot_id(port.process_id)} -> {node};")
    lines.append("}")
    return "\n".join(lines) + "\n"
