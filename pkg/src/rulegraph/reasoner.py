"""Reasoning engine: runs flow rules over a graph and collects activated obligations.

Per process, in topological order:

1. merge the rule sets arriving on each input port (producer output plus any
   initial attachment);
2. evaluate every obligation in the union of those sets against the process
   context (``stage = import`` for obligations attached directly to one of
   the process's input ports);
3. propagate per-port copies, apply refinements in textual order to each
   matching (input, output) copy, then merge the copies per output port.

Start- and end-of-workflow evaluations bracket the run. They only consider
obligations whose condition mentions the ``stage`` slot, with ``action``
unset.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Optional

from .graph import DataFlowGraph, PortRef, ProcessNode, topo_order
from .model import (
    EMPTY, WILDCARD, Attribute, DataRuleSet, EvaluationContext, Obligation,
    condition_slots, eval_condition, merge_rule_sets,
)
from .notation import serialize
from .statements import Delete, Edit, FlowRuleSet, default_flow_rules

log = logging.getLogger(__name__)

START, END, IMPORT = "start-of-workflow", "end-of-workflow", "import"


@dataclass(frozen=True)
class ActivatedObligation:
    process: str
    action_class: str
    args: tuple
    validity: frozenset
    stage: Optional[str] = None
    action: Optional[str] = None
    violation: bool = False

    @classmethod
    def of(cls, process: str, ob: Obligation, ctx: EvaluationContext) -> "ActivatedObligation":
        return cls(process, ob.action_class, ob.args, ob.validity, ctx.stage, ctx.action, ob.is_violation)

    def to_dict(self) -> dict:
        return {
            "process": self.process,
            "action": self.action_class,
            "args": [_attr_dict(a) for a in self.args],
            "validity": [_attr_dict(a) for a in sorted(self.validity)],
            "stage": self.stage,
            "violation": self.violation,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ActivatedObligation":
        return cls(
            doc["process"], doc["action"],
            tuple(_attr_from(a) for a in doc.get("args", ())),
            frozenset(_attr_from(a) for a in doc.get("validity", ())),
            doc.get("stage"), None, bool(doc.get("violation", False)),
        )


def _attr_dict(a: Attribute) -> dict:
    return {"name": a.name, "type": a.value_type, "value": a.value}


def _attr_from(doc: dict) -> Attribute:
    return Attribute(doc["name"], doc["type"], doc["value"])


@dataclass
class ReasoningResult:
    output_rules: dict = field(default_factory=dict)   # output PortRef -> DataRuleSet
    activations: list = field(default_factory=list)
    lints: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [a for a in self.activations if a.violation]

    def to_document(self) -> dict:
        doc = {
            "outputs": [
                {"process": p.process_id, "port": p.port_name, "rules": serialize(rs)}
                for p, rs in self.output_rules.items()
            ],
            "activations": [a.to_dict() for a in self.activations],
        }
        if self.lints:
            doc["lints"] = list(self.lints)
        return doc


# -- flow-rule execution ------------------------------------------------

def match_attr_filter(attr: Attribute, filt: tuple) -> bool:
    name, value_type, value = filt
    return all(f == WILDCARD or f == actual
               for f, actual in ((name, attr.name), (value_type, attr.value_type), (value, attr.value)))


def _port_matches(pattern: str, port: str) -> bool:
    return pattern == WILDCARD or pattern == port


def _delete(rs: DataRuleSet, rule: Delete) -> DataRuleSet:
    removed = {a for a in rs.attributes if match_attr_filter(a, rule.filter)}
    if not removed:
        return rs
    attrs = tuple(a for a in rs.attributes if a not in removed)
    obls = tuple(ob for ob in rs.obligations if not (ob.references() & removed))
    history = {el: h for el, h in rs.history.items() if el in attrs or el in obls}
    return DataRuleSet(attrs, obls, history)


def _edit(rs: DataRuleSet, rule: Edit) -> DataRuleSet:
    mapping = {a: Attribute(a.name, rule.new_type, rule.new_value)
               for a in rs.attributes if match_attr_filter(a, rule.filter)}
    if not mapping:
        return rs
    history: dict = {}

    def carry(old, new):
        history[new] = tuple(dict.fromkeys(history.get(new, ()) + tuple(rs.history.get(old, ()))))
        return new

    attrs = tuple(carry(a, mapping.get(a, a)) for a in rs.attributes)
    obls = tuple(carry(ob, ob.rebind(mapping)) for ob in rs.obligations)
    return DataRuleSet(attrs, obls, history)


def effective_flow_rules(process: ProcessNode) -> FlowRuleSet:
    if process.flow_rules:
        return process.flow_rules
    return default_flow_rules(process.input_ports, process.output_ports)


def flow_rule_lints(process: ProcessNode) -> list[str]:
    if not process.flow_rules:
        return []
    ins, outs = process.flow_rules.ports()
    lints = [f"{process.id}: flow rule names unknown input port {p!r}"
             for p in sorted(ins - set(process.input_ports))]
    lints += [f"{process.id}: flow rule names unknown output port {p!r}"
              for p in sorted(outs - set(process.output_ports))]
    return lints


def apply_flow(process: ProcessNode, in_rules: Mapping[str, DataRuleSet]) -> dict[str, DataRuleSet]:
    """Run the process's flow rules; returns one rule set per output port."""
    flow = effective_flow_rules(process)
    copies: dict[tuple[str, str], DataRuleSet] = {}
    for pr in flow.propagates:
        if pr.in_port not in process.input_ports:
            continue
        source = in_rules.get(pr.in_port, EMPTY)
        for out in pr.out_ports:
            if out in process.output_ports:
                copies[(pr.in_port, out)] = source.with_hop((process.id, pr.in_port, out))
    for rule in flow.refinements:
        step = _delete if isinstance(rule, Delete) else _edit
        for (p_in, p_out), rs in copies.items():
            if _port_matches(rule.in_port, p_in) and _port_matches(rule.out_port, p_out):
                copies[(p_in, p_out)] = step(rs, rule)
    result = {}
    for out in process.output_ports:
        targeting = [rs for (_, p_out), rs in copies.items() if p_out == out]
        result[out] = merge_rule_sets(targeting) if targeting else EMPTY
    return result


# -- activation ---------------------------------------------------------

def check_activation(process: str, incoming: DataRuleSet, ctx: EvaluationContext,
                     imported: frozenset = frozenset()) -> list[ActivatedObligation]:
    """Evaluate every obligation of ``incoming``; those in ``imported`` see stage=import."""
    fired = []
    for ob in incoming.obligations:
        local = replace(ctx, stage=IMPORT) if ob in imported else ctx
        if eval_condition(ob.condition, local):
            fired.append(ActivatedObligation.of(process, ob, local))
    return fired


def boundary_activations(stage: str, rules: DataRuleSet, ctx: EvaluationContext) -> list[ActivatedObligation]:
    local = replace(ctx, action=None, process_id=None, stage=stage)
    return [ActivatedObligation.of(stage, ob, local)
            for ob in rules.obligations
            if "stage" in condition_slots(ob.condition) and eval_condition(ob.condition, local)]


def graph_context(graph: DataFlowGraph, overrides: Optional[EvaluationContext] = None) -> EvaluationContext:
    o = overrides or EvaluationContext()
    return EvaluationContext(
        purpose=o.purpose if o.purpose is not None else graph.purpose,
        user=o.user if o.user is not None else graph.user,
        start_time=o.start_time if o.start_time is not None else graph.start_time,
    )


def process_context(process: ProcessNode, base: EvaluationContext) -> EvaluationContext:
    return replace(
        base,
        action=process.action_type,
        process_id=process.id,
        user=process.user if process.user is not None else base.user,
        start_time=process.start_time if process.start_time is not None else base.start_time,
    )


def exit_rules(graph: DataFlowGraph, port_rules: Mapping[PortRef, DataRuleSet],
               sink_inputs: Mapping[str, DataRuleSet]) -> DataRuleSet:
    """Rules leaving the workflow: terminal outputs plus whatever sinks consumed."""
    sets = [port_rules.get(p, EMPTY) for p in graph.terminal_outputs()]
    sets += [sink_inputs[pid] for pid in sorted(sink_inputs)]
    return merge_rule_sets(sets) if sets else EMPTY


def initial_rules(graph: DataFlowGraph) -> DataRuleSet:
    sets = [rs for _, rs in sorted(graph.initial_attachments, key=lambda pair: pair[0])]
    return merge_rule_sets(sets) if sets else EMPTY


def reason(graph: DataFlowGraph, overrides: Optional[EvaluationContext] = None) -> ReasoningResult:
    base = graph_context(graph, overrides)
    result = ReasoningResult()
    result.activations.extend(boundary_activations(START, initial_rules(graph), base))
    port_rules: dict[PortRef, DataRuleSet] = {}
    sink_inputs: dict[str, DataRuleSet] = {}
    for pid in topo_order(graph):
        process = graph.process(pid)
        for lint in flow_rule_lints(process):
            log.warning(lint)
            result.lints.append(lint)
        in_rules, imported = {}, set()
        for port in process.inputs():
            sets = []
            producer = graph.producer(port)
            if producer is not None:
                sets.append(port_rules[producer])
            attached = graph.attachment(port)
            if attached:
                sets.append(attached)
                imported.update(attached.obligations)
            in_rules[port.port_name] = merge_rule_sets(sets) if sets else EMPTY
        incoming = merge_rule_sets(list(in_rules.values())) if in_rules else EMPTY
        ctx = process_context(process, base)
        result.activations.extend(check_activation(pid, incoming, ctx, frozenset(imported)))
        if not process.output_ports:
            sink_inputs[pid] = incoming
        for name, rs in apply_flow(process, in_rules).items():
            port = PortRef(pid, name)
            port_rules[port] = rs
            result.output_rules[port] = rs
    result.activations.extend(boundary_activations(END, exit_rules(graph, port_rules, sink_inputs), base))
    return result


def explicit_default_rules(graph: DataFlowGraph) -> DataFlowGraph:
    """Copy of ``graph`` with every missing flow-rule program written out in full."""
    procs = tuple(p if p.flow_rules else replace(p, flow_rules=effective_flow_rules(p))
                  for p in graph.processes)
    return replace(graph, processes=procs)


__all__ = [
    "ActivatedObligation", "ReasoningResult", "match_attr_filter", "apply_flow",
    "check_activation", "reason", "explicit_default_rules",
]
