"""A deliberately naive fluent-database interpreter used as a test oracle.

State is a set of fluents, each carrying the history of ports it visited::

    ("Attr", attribute, h)              h ends with the port it sits on
    ("PropAttr", attribute, h)          h ends with (.., p_in, p_out)
    ("Obligation", obligation, h)
    ("PropObligation", obligation, h)

Each port in ``h`` is a PortRef, so ``h[-2:]`` identifies the propagated copy
an element belongs to. Processes are run as action sequences: one ``pr`` per
input port (the union of its declared targets), then the refinements in
order, then ``end(p_out)`` per output port. Nothing is shared with the
engine beyond the value types and the condition evaluator.
"""

from __future__ import annotations

from dataclasses import replace

from .graph import IN, OUT, DataFlowGraph, PortRef, topo_order
from .model import (
    WILDCARD, Attribute, DataRuleSet, EvaluationContext, condition_slots,
    eval_condition,
)
from .reasoner import END, IMPORT, START, ActivatedObligation, ReasoningResult, graph_context
from .statements import Delete

ATTR, PROP_ATTR, OBL, PROP_OBL = "Attr", "PropAttr", "Obligation", "PropObligation"


def _wild(pattern: str, actual: str) -> bool:
    return pattern == WILDCARD or pattern == actual


def _filter_hit(attr: Attribute, name: str, value_type: str, value: str) -> bool:
    return _wild(name, attr.name) and _wild(value_type, attr.value_type) and _wild(value, attr.value)


class Situation:
    def __init__(self):
        self.fluents: set = set()
        self.log: list = []

    def at(self, kinds, last) -> list:
        """Fluents of ``kinds`` whose history ends with ``last`` (a tuple of ports)."""
        n = len(last)
        return [f for f in self.fluents if f[0] in kinds and f[2][-n:] == last]

    def project(self, port: PortRef) -> DataRuleSet:
        found = self.at((ATTR, OBL), (port,))
        attrs = sorted({f[1] for f in found if f[0] == ATTR})
        obls = [f[1] for f in found if f[0] == OBL]
        return DataRuleSet(tuple(attrs), tuple(dict.fromkeys(sorted(obls, key=repr))))

    # -- actions --------------------------------------------------------

    def do_pr(self, p_in: PortRef, outs: list[PortRef]):
        self.log.append(("pr", p_in, tuple(outs)))
        for kind, prop in ((ATTR, PROP_ATTR), (OBL, PROP_OBL)):
            for f in self.at((kind,), (p_in,)):
                self.fluents.discard(f)
                for out in outs:
                    self.fluents.add((prop, f[1], f[2] + (out,)))

    def _copies(self, pid: str, in_pat: str, out_pat: str) -> set:
        return {f[2][-2:] for f in self.fluents
                if f[0] in (PROP_ATTR, PROP_OBL)
                and f[2][-1].process_id == pid
                and _wild(in_pat, f[2][-2].port_name) and _wild(out_pat, f[2][-1].port_name)}

    def do_delete(self, pid: str, rule: Delete):
        self.log.append(("delete", pid, rule))
        for copy in self._copies(pid, rule.in_port, rule.out_port):
            doomed = [f for f in self.at((PROP_ATTR,), copy) if _filter_hit(f[1], *rule.filter)]
            gone = {f[1] for f in doomed}
            self.fluents.difference_update(doomed)
            for f in self.at((PROP_OBL,), copy):
                if f[1].references() & gone:
                    self.fluents.discard(f)

    def do_edit(self, pid: str, rule):
        self.log.append(("edit", pid, rule))
        for copy in self._copies(pid, rule.in_port, rule.out_port):
            hits = [f for f in self.at((PROP_ATTR,), copy) if _filter_hit(f[1], *rule.filter)]
            mapping = {f[1]: Attribute(f[1].name, rule.new_type, rule.new_value) for f in hits}
            for f in hits:
                self.fluents.discard(f)
                self.fluents.add((PROP_ATTR, mapping[f[1]], f[2]))
            for f in self.at((PROP_OBL,), copy):
                if f[1].references() & mapping.keys():
                    self.fluents.discard(f)
                    self.fluents.add((PROP_OBL, f[1].rebind(mapping), f[2]))

    def do_end(self, p_out: PortRef):
        self.log.append(("end", p_out))
        for kind, plain in ((PROP_ATTR, ATTR), (PROP_OBL, OBL)):
            for f in self.at((kind,), (p_out,)):
                self.fluents.discard(f)
                self.fluents.add((plain, f[1], f[2]))

    def transfer(self, source: PortRef, target: PortRef):
        for f in self.at((ATTR, OBL), (source,)):
            self.fluents.add((f[0], f[1], f[2] + (target,)))


def oracle_reason(graph: DataFlowGraph, overrides: EvaluationContext | None = None) -> ReasoningResult:
    base = graph_context(graph, overrides)
    s = Situation()
    for port, rs in graph.initial_attachments:
        for a in rs.attributes:
            s.fluents.add((ATTR, a, (port,)))
        for ob in rs.obligations:
            s.fluents.add((OBL, ob, (port,)))

    result = ReasoningResult()

    def boundary(stage, obligations):
        ctx = replace(base, stage=stage)
        for ob in sorted(obligations, key=repr):
            if "stage" in condition_slots(ob.condition) and eval_condition(ob.condition, ctx):
                result.activations.append(ActivatedObligation.of(stage, ob, ctx))

    boundary(START, {f[1] for f in s.fluents if f[0] == OBL})
    leaving = set()
    for pid in topo_order(graph):
        p = graph.process(pid)
        for c in graph.connections:
            if c.target.process_id == pid:
                s.transfer(c.source, c.target)

        ctx = replace(base, action=p.action_type, process_id=pid,
                      user=p.user if p.user is not None else base.user,
                      start_time=p.start_time if p.start_time is not None else base.start_time)
        seen = {}
        for port in p.inputs():
            for f in s.at((OBL,), (port,)):
                seen[f[1]] = seen.get(f[1], False) or len(f[2]) == 1
        for ob, imported in sorted(seen.items(), key=lambda kv: repr(kv[0])):
            local = replace(ctx, stage=IMPORT) if imported else ctx
            if eval_condition(ob.condition, local):
                result.activations.append(ActivatedObligation.of(pid, ob, local))
        if not p.output_ports:
            leaving.update(seen)

        flow = p.flow_rules
        if flow:
            targets: dict[str, list] = {}
            for pr in flow.propagates:
                targets.setdefault(pr.in_port, []).extend(pr.out_ports)
            refinements = flow.refinements
        else:
            targets = {name: list(p.output_ports) for name in p.input_ports} if p.output_ports else {}
            refinements = ()
        for in_name, outs in targets.items():
            s.do_pr(PortRef(pid, in_name, IN), [PortRef(pid, o, OUT) for o in dict.fromkeys(outs)])
        for rule in refinements:
            if isinstance(rule, Delete):
                s.do_delete(pid, rule)
            else:
                s.do_edit(pid, rule)
        for out in p.outputs():
            s.do_end(out)
            result.output_rules[out] = s.project(out)

    for port in graph.terminal_outputs():
        leaving.update(f[1] for f in s.at((OBL,), (port,)))
    boundary(END, leaving)
    return result
