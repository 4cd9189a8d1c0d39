"""Parsed statements of the user notation, and the flow-rule program type."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .model import NULL, WILDCARD, Condition


@dataclass(frozen=True)
class Ref:
    """Reference to an attribute from an obligation; qualified when typed."""

    name: str
    value_type: Optional[str] = None
    value: Optional[str] = None


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    value_type: str
    value: str


@dataclass(frozen=True)
class ObligationDecl:
    action_class: str
    args: tuple = ()
    validity: tuple = ()
    condition: Condition = NULL


@dataclass(frozen=True)
class Propagate:
    in_port: str
    out_ports: tuple


@dataclass(frozen=True)
class Delete:
    in_port: str
    out_port: str
    name: str = WILDCARD
    value_type: str = WILDCARD
    value: str = WILDCARD

    @property
    def filter(self) -> tuple:
        return (self.name, self.value_type, self.value)


@dataclass(frozen=True)
class Edit:
    in_port: str
    out_port: str
    name: str
    value_type: str
    value: str
    new_type: str
    new_value: str

    def __post_init__(self):
        if WILDCARD in (self.new_type, self.new_value):
            raise ValueError("edit target type/value cannot be a wildcard")

    @property
    def filter(self) -> tuple:
        return (self.name, self.value_type, self.value)


Refinement = Union[Edit, Delete]
RuleStatement = Union[AttributeDecl, ObligationDecl, Propagate, Edit, Delete]


@dataclass(frozen=True)
class FlowRuleSet:
    propagates: tuple = ()
    refinements: tuple = ()

    def __bool__(self):
        return bool(self.propagates or self.refinements)

    def ports(self) -> tuple[set, set]:
        """Input and output port names mentioned (wildcards excluded)."""
        ins, outs = set(), set()
        for p in self.propagates:
            ins.add(p.in_port)
            outs.update(p.out_ports)
        for r in self.refinements:
            if r.in_port != WILDCARD:
                ins.add(r.in_port)
            if r.out_port != WILDCARD:
                outs.add(r.out_port)
        return ins, outs


def default_flow_rules(input_ports, output_ports) -> FlowRuleSet:
    """Propagate every input port to every output port."""
    outs = tuple(output_ports)
    if not outs:
        return FlowRuleSet()
    return FlowRuleSet(tuple(Propagate(p, outs) for p in input_ports))
