"""Rule propagation and obligation checking over multi-input multi-output data-flow graphs."""

from .graph import (
    DataFlowGraph, PortRef, ProcessNode, export_dot, inject_virtual_input,
    inject_virtual_process, load_graph, topo_order,
)
from .model import (
    NULL, And, Attribute, Compare, DataRuleSet, EvaluationContext, Not, Null,
    Obligation, ObligationDef, Or, eval_condition, merge_rule_sets,
)
from .notation import parse_data_rules, parse_flow_rules, parse_rule_set, serialize
from .oracle import oracle_reason
from .reasoner import ActivatedObligation, ReasoningResult, apply_flow, check_activation, reason
from .recognizer import RuleDatabase, annotate, write_back
from .statements import Delete, Edit, FlowRuleSet, Propagate
from .store import ObligationStore

__version__ = "0.1.0"

__all__ = [
    "NULL", "And", "Attribute", "Compare", "DataRuleSet", "EvaluationContext", "Not",
    "Null", "Obligation", "ObligationDef", "Or", "eval_condition", "merge_rule_sets",
    "parse_data_rules", "parse_flow_rules", "parse_rule_set", "serialize",
    "Delete", "Edit", "FlowRuleSet", "Propagate",
    "DataFlowGraph", "PortRef", "ProcessNode", "export_dot", "inject_virtual_input",
    "inject_virtual_process", "load_graph", "topo_order",
    "ActivatedObligation", "ReasoningResult", "apply_flow", "check_activation", "reason",
    "oracle_reason", "RuleDatabase", "annotate", "write_back", "ObligationStore",
]
