"""Core rule types: attributes, obligations, activation conditions and rule sets.

A :class:`DataRuleSet` behaves as a set. Two rule sets are equal when they
hold the same attributes and the same obligations; insertion order is kept
only for presentation and the audit ``history`` never takes part in equality.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import UnknownSlot, UnresolvedReference

WILDCARD = "*"

IDENT_RE = re.compile(r"[A-Za-z_:][A-Za-z0-9_:\-]*\Z")

SLOTS = ("action", "stage", "purpose", "user", "startTime", "processId")
SLOT_ALIASES = {"process": "action"}
STAGES = ("start-of-workflow", "end-of-workflow", "import")

_SLOT_LOOKUP = {s.lower(): s for s in SLOTS}
_SLOT_LOOKUP.update(SLOT_ALIASES)


def is_identifier(text: str) -> bool:
    return bool(IDENT_RE.match(text))


def normalize_slot(name: str) -> str:
    """Map a slot spelling (any case, or an alias) to its canonical name."""
    try:
        return _SLOT_LOOKUP[name.lower()]
    except KeyError:
        raise UnknownSlot(name) from None


@dataclass(frozen=True, order=True)
class Attribute:
    name: str
    value_type: str
    value: str

    def __post_init__(self):
        for label, text in (("name", self.name), ("type", self.value_type)):
            if not text or text == WILDCARD or not is_identifier(text):
                raise ValueError(f"invalid attribute {label}: {text!r}")
        if not self.value or self.value == WILDCARD:
            raise ValueError(f"invalid attribute value: {self.value!r}")

    def __str__(self):
        return f"{self.name}({self.value_type} {self.value})"


# -- activation conditions --------------------------------------------------

@dataclass(frozen=True)
class Compare:
    """Leaf ``slot OP operand``; an operand of ``*`` is the wildcard."""

    slot: str
    op: str
    operand: str

    def __post_init__(self):
        if self.op not in ("=", "!="):
            raise ValueError(f"bad comparison operator {self.op!r}")


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


@dataclass(frozen=True)
class Null:
    pass


NULL = Null()

Condition = Union[Compare, And, Or, Not, Null]


@dataclass(frozen=True)
class EvaluationContext:
    action: Optional[str] = None
    stage: Optional[str] = None
    purpose: Optional[str] = None
    user: Optional[str] = None
    start_time: Optional[str] = None
    process_id: Optional[str] = None

    def get(self, slot: str) -> Optional[str]:
        return {
            "action": self.action,
            "stage": self.stage,
            "purpose": self.purpose,
            "user": self.user,
            "startTime": self.start_time,
            "processId": self.process_id,
        }[slot]


def eval_condition(cond: Condition, ctx: EvaluationContext) -> bool:
    if isinstance(cond, Compare):
        if cond.slot not in SLOTS:
            raise UnknownSlot(cond.slot)
        if cond.operand == WILDCARD:
            return cond.op == "="
        present = ctx.get(cond.slot)
        if cond.op == "=":
            return present is not None and present == cond.operand
        return present is None or present != cond.operand
    if isinstance(cond, And):
        return all(eval_condition(c, ctx) for c in cond.items)
    if isinstance(cond, Or):
        return any(eval_condition(c, ctx) for c in cond.items)
    if isinstance(cond, Not):
        return not eval_condition(cond.item, ctx)
    if isinstance(cond, Null):
        return False
    raise TypeError(f"not a condition: {cond!r}")


def condition_slots(cond: Condition) -> frozenset:
    """Slots mentioned anywhere in ``cond``."""
    if isinstance(cond, Compare):
        return frozenset([cond.slot])
    if isinstance(cond, (And, Or)):
        return frozenset().union(*(condition_slots(c) for c in cond.items))
    if isinstance(cond, Not):
        return condition_slots(cond.item)
    return frozenset()


# -- obligations and rule sets ----------------------------------------------

@dataclass(frozen=True)
class ObligationDef:
    action_class: str
    args: tuple = ()


@dataclass(frozen=True)
class Obligation:
    definition: ObligationDef
    validity: frozenset = frozenset()
    condition: Condition = NULL

    @property
    def action_class(self) -> str:
        return self.definition.action_class

    @property
    def args(self) -> tuple:
        return self.definition.args

    def references(self) -> frozenset:
        return frozenset(self.definition.args) | self.validity

    def rebind(self, mapping: Mapping[Attribute, Attribute]) -> "Obligation":
        """Return a copy whose attribute references follow ``mapping``."""
        args = tuple(mapping.get(a, a) for a in self.definition.args)
        validity = frozenset(mapping.get(a, a) for a in self.validity)
        return Obligation(ObligationDef(self.definition.action_class, args), validity, self.condition)

    @property
    def is_violation(self) -> bool:
        return self.definition.action_class == "Prohibited"


def _unique(items: Iterable) -> tuple:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True, eq=False)
class DataRuleSet:
    attributes: tuple = ()
    obligations: tuple = ()
    # element -> tuple of (process id, port) hops; audit only
    history: Mapping = field(default_factory=dict)

    def __post_init__(self):
        attrs = _unique(self.attributes)
        obls = _unique(self.obligations)
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "obligations", obls)
        known = set(attrs)
        for ob in obls:
            for ref in ob.definition.args + tuple(sorted(ob.validity)):
                if ref not in known:
                    raise UnresolvedReference(ref.name)

    def __eq__(self, other):
        if not isinstance(other, DataRuleSet):
            return NotImplemented
        return (frozenset(self.attributes) == frozenset(other.attributes)
                and frozenset(self.obligations) == frozenset(other.obligations))

    def __hash__(self):
        return hash((frozenset(self.attributes), frozenset(self.obligations)))

    def __len__(self):
        return len(self.attributes) + len(self.obligations)

    def __bool__(self):
        return bool(self.attributes or self.obligations)

    def __repr__(self):
        return f"DataRuleSet(attributes={list(self.attributes)}, obligations={list(self.obligations)})"

    def with_hop(self, hop) -> "DataRuleSet":
        history = {el: tuple(self.history.get(el, ())) + (hop,)
                   for el in self.attributes + self.obligations}
        return DataRuleSet(self.attributes, self.obligations, history)


EMPTY = DataRuleSet()


def merge_rule_sets(sets: Iterable[DataRuleSet]) -> DataRuleSet:
    """Set union of rule sets; histories of duplicated elements are concatenated."""
    sets = list(sets)
    if len(sets) == 1:
        return sets[0]
    attrs: dict = {}
    obls: dict = {}
    history: dict = {}
    for rs in sets:
        for el in rs.attributes:
            attrs.setdefault(el, None)
        for el in rs.obligations:
            obls.setdefault(el, None)
        for el, hops in rs.history.items():
            history[el] = _unique(history.get(el, ()) + tuple(hops))
    return DataRuleSet(tuple(attrs), tuple(obls), history)


def resolve_rule_set(statements: Iterable) -> DataRuleSet:
    """Build a rule set from parsed attribute and obligation declarations.

    A bare attribute name in an obligation binds to the nearest declaration
    of that name before the obligation, or failing that the first one after
    it. A qualified reference ``name(type "value")`` binds exactly.
    """
    from .statements import AttributeDecl, ObligationDecl

    statements = list(statements)
    attributes = []
    positions: dict[str, list[tuple[int, Attribute]]] = {}
    for i, st in enumerate(statements):
        if isinstance(st, AttributeDecl):
            attr = Attribute(st.name, st.value_type, st.value)
            attributes.append(attr)
            positions.setdefault(st.name, []).append((i, attr))

    def bind(ref, at: int) -> Attribute:
        if ref.value_type is not None:
            attr = Attribute(ref.name, ref.value_type, ref.value)
            if attr not in attributes:
                raise UnresolvedReference(ref.name)
            return attr
        candidates = positions.get(ref.name)
        if not candidates:
            raise UnresolvedReference(ref.name)
        before = [a for pos, a in candidates if pos < at]
        return before[-1] if before else candidates[0][1]

    obligations = []
    for i, st in enumerate(statements):
        if isinstance(st, ObligationDecl):
            args = tuple(bind(r, i) for r in st.args)
            validity = frozenset(bind(r, i) for r in st.validity)
            obligations.append(Obligation(ObligationDef(st.action_class, args), validity, st.condition))
        elif not isinstance(st, AttributeDecl):
            raise TypeError(f"not a data-rule statement: {st!r}")
    return DataRuleSet(tuple(attributes), tuple(obligations))
