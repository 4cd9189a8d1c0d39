"""Parser and canonical serializer for the user notation.

Data rules::

    attribute(pf, column "DoB")
    attribute(ru, url "report.example.ac")
    obligation(report ru, [pf], action = *)

Flow rules::

    pr(input1, [output1, output2])
    delete(input1, output1, *, column, "DoB")
    edit(input1, output2, *, column, "DoB", column, "YroB")

Keywords are case-insensitive. The parser tolerates the damage found in
policy encodings copied out of typeset documents:

* a quoted literal that never closes before the next statement (or the end
  of input) extends to the last ``)`` ahead of that point;
* an attribute value whose quote closes early, leaving text before the
  statement's closing ``)``, absorbs that text (one trailing ``"`` dropped);
* ``attribute(name, type, "value")`` with a comma after the type;
* bare unquoted attribute values such as ``column 3``;
* the ``process`` slot is an alias of ``action``; ``null`` is the NULL condition.

An obligation argument may be qualified as ``name(type "value")`` to pick
one of several attributes sharing a name; the serializer emits that form
only when a bare name would be ambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import ArityError, RuleSyntaxError
from .model import (
    NULL, WILDCARD, And, Compare, Condition, DataRuleSet, Not, Null, Or,
    is_identifier, normalize_slot, resolve_rule_set,
)
from .statements import (
    AttributeDecl, Delete, Edit, FlowRuleSet, ObligationDecl, Propagate, Ref,
)

__all__ = [
    "parse_statements", "parse_data_rules", "parse_flow_rules", "parse_rule_set",
    "serialize", "format_condition", "format_attribute", "FlowRuleSet",
]

DATA_KEYWORDS = ("attribute", "obligation")
FLOW_KEYWORDS = ("pr", "edit", "delete")
RESERVED = {"and", "or", "not", "null"}

_WORD_RE = re.compile(r"[A-Za-z0-9_:.][A-Za-z0-9_:.\-]*")
_BOUNDARY_RE = re.compile(r"\n[ \t]*(?:attribute|obligation|pr|edit|delete)[ \t]*\(", re.IGNORECASE)
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


@dataclass
class _Token:
    kind: str
    text: str
    start: int
    end: int


def _unescape(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            out.append(_ESCAPES.get(nxt, "\\" + nxt))
            i += 2
            continue
        out.append(c)
        i += 1
    return "".join(out)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self._peeked: _Token | None = None

    def location(self, offset: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        col = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, col

    def error(self, offset: int, expected: str, found: str = "") -> RuleSyntaxError:
        line, col = self.location(offset)
        return RuleSyntaxError(line, col, expected, found)

    def boundary(self, offset: int) -> int:
        m = _BOUNDARY_RE.search(self.text, offset)
        return m.start() if m else len(self.text)

    def skip_space(self):
        text = self.text
        while self.pos < len(text):
            c = text[self.pos]
            if c.isspace():
                self.pos += 1
            elif c == "#":
                nl = text.find("\n", self.pos)
                self.pos = len(text) if nl < 0 else nl
            else:
                break

    def peek(self) -> _Token:
        if self._peeked is None:
            self._peeked = self._scan()
        return self._peeked

    def next(self) -> _Token:
        tok = self.peek()
        self._peeked = None
        return tok

    def reset(self, offset: int):
        self.pos = offset
        self._peeked = None

    def _scan(self) -> _Token:
        self.skip_space()
        text, start = self.text, self.pos
        if start >= len(text):
            return _Token("eof", "", start, start)
        c = text[start]
        if c == '"':
            tok = self._scan_string(start)
        elif text.startswith("!=", start):
            tok = _Token("!=", "!=", start, start + 2)
        elif c in "()[],*=":
            tok = _Token(c, c, start, start + 1)
        else:
            m = _WORD_RE.match(text, start)
            if not m:
                raise self.error(start, "a token", repr(c))
            tok = _Token("word", m.group(), start, m.end())
        self.pos = tok.end
        return tok

    def _scan_string(self, start: int) -> _Token:
        text = self.text
        limit = self.boundary(start)
        i = start + 1
        while i < limit:
            c = text[i]
            if c == "\\":
                i += 2
                continue
            if c == '"':
                return _Token("string", _unescape(text[start + 1:i]), start, i + 1)
            i += 1
        region = text[start + 1:limit]
        close = region.rfind(")")
        if close < 0:
            raise self.error(start, "closing quote")
        return _Token("string", _unescape(region[:close]).rstrip(), start, start + 1 + close)

    def at_char(self, ch: str) -> bool:
        self.skip_space()
        return self.text.startswith(ch, self.pos)


def _describe(tok: _Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)


class _Parser:
    def __init__(self, text: str):
        self.s = _Scanner(text)

    # helpers

    def expect(self, kind: str, what: str | None = None) -> _Token:
        tok = self.s.next()
        if tok.kind != kind:
            raise self.s.error(tok.start, what or repr(kind), _describe(tok))
        return tok

    def accept(self, kind: str) -> bool:
        if self.s.peek().kind == kind:
            self.s.next()
            return True
        return False

    def ident(self, what: str = "identifier") -> str:
        tok = self.s.next()
        if tok.kind != "word" or not is_identifier(tok.text):
            raise self.s.error(tok.start, what, _describe(tok))
        return tok.text

    def name_or_string(self, what: str) -> str:
        tok = self.s.next()
        if tok.kind == "word" or (tok.kind == "string" and tok.text):
            return tok.text
        raise self.s.error(tok.start, what, _describe(tok))

    # statements

    def statements(self) -> list:
        out = []
        while self.s.peek().kind != "eof":
            out.append(self.statement())
        return out

    def statement(self):
        tok = self.s.next()
        kw = tok.text.lower() if tok.kind == "word" else ""
        if kw not in DATA_KEYWORDS + FLOW_KEYWORDS:
            raise self.s.error(tok.start, "a statement keyword", _describe(tok))
        self.expect("(")
        return getattr(self, "_" + kw)(tok)

    def _attribute(self, kw_tok):
        name = self.ident("attribute name")
        self.expect(",")
        tok = self.s.next()
        value_type = "str"
        if tok.kind == "word" and self.s.peek().kind in ("string", ",", "word"):
            if not is_identifier(tok.text):
                raise self.s.error(tok.start, "attribute type", _describe(tok))
            value_type = tok.text
            self.accept(",")
            tok = self.s.next()
        if tok.kind == "string":
            value = tok.text
            if not self.s.at_char(")"):
                value = self._absorb_damaged_tail(tok)
        elif tok.kind == "word":
            value = tok.text
        else:
            raise self.s.error(tok.start, "attribute value", _describe(tok))
        if not value or value == WILDCARD:
            raise self.s.error(tok.start, "a non-empty, non-wildcard attribute value")
        self.expect(")")
        return AttributeDecl(name, value_type, value)

    def _absorb_damaged_tail(self, tok: _Token) -> str:
        text = self.s.text
        limit = self.s.boundary(tok.end)
        close = text.rfind(")", tok.end, limit)
        if close < 0:
            raise self.s.error(tok.end, "')'")
        value = (tok.text + text[tok.end:close]).rstrip()
        if value.endswith('"'):
            value = value[:-1].rstrip()
        self.s.reset(close)
        return value

    def _obligation(self, kw_tok):
        action_class = self.ident("obligated action class")
        args = []
        while not self.accept(","):
            args.append(self.ref())
        self.expect("[")
        validity = []
        if not self.accept("]"):
            validity.append(self.ref())
            while self.accept(","):
                validity.append(self.ref())
            self.expect("]")
        self.expect(",")
        cond = self.condition()
        self.expect(")")
        return ObligationDecl(action_class, tuple(args), tuple(validity), cond)

    def ref(self) -> Ref:
        name = self.ident("attribute reference")
        if self.s.peek().kind == "(":
            self.s.next()
            value_type = self.ident("attribute type")
            value = self.expect("string", "quoted attribute value").text
            self.expect(")")
            return Ref(name, value_type, value)
        return Ref(name)

    # conditions

    def condition(self) -> Condition:
        tok = self.s.peek()
        if tok.kind == "word" and tok.text.lower() == "null":
            self.s.next()
            return NULL
        return self.or_expr()

    def _keyword(self, word: str) -> bool:
        tok = self.s.peek()
        if tok.kind == "word" and tok.text.lower() == word:
            self.s.next()
            return True
        return False

    def or_expr(self) -> Condition:
        items = [self.and_expr()]
        while self._keyword("or"):
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def and_expr(self) -> Condition:
        items = [self.term()]
        while self._keyword("and"):
            items.append(self.term())
        return items[0] if len(items) == 1 else And(tuple(items))

    def term(self) -> Condition:
        if self._keyword("not"):
            return Not(self.term())
        if self.accept("("):
            inner = self.or_expr()
            self.expect(")")
            return inner
        tok = self.s.next()
        if tok.kind != "word":
            raise self.s.error(tok.start, "condition slot", _describe(tok))
        slot = normalize_slot(tok.text)
        op = self.s.next()
        if op.kind not in ("=", "!="):
            raise self.s.error(op.start, "'=' or '!='", _describe(op))
        operand = self.s.next()
        if operand.kind == "*":
            value = WILDCARD
        elif operand.kind in ("word", "string") and operand.text:
            value = operand.text
        else:
            raise self.s.error(operand.start, "condition operand", _describe(operand))
        return Compare(slot, op.kind, value)

    # flow rules

    def port(self) -> str:
        return self.name_or_string("port name")

    def _pr(self, kw_tok):
        in_port = self.port()
        self.expect(",")
        if self.accept("["):
            outs = [self.port()]
            while self.accept(","):
                outs.append(self.port())
            self.expect("]")
        else:
            outs = [self.port()]
        self.expect(")")
        return Propagate(in_port, tuple(outs))

    def _fields(self) -> list[tuple[str, _Token]]:
        fields = []
        while True:
            tok = self.s.next()
            if tok.kind == "*":
                fields.append((WILDCARD, tok))
            elif tok.kind in ("word", "string") and tok.text:
                fields.append((tok.text, tok))
            else:
                raise self.s.error(tok.start, "filter field", _describe(tok))
            if self.accept(")"):
                return fields
            self.expect(",", "',' or ')'")

    def _delete(self, kw_tok):
        fields = self._fields()
        if len(fields) != 5:
            line, col = self.s.location(kw_tok.start)
            raise ArityError(line, col, "delete", 5, len(fields))
        return Delete(*(f for f, _ in fields))

    def _edit(self, kw_tok):
        fields = self._fields()
        if len(fields) != 7:
            line, col = self.s.location(kw_tok.start)
            raise ArityError(line, col, "edit", 7, len(fields))
        for value, tok in fields[5:]:
            if value == WILDCARD:
                raise self.s.error(tok.start, "a concrete new type/value")
        return Edit(*(f for f, _ in fields))


# -- public parsing API -----------------------------------------------------

def parse_statements(text: str) -> list:
    """Parse any mix of data-rule and flow-rule statements, in order."""
    return _Parser(text).statements()


def _split(text: str):
    parser = _Parser(text)
    data, flow = [], []
    while parser.s.peek().kind != "eof":
        start = parser.s.peek().start
        st = parser.statement()
        (data if isinstance(st, (AttributeDecl, ObligationDecl)) else flow).append((st, start))
    return parser, data, flow


def parse_data_rules(text: str) -> list:
    parser, data, flow = _split(text)
    if flow:
        raise parser.s.error(flow[0][1], "attribute or obligation statement", "flow rule")
    return [st for st, _ in data]


def parse_flow_rules(text: str) -> FlowRuleSet:
    parser, data, flow = _split(text)
    if data:
        raise parser.s.error(data[0][1], "pr, edit or delete statement", "data rule")
    props = tuple(st for st, _ in flow if isinstance(st, Propagate))
    refinements = tuple(st for st, _ in flow if not isinstance(st, Propagate))
    return FlowRuleSet(props, refinements)


def parse_rule_set(text: str) -> DataRuleSet:
    return resolve_rule_set(parse_data_rules(text))


# -- serialization ----------------------------------------------------------

def quote(text: str) -> str:
    escaped = (text.replace("\\", "\\\\").replace('"', '\\"')
               .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{escaped}"'


def _bare_or_quoted(text: str) -> str:
    if text == WILDCARD:
        return WILDCARD
    if is_identifier(text) and text.lower() not in RESERVED:
        return text
    return quote(text)


def format_attribute(attr) -> str:
    return f"attribute({attr.name}, {attr.value_type} {quote(attr.value)})"


def format_condition(cond: Condition) -> str:
    def child(c):
        text = format_condition(c)
        return f"({text})" if isinstance(c, (And, Or)) else text

    if isinstance(cond, Null):
        return "null"
    if isinstance(cond, Compare):
        return f"{cond.slot} {cond.op} {_bare_or_quoted(cond.operand)}"
    if isinstance(cond, Not):
        if isinstance(cond.item, Null):
            raise ValueError("null cannot be nested")
        return "not " + child(cond.item)
    if isinstance(cond, (And, Or)):
        if any(isinstance(c, Null) for c in cond.items):
            raise ValueError("null cannot be nested")
        joiner = " and " if isinstance(cond, And) else " or "
        return joiner.join(child(c) for c in cond.items)
    raise TypeError(f"not a condition: {cond!r}")


def _format_obligation(ob, ambiguous: set) -> str:
    def ref(a):
        if a.name in ambiguous:
            return f"{a.name}({a.value_type} {quote(a.value)})"
        return a.name

    head = " ".join([ob.action_class] + [ref(a) for a in ob.args])
    validity = ", ".join(ref(a) for a in sorted(ob.validity))
    return f"obligation({head}, [{validity}], {format_condition(ob.condition)})"


def _format_refinement(r) -> str:
    ports = f"{_bare_or_quoted(r.in_port)}, {_bare_or_quoted(r.out_port)}"
    value = WILDCARD if r.value == WILDCARD else quote(r.value)
    filt = f"{_bare_or_quoted(r.name)}, {_bare_or_quoted(r.value_type)}, {value}"
    if isinstance(r, Delete):
        return f"delete({ports}, {filt})"
    return f"edit({ports}, {filt}, {_bare_or_quoted(r.new_type)}, {quote(r.new_value)})"


def _format_propagate(p) -> str:
    outs = [_bare_or_quoted(o) for o in p.out_ports]
    target = outs[0] if len(outs) == 1 else "[" + ", ".join(outs) + "]"
    return f"pr({_bare_or_quoted(p.in_port)}, {target})"


def serialize(rules: Union[DataRuleSet, FlowRuleSet]) -> str:
    """Canonical text: lowercase keywords, one statement per line."""
    if isinstance(rules, DataRuleSet):
        names = [a.name for a in rules.attributes]
        ambiguous = {n for n in names if names.count(n) > 1}
        lines = [format_attribute(a) for a in rules.attributes]
        lines += [_format_obligation(ob, ambiguous) for ob in rules.obligations]
    elif isinstance(rules, FlowRuleSet):
        lines = [_format_propagate(p) for p in rules.propagates]
        lines += [_format_refinement(r) for r in rules.refinements]
    else:
        raise TypeError(f"cannot serialize {type(rules).__name__}")
    return "".join(line + "\n" for line in lines)
