"""Exception hierarchy. Every error carries a stable class name used by the CLI."""

from __future__ import annotations


class RuleGraphError(Exception):
    """Base class for all errors raised by this package."""


# -- rule model -------------------------------------------------------------

class UnresolvedReference(RuleGraphError):
    def __init__(self, name: str):
        super().__init__(f"obligation references unknown attribute {name!r}")
        self.name = name


class UnknownSlot(RuleGraphError):
    def __init__(self, name: str):
        super().__init__(f"unknown activation-condition slot {name!r}")
        self.name = name


# -- notation ---------------------------------------------------------------

class RuleSyntaxError(RuleGraphError):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        detail = f"line {line}, col {col}: expected {expected}"
        if found:
            detail += f", found {found}"
        super().__init__(detail)
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


class ArityError(RuleSyntaxError):
    def __init__(self, line: int, col: int, keyword: str, expected: int, got: int):
        super().__init__(line, col, f"{expected} arguments to {keyword}", f"{got}")
        self.keyword = keyword
        self.expected_count = expected
        self.got = got


# -- graph ------------------------------------------------------------------

class GraphError(RuleGraphError):
    pass


class CycleDetected(GraphError):
    def __init__(self, path):
        super().__init__("cycle: " + " -> ".join(path))
        self.path = list(path)


class DanglingPort(GraphError):
    def __init__(self, ref):
        super().__init__(f"no such port: {ref}")
        self.ref = ref


class DuplicateId(GraphError):
    def __init__(self, ident: str):
        super().__init__(f"duplicate id: {ident}")
        self.ident = ident


class DuplicatePort(GraphError):
    def __init__(self, ref):
        super().__init__(f"port already exists: {ref}")
        self.ref = ref


class MultipleProducers(GraphError):
    def __init__(self, ref):
        super().__init__(f"input port has more than one producer: {ref}")
        self.ref = ref


class UnknownPort(GraphError):
    def __init__(self, ref):
        super().__init__(f"unknown port: {ref}")
        self.ref = ref


class UnknownProcess(GraphError):
    def __init__(self, ident: str):
        super().__init__(f"unknown process: {ident}")
        self.ident = ident


class GraphFormatError(GraphError):
    pass


# -- recognizer / store -----------------------------------------------------

class RuleDatabaseError(RuleGraphError):
    def __init__(self, section: str, index: int, cause: Exception):
        super().__init__(f"{section}[{index}]: {cause}")
        self.section = section
        self.index = index
        self.cause = cause


class UnknownOutputPort(RuleGraphError):
    def __init__(self, ref):
        super().__init__(f"not a terminal output of the reasoning result: {ref}")
        self.ref = ref
