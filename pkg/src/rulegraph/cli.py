"""Command-line interface.

Exit codes: 0 ok, 1 usage, 2 input error, 3 internal error, 4 a Prohibited
obligation was activated during ``reason``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import RuleGraphError
from .graph import OUT, PortRef, export_dot, load_graph
from .model import resolve_rule_set
from .notation import parse_statements
from .pipeline import RunConfig, run
from .recognizer import RuleDatabase
from .statements import AttributeDecl, ObligationDecl
from .store import ObligationStore

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL, EXIT_VIOLATION = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _port_arg(text: str) -> PortRef:
    proc, sep, port = text.rpartition(":")
    if not sep or not proc or not port:
        raise UsageError(f"expected PROCESS:PORT, got {text!r}")
    return PortRef(proc, port, OUT)


def _mapping_arg(text: str) -> tuple[PortRef, str]:
    ref, sep, data_id = text.partition("=")
    if not sep or not data_id:
        raise UsageError(f"expected PROCESS:PORT=DATA_ID, got {text!r}")
    return _port_arg(ref), data_id


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rulegraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log lints and progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("reason", help="derive output rules and activated obligations")
    r.add_argument("graph")
    r.add_argument("--rules", help="rule database (JSON)")
    r.add_argument("--store", help="obligation store (JSON lines) to append activations to")
    r.add_argument("--purpose")
    r.add_argument("--user")
    r.add_argument("--start-time")
    r.add_argument("--inject-publish", nargs="+", metavar="PROC:PORT", default=[],
                   help="attach a virtual publish process to these output ports")
    r.add_argument("--write-back", nargs="+", metavar="PROC:PORT=ID", default=[],
                   help="store derived rules of output ports in the rule database")
    r.add_argument("--out", help="result document path (default: stdout)")
    r.add_argument("--dot", help="write a DOT rendering with derived rules")
    r.add_argument("--graph-id", help="graph name recorded in the store (default: file stem)")

    v = sub.add_parser("validate", help="parse a rules file and report diagnostics")
    v.add_argument("rules_file")

    o = sub.add_parser("obligations", help="list recorded activations")
    o.add_argument("store")
    o.add_argument("--dedup", action="store_true")
    o.add_argument("--violations-only", action="store_true")
    o.add_argument("--process")
    o.add_argument("--action")
    o.add_argument("--json", action="store_true", help="emit JSON lines instead of a table")

    d = sub.add_parser("export-dot", help="render a graph as DOT")
    d.add_argument("graph")
    d.add_argument("--out")
    return parser


def _emit(text: str, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_reason(args) -> int:
    if args.write_back and not args.rules:
        raise UsageError("--write-back needs --rules")
    config = RunConfig(
        graph_id=args.graph_id or Path(args.graph).name.split(".")[0],
        purpose=args.purpose, user=args.user, start_time=args.start_time,
        inject_publish=tuple(_port_arg(t) for t in args.inject_publish),
        write_back=dict(_mapping_arg(t) for t in args.write_back),
    )
    graph = load_graph(_read_json(args.graph))
    db = RuleDatabase.load(args.rules) if args.rules else None
    store = ObligationStore(args.store) if args.store else None
    outcome = run(graph, config, db, store)
    if config.write_back:
        outcome.db.save(args.rules)
    _emit(outcome.result_json(), args.out)
    if args.dot:
        Path(args.dot).write_text(outcome.dot(), encoding="utf-8")
    if outcome.result.violations:
        for v in outcome.result.violations:
            print(f"violation: Prohibited at {v.process}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_validate(args) -> int:
    text = Path(args.rules_file).read_text(encoding="utf-8")
    statements = parse_statements(text)
    data = [s for s in statements if isinstance(s, (AttributeDecl, ObligationDecl))]
    if data and len(data) != len(statements):
        raise InputError("a rules file holds either data rules or flow rules, not both")
    if data:
        resolve_rule_set(data)
    print(f"{len(statements)} statements")
    return EXIT_OK


def _format_table(rows) -> str:
    header = ("graph", "process", "action", "args", "stage", "violation")
    body = [(r.graph, r.activation.process, r.activation.action_class,
             ", ".join(a.name for a in r.activation.args),
             r.activation.stage or "", "yes" if r.activation.violation else "")
            for r in rows]
    widths = [max(len(str(row[i])) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in [header] + body]
    return "\n".join(lines) + "\n"


def cmd_obligations(args) -> int:
    if not Path(args.store).exists():
        raise InputError(f"{args.store}: no such store")
    rows = ObligationStore(args.store).list(process=args.process, action_class=args.action,
                                            violations_only=args.violations_only, dedup=args.dedup)
    if args.json:
        sys.stdout.write("".join(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
                                 for r in rows))
    else:
        sys.stdout.write(_format_table(rows))
    return EXIT_OK


def cmd_export_dot(args) -> int:
    _emit(export_dot(load_graph(_read_json(args.graph))), args.out)
    return EXIT_OK


COMMANDS = {
    "reason": cmd_reason,
    "validate": cmd_validate,
    "obligations": cmd_obligations,
    "export-dot": cmd_export_dot,
}


def _fail(code: int, kind: str, detail: str) -> int:
    print(f"error: {kind}: {detail}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", str(exc))
    except RuleGraphError as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc))
    except (InputError, OSError) as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc))
    except Exception as exc:  # noqa: BLE001
        return _fail(EXIT_INTERNAL, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
