import json
from pathlib import Path

import pytest

from rulegraph.pipeline import load_graph_file

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
CORPUS = ROOT / "corpus"

RUNNING_RULES = (
    'attribute(pf, column "DoB")\n'
    'attribute(ru, url "report.example.ac")\n'
    "obligation(report ru, [pf], action = *)\n"
)
RUNNING_FLOW = (
    "pr(input1, [output1, output2])\n"
    'delete(input1, output1, *, column, "DoB")\n'
    'edit(input1, output2, *, column, "DoB", column, "YroB")\n'
)


@pytest.fixture
def running_graph():
    return load_graph_file(SCENARIOS / "running_example.graph.json")


@pytest.fixture
def scenario_doc():
    def load(name):
        return json.loads((SCENARIOS / name).read_text(encoding="utf-8"))
    return load


# -- acceptance summary ---------------------------------------------------

_acceptance: dict[int, list] = {}
_markers: dict[str, tuple] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test establishes")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = _markers.get(report.nodeid)
    if marker:
        number, title = marker
        _acceptance.setdefault(number, [title, True])
        _acceptance[number][1] &= report.passed


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _markers[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
