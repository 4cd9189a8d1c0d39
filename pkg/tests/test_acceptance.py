"""The eight acceptance criteria. A PASS/FAIL line per criterion is printed in the terminal summary."""

import json
import shutil
import time
from collections import Counter
from dataclasses import replace

import pytest
from conftest import CORPUS, SCENARIOS
from hypothesis import given, settings
from hypothesis import strategies as st
from strategies import conditions, contexts, graphs, rule_sets

from rulegraph.cli import main
from rulegraph.graph import PortRef
from rulegraph.model import eval_condition, merge_rule_sets
from rulegraph.notation import parse_flow_rules, parse_rule_set, serialize
from rulegraph.oracle import oracle_reason
from rulegraph.pipeline import RunConfig, load_graph_file, run
from rulegraph.reasoner import ActivatedObligation, explicit_default_rules, reason
from rulegraph.recognizer import RuleDatabase
from rulegraph.statements import Delete, Edit
from rulegraph.store import ObligationStore

criterion = pytest.mark.criterion

RUNNING_OUTPUTS = {
    "output1": 'attribute(ru, url "report.example.ac")\n',
    "output2": ('attribute(pf, column "YroB")\n'
                'attribute(ru, url "report.example.ac")\n'
                "obligation(report ru, [pf], action = *)\n"),
}

CMIP6_IMPORT = {"CMIP6_GMD_special_issue", "CMIP6_output"}
CMIP6_PUBLISH = {"CMIP6_acknowledge", "CMIP6_model_provider_instruction", "CMIP6_report_url",
                 "CMIP6_refer_instruction"}
MT3D_PUBLISH = {"INGV", "CC_BY_4", "AC_network", "ORFEUS_EIDA"}

G1_WRITE_BACK = {PortRef("specfem", "synthetics"): "mt3d:synthetics",
                 PortRef("download", "observed"): "mt3d:observed"}


def timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


def arg_name(activation):
    return activation.args[0].name


def load_db(name):
    return RuleDatabase.from_document(json.loads((SCENARIOS / name).read_text(encoding="utf-8")))


# -- 1 ----------------------------------------------------------------------

@criterion(1, "running example reproduces the expected outputs and activation")
def test_running_example_exact():
    g = load_graph_file(SCENARIOS / "running_example.graph.json")
    result, elapsed = timed(lambda: reason(g))
    assert {p.port_name: serialize(rs) for p, rs in result.output_rules.items()} == RUNNING_OUTPUTS
    [act] = result.activations
    assert act.to_dict() == {
        "process": "P1", "action": "report",
        "args": [{"name": "ru", "type": "url", "value": "report.example.ac"}],
        "validity": [{"name": "pf", "type": "column", "value": "DoB"}],
        "stage": "import", "violation": False,
    }
    assert elapsed < 1.0


@criterion(1, "running example reproduces the expected outputs and activation")
def test_running_example_oracle_agrees():
    g = load_graph_file(SCENARIOS / "running_example.graph.json")
    o = oracle_reason(g)
    assert {p.port_name: serialize(rs) for p, rs in o.output_rules.items()} == RUNNING_OUTPUTS
    assert Counter(o.activations) == Counter(reason(g).activations)


# -- 2 ----------------------------------------------------------------------

@criterion(2, "dangling attribute is kept after its obligation is deleted")
def test_dangling_attribute_retained():
    g = load_graph_file(SCENARIOS / "running_example.graph.json")
    out1 = reason(g).output_rules[PortRef("P1", "output1")]
    assert [a.name for a in out1.attributes] == ["ru"]
    assert out1.obligations == ()
    assert serialize(out1) == RUNNING_OUTPUTS["output1"]


# -- 3 ----------------------------------------------------------------------

@criterion(3, "cyclone tracking: imports fire per branch, publish fires once at the sink")
def test_cyclone_activation_counts():
    g = load_graph_file(SCENARIOS / "cyclone.graph.json")
    cfg = RunConfig("cyclone", inject_publish=(PortRef("combine", "distribution"),))
    store = ObligationStore()
    outcome, elapsed = timed(lambda: run(g, cfg, load_db("cyclone.rules.json"), store))
    acts = outcome.result.activations

    imports = Counter(arg_name(a) for a in acts if a.stage == "import")
    assert imports == {name: 3 for name in CMIP6_IMPORT}
    assert {a.process for a in acts if a.stage == "import"} == {"select_1", "select_2", "select_3"}

    publish = [a for a in acts if arg_name(a) in CMIP6_PUBLISH]
    assert Counter(arg_name(a) for a in publish) == {name: 1 for name in CMIP6_PUBLISH}
    assert {a.process for a in publish} == {"virtual:publish"}

    assert len(store.list()) == 10 and len(store.list(dedup=True)) == 6
    assert elapsed < 1.0


# -- 4 ----------------------------------------------------------------------

def mt3d_g1_g2(db, store=None):
    g1 = run(load_graph_file(SCENARIOS / "mt3d_specfem.graph.json"),
             RunConfig("mt3d_specfem", write_back=G1_WRITE_BACK), db, store)
    g2 = run(load_graph_file(SCENARIOS / "mt3d_preproc.graph.json"),
             RunConfig("mt3d_preproc", inject_publish=(PortRef("preproc", "processed"),)), g1.db, store)
    return g1, g2


@criterion(4, "MT3D chain: publish obligations fire only in the graph that publishes")
def test_mt3d_publish_only_in_second_graph():
    (g1, g2), elapsed = timed(lambda: mt3d_g1_g2(load_db("mt3d.rules.json")))
    assert [arg_name(a) for a in g1.result.activations if arg_name(a) in MT3D_PUBLISH] == []
    publish = [a for a in g2.result.activations if arg_name(a) in MT3D_PUBLISH]
    assert Counter(arg_name(a) for a in publish) == {name: 1 for name in MT3D_PUBLISH}
    assert {a.process for a in publish} == {"virtual:publish"}
    # the personal communication obligation is an import in both graphs
    assert [(a.process, a.stage) for a in g1.result.activations] == [("specfem", "import")]
    assert ("preproc", "import") in [(a.process, a.stage) for a in g2.result.activations]
    assert elapsed < 1.0


@criterion(4, "MT3D chain: publish obligations fire only in the graph that publishes")
def test_mt3d_three_graph_chain_store():
    store = ObligationStore()
    db = run(load_graph_file(SCENARIOS / "mt3d_specfem.graph.json"),
             RunConfig("mt3d_specfem", write_back=G1_WRITE_BACK), load_db("mt3d.rules.json"), store).db
    db = run(load_graph_file(SCENARIOS / "mt3d_preproc.graph.json"),
             RunConfig("mt3d_preproc", write_back={PortRef("preproc", "processed"): "mt3d:processed"}),
             db, store).db
    run(load_graph_file(SCENARIOS / "mt3d_pyflex.graph.json"),
        RunConfig("mt3d_pyflex", inject_publish=(PortRef("pyflex", "windows"),)), db, store)
    rows = [(r.graph, r.activation.process, arg_name(r.activation)) for r in store.list()]
    assert rows == [
        ("mt3d_specfem", "specfem", "fed_literature"),
        ("mt3d_preproc", "preproc", "fed_literature"),
        ("mt3d_pyflex", "pyflex", "fed_literature"),
        ("mt3d_pyflex", "virtual:publish", "INGV"),
        ("mt3d_pyflex", "virtual:publish", "CC_BY_4"),
        ("mt3d_pyflex", "virtual:publish", "AC_network"),
        ("mt3d_pyflex", "virtual:publish", "ORFEUS_EIDA"),
    ]


# -- 5 ----------------------------------------------------------------------

RULE_FILES = sorted(CORPUS.glob("*.rules"))
FLOW_FILES = sorted(CORPUS.glob("*.flow"))


@criterion(5, "every corpus document parses and round-trips")
@pytest.mark.parametrize("path", RULE_FILES + FLOW_FILES, ids=lambda p: p.name)
def test_corpus_round_trip(path):
    parse = parse_flow_rules if path.suffix == ".flow" else parse_rule_set
    parsed = parse(path.read_text(encoding="utf-8"))
    text = serialize(parsed)
    assert parse(text) == parsed
    assert serialize(parse(text)) == text


@criterion(5, "every corpus document parses and round-trips")
def test_corpus_covers_every_source():
    sources = {p.stem for p in RULE_FILES} - {"running_example", "cc_by_namespaced"}
    assert len(sources) == 16
    assert all(parse_rule_set(p.read_text(encoding="utf-8")).obligations for p in RULE_FILES)


# -- 6 ----------------------------------------------------------------------

ORACLE_EXAMPLES = 1000
_oracle_calls = Counter()


@settings(max_examples=ORACLE_EXAMPLES, deadline=None, database=None)
@given(graphs(), st.none() | contexts)
def _check_oracle(g, overrides):
    _oracle_calls["n"] += 1
    fast, slow = reason(g, overrides), oracle_reason(g, overrides)
    assert fast.output_rules == slow.output_rules
    assert Counter(fast.activations) == Counter(slow.activations)


@criterion(6, "optimised reasoner matches the situation-calculus oracle")
def test_oracle_equivalence():
    _oracle_calls.clear()
    _, elapsed = timed(_check_oracle)
    assert _oracle_calls["n"] >= ORACLE_EXAMPLES
    assert elapsed < 60.0


# -- 7 ----------------------------------------------------------------------

PROPERTY_EXAMPLES = settings(max_examples=500, deadline=None)


@criterion(7, "algebraic properties")
@PROPERTY_EXAMPLES
@given(rule_sets(), rule_sets(), rule_sets())
def test_merge_is_a_semilattice(a, b, c):
    assert merge_rule_sets([a, a]) == a
    assert merge_rule_sets([a, b]) == merge_rule_sets([b, a])
    assert merge_rule_sets([merge_rule_sets([a, b]), c]) == merge_rule_sets([a, merge_rule_sets([b, c])])


@criterion(7, "algebraic properties")
@PROPERTY_EXAMPLES
@given(conditions, contexts)
def test_condition_evaluation_is_total(cond, ctx):
    assert isinstance(eval_condition(cond, ctx), bool)


@criterion(7, "algebraic properties")
@PROPERTY_EXAMPLES
@given(graphs())
def test_default_propagation_matches_explicit_rules(g):
    implicit, explicit = reason(g), reason(explicit_default_rules(g))
    assert implicit.output_rules == explicit.output_rules
    assert Counter(implicit.activations) == Counter(explicit.activations)


noop_refinements = st.one_of(
    st.builds(Delete, st.just("nowhere"), st.sampled_from(["*", "o0", "nowhere"]),
              st.sampled_from(["*", "pf"]), st.sampled_from(["*", "column"]), st.sampled_from(["*", "DoB"])),
    st.builds(Edit, st.just("nowhere"), st.sampled_from(["*", "o0"]), st.sampled_from(["*", "pf"]),
              st.just("*"), st.just("*"), st.just("str"), st.just("gone")),
)


@criterion(7, "algebraic properties")
@PROPERTY_EXAMPLES
@given(graphs(), noop_refinements)
def test_refinement_on_unknown_port_changes_nothing(g, noop):
    explicit = explicit_default_rules(g)
    patched = replace(explicit, processes=tuple(
        replace(p, flow_rules=replace(p.flow_rules, refinements=p.flow_rules.refinements + (noop,)))
        for p in explicit.processes))
    before, after = reason(explicit), reason(patched)
    assert after.output_rules == before.output_rules
    assert after.activations == before.activations


@st.composite
def activation_batches(draw):
    acts = st.builds(ActivatedObligation, st.sampled_from(["p0", "p1", "virtual:publish"]),
                     st.sampled_from(["Cite", "Acknowledge", "Prohibited"]),
                     st.tuples(), st.just(frozenset()), st.none() | st.just("import"),
                     st.none(), st.booleans())
    return draw(st.lists(st.lists(acts, max_size=5), max_size=4))


@criterion(7, "algebraic properties")
@PROPERTY_EXAMPLES
@given(activation_batches())
def test_dedup_invariants(batches):
    store = ObligationStore()
    previous = set()
    for batch in batches:
        store.record(batch, "g", recorded_at="t")
        rows = store.list()
        unique = store.list(dedup=True)
        keys = [r.dedup_key() for r in unique]
        assert len(keys) == len(set(keys))
        assert set(keys) == {r.dedup_key() for r in rows}
        assert keys == list(dict.fromkeys(r.dedup_key() for r in rows))
        assert previous <= set(keys)
        previous = set(keys)


# -- 8 ----------------------------------------------------------------------

def cli_outputs(tmp, tag):
    """Run the CLI over the criteria 1 to 4 scenarios; return every result and DOT file as bytes."""
    work = tmp / tag
    work.mkdir()
    for name in ("cyclone.rules.json", "mt3d.rules.json"):
        shutil.copy(SCENARIOS / name, work / name)

    def reason_cli(graph, name, *extra):
        code = main(["reason", str(SCENARIOS / graph), "--out", str(work / f"{name}.json"),
                     "--dot", str(work / f"{name}.dot"), *extra])
        assert code == 0

    reason_cli("running_example.graph.json", "running")
    reason_cli("cyclone.graph.json", "cyclone", "--rules", str(work / "cyclone.rules.json"),
               "--inject-publish", "combine:distribution")
    reason_cli("mt3d_specfem.graph.json", "mt3d_g1", "--rules", str(work / "mt3d.rules.json"),
               "--write-back", "specfem:synthetics=mt3d:synthetics", "download:observed=mt3d:observed")
    reason_cli("mt3d_preproc.graph.json", "mt3d_g2", "--rules", str(work / "mt3d.rules.json"),
               "--inject-publish", "preproc:processed")
    files = sorted(p for p in work.iterdir() if p.suffix in (".json", ".dot") and "rules" not in p.name)
    return {p.name: p.read_bytes() for p in files}


@criterion(8, "CLI output is byte-identical across repeated runs")
def test_cli_output_is_reproducible(tmp_path):
    first = cli_outputs(tmp_path, "a")
    second = cli_outputs(tmp_path, "b")
    assert len(first) == 8
    assert first == second
