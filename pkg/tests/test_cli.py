import json
import shutil

from conftest import SCENARIOS

from rulegraph.cli import main


def test_reason_running_example(tmp_path, capsys):
    out = tmp_path / "result.json"
    code = main(["reason", str(SCENARIOS / "running_example.graph.json"), "--out", str(out),
                 "--dot", str(tmp_path / "g.dot")])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["outputs"][0]["rules"] == 'attribute(ru, url "report.example.ac")\n'
    assert (tmp_path / "g.dot").read_text().startswith("digraph G {")
    assert capsys.readouterr().out == ""


def test_reason_with_db_and_publish(tmp_path):
    db = tmp_path / "db.json"
    db.write_text(json.dumps({"process": [], "data": []}))
    code = main(["reason", str(SCENARIOS / "running_example.graph.json"), "--rules", str(db),
                 "--inject-publish", "P1:output2", "--out", str(tmp_path / "r.json")])
    assert code == 0
    acts = json.loads((tmp_path / "r.json").read_text())["activations"]
    assert {a["process"] for a in acts} == {"P1", "virtual:publish"}


def test_reason_in_memory_writes_nothing(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["reason", str(SCENARIOS / "running_example.graph.json")]) == 0
    assert list(tmp_path.iterdir()) == []
    assert json.loads(capsys.readouterr().out)["activations"]


def test_validate(tmp_path, capsys):
    empty = tmp_path / "empty.rules"
    empty.write_text("")
    assert main(["validate", str(empty)]) == 0
    assert capsys.readouterr().out.strip() == "0 statements"
    bad = tmp_path / "bad.rules"
    bad.write_text("attribute(x")
    assert main(["validate", str(bad)]) == 2
    assert capsys.readouterr().err.startswith("error: RuleSyntaxError:")
    dangling = tmp_path / "dangling.rules"
    dangling.write_text("obligation(report ru, [], action = *)")
    assert main(["validate", str(dangling)]) == 2


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["reason", "g.json", "--inject-publish", "nocolon"]) == 1
    assert "UsageError" in capsys.readouterr().err


def test_missing_file():
    assert main(["reason", "/nonexistent/graph.json"]) == 2


def test_violation_exit_code(tmp_path):
    graph = {"processes": [{"id": "A", "action": "publish", "inputs": ["i"], "outputs": []}],
             "initialRules": [{"process": "A", "port": "i",
                               "rules": 'attribute(c, url "x")\nobligation(Prohibited, [c], action = publish)'}]}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(graph))
    assert main(["reason", str(path), "--out", str(tmp_path / "r.json")]) == 4
    assert (tmp_path / "r.json").exists()


def test_obligations_dedup(tmp_path, capsys):
    store = tmp_path / "store.jsonl"
    db = tmp_path / "db.json"
    shutil.copy(SCENARIOS / "cyclone.rules.json", db)
    main(["reason", str(SCENARIOS / "cyclone.graph.json"), "--rules", str(db), "--store", str(store),
          "--inject-publish", "combine:distribution", "--out", str(tmp_path / "r.json")])
    capsys.readouterr()
    assert main(["obligations", str(store), "--json"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 10
    assert main(["obligations", str(store), "--dedup", "--json"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 6
    assert main(["obligations", str(store), "--violations-only"]) == 0
    assert capsys.readouterr().out.splitlines()[0].split()[:2] == ["graph", "process"]


def test_export_dot(tmp_path):
    out = tmp_path / "g.dot"
    assert main(["export-dot", str(SCENARIOS / "cyclone.graph.json"), "--out", str(out)]) == 0
    assert out.read_text().count('" -> "') == 6
