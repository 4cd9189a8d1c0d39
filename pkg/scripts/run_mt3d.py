"""Chain the three MT3D traces through a shared rule database and obligation store.

Usage: python scripts/run_mt3d.py [STORE.jsonl]
"""

import json
import sys
from pathlib import Path

from rulegraph.graph import PortRef
from rulegraph.pipeline import RunConfig, load_graph_file, run
from rulegraph.recognizer import RuleDatabase
from rulegraph.store import ObligationStore

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

STEPS = [
    ("mt3d_specfem", RunConfig("mt3d_specfem", write_back={
        PortRef("specfem", "synthetics"): "mt3d:synthetics",
        PortRef("download", "observed"): "mt3d:observed"})),
    ("mt3d_preproc", RunConfig("mt3d_preproc", write_back={
        PortRef("preproc", "processed"): "mt3d:processed"})),
    ("mt3d_pyflex", RunConfig("mt3d_pyflex", inject_publish=(PortRef("pyflex", "windows"),))),
]


def main(argv):
    store = ObligationStore(argv[0] if argv else None)
    db = RuleDatabase.from_document(json.loads((SCENARIOS / "mt3d.rules.json").read_text()))
    for name, config in STEPS:
        db = run(load_graph_file(SCENARIOS / f"{name}.graph.json"), config, db, store).db
    for row in store.list():
        a = row.activation
        print(f"{row.graph:14} {a.process:16} {a.action_class:12} {a.args[0].name}")


if __name__ == "__main__":
    main(sys.argv[1:])
