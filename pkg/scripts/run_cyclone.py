"""Cyclone tracking over three ensemble members, published at the end."""

import json
from pathlib import Path

from rulegraph.graph import PortRef
from rulegraph.pipeline import RunConfig, load_graph_file, run
from rulegraph.recognizer import RuleDatabase
from rulegraph.store import ObligationStore

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def main():
    db = RuleDatabase.from_document(json.loads((SCENARIOS / "cyclone.rules.json").read_text()))
    store = ObligationStore()
    config = RunConfig("cyclone", inject_publish=(PortRef("combine", "distribution"),))
    run(load_graph_file(SCENARIOS / "cyclone.graph.json"), config, db, store)
    for row in store.list():
        a = row.activation
        print(f"{a.process:16} {a.action_class:12} {a.args[0].name:36} {a.stage or '-'}")
    print(f"{len(store.list())} activations, {len(store.list(dedup=True))} distinct")


if __name__ == "__main__":
    main()
