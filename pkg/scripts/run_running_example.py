"""Reason over the single-process running example and print the outputs."""

from pathlib import Path

from rulegraph.notation import serialize
from rulegraph.pipeline import load_graph_file, run

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def main():
    outcome = run(load_graph_file(SCENARIOS / "running_example.graph.json"))
    for port, rules in outcome.result.output_rules.items():
        print(f"# {port}")
        print(serialize(rules))
    for act in outcome.result.activations:
        print(f"activated {act.action_class} at {act.process} (stage={act.stage})")


if __name__ == "__main__":
    main()
