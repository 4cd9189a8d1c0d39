"""One reasoning run: annotate, inject publish, reason, record, write back."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .graph import DataFlowGraph, export_dot, inject_virtual_process, load_graph
from .model import EvaluationContext
from .reasoner import ReasoningResult, reason
from .recognizer import RuleDatabase, annotate, write_back
from .store import ObligationStore


@dataclass(frozen=True)
class RunConfig:
    graph_id: str = ""
    purpose: Optional[str] = None
    user: Optional[str] = None
    start_time: Optional[str] = None
    inject_publish: tuple = ()                     # output PortRefs feeding a virtual publish
    write_back: dict = field(default_factory=dict)  # output PortRef -> data id

    def overrides(self) -> EvaluationContext:
        return EvaluationContext(purpose=self.purpose, user=self.user, start_time=self.start_time)


@dataclass
class RunOutcome:
    graph: DataFlowGraph
    result: ReasoningResult
    db: Optional[RuleDatabase]

    def result_json(self) -> str:
        return json.dumps(self.result.to_document(), indent=2, ensure_ascii=False) + "\n"

    def dot(self) -> str:
        return export_dot(self.graph, self.result)


def run(graph: DataFlowGraph, config: RunConfig = RunConfig(), db: Optional[RuleDatabase] = None,
        store: Optional[ObligationStore] = None) -> RunOutcome:
    if db is not None:
        graph = annotate(graph, db)
    if config.inject_publish:
        graph = inject_virtual_process(graph, "publish", config.inject_publish)
    result = reason(graph, config.overrides())
    if store is not None:
        store.record(result.activations, config.graph_id)
    if config.write_back:
        if db is None:
            raise ValueError("write-back needs a rule database")
        db = write_back(result, config.write_back, db)
    return RunOutcome(graph, result, db)


def load_graph_file(path) -> DataFlowGraph:
    return load_graph(json.loads(Path(path).read_text(encoding="utf-8")))
