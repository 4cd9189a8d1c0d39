"""Append-only obligation store backed by a JSON-lines file (or memory)."""

from __future__ import annotations

import fcntl
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .reasoner import ActivatedObligation


@dataclass(frozen=True)
class StoredActivation:
    graph: str
    activation: ActivatedObligation
    recorded_at: str

    def to_dict(self) -> dict:
        doc = {"graph": self.graph}
        doc.update(self.activation.to_dict())
        doc["recordedAt"] = self.recorded_at
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "StoredActivation":
        return cls(doc.get("graph", ""), ActivatedObligation.from_dict(doc), doc.get("recordedAt", ""))

    def dedup_key(self) -> tuple:
        a = self.activation
        return (a.action_class, a.args, a.validity, a.stage, a.violation)


class ObligationStore:
    """Records activations in insertion order. ``path=None`` keeps them in memory."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self._memory: list[StoredActivation] = []

    def record(self, activations: Iterable[ActivatedObligation], graph: str = "",
               recorded_at: Optional[str] = None) -> list[StoredActivation]:
        stamp = recorded_at or datetime.now(timezone.utc).isoformat(timespec="seconds")
        rows = [StoredActivation(graph, a, stamp) for a in activations]
        if self.path is None:
            self._memory.extend(rows)
            return rows
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                for row in rows:
                    fh.write(json.dumps(row.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)
        return rows

    def _all(self) -> list[StoredActivation]:
        if self.path is None:
            return list(self._memory)
        if not self.path.exists():
            return []
        with open(self.path, encoding="utf-8") as fh:
            fcntl.flock(fh, fcntl.LOCK_SH)
            try:
                lines = fh.read().splitlines()
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)
        return [StoredActivation.from_dict(json.loads(line)) for line in lines if line.strip()]

    def list(self, process: Optional[str] = None, action_class: Optional[str] = None,
             violations_only: bool = False, dedup: bool = False) -> list[StoredActivation]:
        rows = self._all()
        if process is not None:
            rows = [r for r in rows if r.activation.process == process]
        if action_class is not None:
            rows = [r for r in rows if r.activation.action_class == action_class]
        if violations_only:
            rows = [r for r in rows if r.activation.violation]
        if dedup:
            seen, unique = set(), []
            for r in rows:
                if r.dedup_key() not in seen:
                    seen.add(r.dedup_key())
                    unique.append(r)
            rows = unique
        return rows
