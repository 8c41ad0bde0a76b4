"""Run trace: JSONL event log plus an in-memory warning list.

Every pipeline step appends structured records here; one file per run. The
log doubles as the raw material for offline inspection of prompts, model
responses, and per-cycle reasoning records.
"""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path


class TraceLog:
    """Collects warnings and writes JSONL event records.

    With ``path=None`` the log is memory-only, which is what unit tests and
    throwaway runs use.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.warnings: list[str] = []
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            # Truncate any previous run at the same path.
            self.path.write_text("", encoding="utf-8")

    def warn(self, message: str, **fields) -> None:
        with self._lock:
            self.warnings.append(message)
        self.record("warning", message=message, **fields)

    def record(self, kind: str, **fields) -> None:
        entry = {"ts": time.time(), "kind": kind, **fields}
        with self._lock:
            self.records.append(entry)
            if self.path:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False, default=str) + "\n")


def ensure_trace(trace: TraceLog | None) -> TraceLog:
    """Return the given trace or a fresh memory-only one."""
    return trace if trace is not None else TraceLog()
