"""HTTP facade for human annotation: a pending-query queue, annotation
submission with full validation, and experiment status, all backed by an
append-only event log that restores state on restart.

The training loop pushes query batches and polls for resolutions; the
browser UI (or any client) lists pending queries and posts annotations.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from . import mrlang, supervision
from .dataset import Dataset, Example, load_corpus


@dataclass
class QueueState:
    """Thread-safe annotation queue with event-log persistence."""

    log_path: Optional[Path] = None
    queries: dict[str, dict] = field(default_factory=dict)
    resolutions: dict[str, dict] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    status: dict = field(
        default_factory=lambda: {
            "state": "idle",
            "iteration": 0,
            "pending_count": 0,
            "accuracies": None,
        }
    )
    lock: threading.Lock = field(default_factory=threading.Lock)

    def _append_event(self, event: dict) -> None:
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(event, sort_keys=True) + "\n")

    def post_batch(self, queries: list[dict]) -> None:
        with self.lock:
            for query in queries:
                qid = query["query_id"]
                if qid in self.queries:
                    continue
                self.queries[qid] = query
                self.order.append(qid)
                self._append_event({"event": "query", "query": query})
            self.status["pending_count"] = len(self.pending_ids_locked())

    def pending_ids_locked(self) -> list[str]:
        return [qid for qid in self.order if qid not in self.resolutions]

    def pending(self) -> list[dict]:
        with self.lock:
            return [self.queries[qid] for qid in self.pending_ids_locked()]

    def resolve(self, query_id: str, annotation: dict) -> None:
        """Record a validated annotation; exactly-once per query."""
        with self.lock:
            if query_id not in self.queries:
                raise KeyError(query_id)
            if query_id in self.resolutions:
                raise FileExistsError(query_id)
            self.resolutions[query_id] = annotation
            self._append_event(
                {"event": "resolution", "query_id": query_id, "annotation": annotation}
            )
            self.status["pending_count"] = len(self.pending_ids_locked())

    def set_status(self, **fields) -> None:
        with self.lock:
            self.status.update(fields)
            self.status["pending_count"] = len(self.pending_ids_locked())

    def snapshot_status(self) -> dict:
        with self.lock:
            return dict(self.status)

    def snapshot_resolutions(self) -> dict[str, dict]:
        with self.lock:
            return dict(self.resolutions)

    @classmethod
    def restore(cls, log_path: Path | str) -> "QueueState":
        state = cls(log_path=Path(log_path))
        if state.log_path.exists():
            with open(state.log_path, encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    if event["event"] == "query":
                        query = event["query"]
                        if query["query_id"] not in state.queries:
                            state.queries[query["query_id"]] = query
                            state.order.append(query["query_id"])
                    elif event["event"] == "resolution":
                        state.resolutions[event["query_id"]] = event["annotation"]
        state.status["pending_count"] = len(state.pending_ids_locked())
        return state


def _parse_annotation_payload(body: dict) -> supervision.Annotation:
    kind = body.get("kind")
    payload = body.get("payload", "")
    example_id = body.get("example_id", "")
    if kind == supervision.FULL_MR:
        program = mrlang.parse_program(payload)
        return supervision.Annotation(example_id, kind, program=program, annotator="human")
    if kind == supervision.SKETCH:
        sketch = mrlang.parse_sketch(payload)
        return supervision.Annotation(example_id, kind, sketch=sketch, annotator="human")
    raise mrlang.MalformedSyntax(f"unknown annotation kind {kind!r}")


def build_app(
    state: QueueState,
    train_ds: Optional[Dataset] = None,
    static_dir: Optional[Path] = None,
) -> FastAPI:
    """Wire the queue into HTTP endpoints. When a training dataset is
    given, submissions are validated against the example's table and
    answer before acceptance."""
    app = FastAPI(title="annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    examples_by_id: dict[str, Example] = (
        {ex.id: ex for ex in train_ds.examples} if train_ds else {}
    )

    @app.get("/api/queries/pending")
    def pending() -> dict:
        return {"queries": state.pending()}

    @app.post("/api/queries/batch")
    def post_batch(body: dict) -> dict:
        queries = body.get("queries", [])
        state.post_batch(queries)
        return {"accepted": len(queries)}

    @app.get("/api/queries/resolutions")
    def resolutions() -> dict:
        return {"resolutions": state.snapshot_resolutions()}

    @app.post("/api/queries/{query_id}/annotation")
    def annotate(query_id: str, body: dict):
        with state.lock:
            query = state.queries.get(query_id)
            already = query_id in state.resolutions
        if query is None:
            raise HTTPException(status_code=404, detail=f"unknown query {query_id}")
        if already:
            raise HTTPException(status_code=409, detail="query already resolved")
        try:
            annotation = _parse_annotation_payload(body)
        except mrlang.MRError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if annotation.example_id != query["example_id"]:
            raise HTTPException(
                status_code=422,
                detail=f"annotation is for {annotation.example_id}, query is for {query['example_id']}",
            )
        if annotation.kind not in query.get("allowed_kinds", [annotation.kind]):
            raise HTTPException(
                status_code=422, detail=f"this query accepts {query['allowed_kinds']}"
            )
        example = examples_by_id.get(annotation.example_id)
        if example is not None and train_ds is not None:
            reason = supervision.validate_annotation(
                annotation, example, train_ds.env(example)
            )
            if reason is not None:
                raise HTTPException(status_code=422, detail=reason)
        try:
            state.resolve(query_id, annotation.to_json())
        except FileExistsError:
            raise HTTPException(status_code=409, detail="query already resolved")
        return {"status": "resolved", "query_id": query_id}

    @app.get("/api/experiment/status")
    def status() -> dict:
        return state.snapshot_status()

    @app.post("/api/experiment/status")
    def set_status(body: dict) -> dict:
        state.set_status(**body)
        return state.snapshot_status()

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


class ServiceStatusSink:
    """Lets the in-process training loop publish its state to the queue."""

    def __init__(self, state: QueueState):
        self.state = state

    def update(self, **fields) -> None:
        self.state.set_status(**fields)
