"""Annotations and how they feed back into training.

A full-program annotation replaces the example's buffer outright and locks
it; a sketch annotation prunes the buffer to sketch-matching programs and
constrains all future search for that example to the sketch.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import executor, mrlang, model as pm
from .dataset import Dataset, Example
from .mrlang import MAX_PROGRAM_LEN, Program, Sketch

FULL_MR = "full_mr"
SKETCH = "sketch"


class NoGoldAvailable(ValueError):
    pass


class AnnotationRejected(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class DuplicateAnnotation(ValueError):
    pass


@dataclass(frozen=True)
class Annotation:
    example_id: str
    kind: str  # FULL_MR | SKETCH
    program: Optional[Program] = None
    sketch: Optional[Sketch] = None
    annotator: str = "oracle"  # "oracle" | "human"
    timestamp: float = 0.0

    def payload_text(self) -> str:
        if self.kind == FULL_MR:
            return mrlang.print_program(self.program)
        return mrlang.print_sketch(self.sketch)

    def to_json(self) -> dict:
        return {
            "example_id": self.example_id,
            "kind": self.kind,
            "payload": self.payload_text(),
            "annotator": self.annotator,
            "timestamp": self.timestamp,
        }


def annotation_from_json(record: dict) -> Annotation:
    kind = record["kind"]
    if kind == FULL_MR:
        program, sketch = mrlang.parse_program(record["payload"]), None
    elif kind == SKETCH:
        program, sketch = None, mrlang.parse_sketch(record["payload"])
    else:
        raise ValueError(f"unknown annotation kind {kind!r}")
    return Annotation(
        example_id=record["example_id"],
        kind=kind,
        program=program,
        sketch=sketch,
        annotator=record.get("annotator", "human"),
        timestamp=record.get("timestamp", 0.0),
    )


def oracle_annotate(example: Example, kind: str, timestamp: Optional[float] = None) -> Annotation:
    """Simulated annotator: answers from the example's hidden gold program."""
    if example.gold_mr is None:
        raise NoGoldAvailable(
            f"example {example.id} has no gold program; use the human annotator"
        )
    ts = time.time() if timestamp is None else timestamp
    if kind == FULL_MR:
        return Annotation(example.id, FULL_MR, program=example.gold_mr, timestamp=ts)
    if kind == SKETCH:
        return Annotation(example.id, SKETCH, sketch=example.gold_sketch, timestamp=ts)
    raise ValueError(f"unknown annotation kind {kind!r}")


def validate_annotation(ann: Annotation, example: Example, env: executor.TableEnv) -> Optional[str]:
    """Reason the annotation must be rejected, or None when it is fine."""
    if ann.example_id != example.id:
        return f"annotation targets {ann.example_id}, not {example.id}"
    if ann.kind == FULL_MR:
        program = ann.program
        try:
            mrlang.validate_program(program)
        except mrlang.MRError as exc:
            return f"invalid program: {exc}"
        for stmt in program.stmts:
            for arg in stmt.args:
                if isinstance(arg, mrlang.ColumnName) and env.column_kind(arg.name) is None:
                    return f"unknown column {arg.name!r} for this table"
        result = executor.execute(program, env)
        if isinstance(result, executor.ExecError):
            return f"program fails to execute ({result.kind} at statement {result.stmt_index})"
        if not executor.answers_match(result, example.answer):
            shown = result if not isinstance(result, executor.RowSet) else "a row set"
            return f"executes to {shown!r}, expected {example.answer!r}"
        gc = executor.grammar_context(env, example.tokens)
        if mrlang.actions_of_program(gc, program) is None:
            return "program uses arguments outside the parser's search space for this question"
        return None
    if ann.kind == SKETCH:
        sketch = ann.sketch
        if sketch is None or not sketch.funcs:
            return "empty sketch"
        if len(sketch.funcs) > MAX_PROGRAM_LEN:
            return f"sketch longer than {MAX_PROGRAM_LEN} statements"
        for func in sketch.funcs:
            if func not in mrlang.SIGNATURES:
                return f"unknown operator {func!r}"
        return None
    return f"unknown annotation kind {ann.kind!r}"


def apply_annotation(
    ann: Annotation,
    dataset: Dataset,
    buffers: pm.MemoryBuffer,
    constraints: dict[str, Sketch],
) -> None:
    """Install an accepted annotation into the training state.

    Full program: the buffer becomes exactly that program and is locked.
    Sketch: mismatching buffer entries are dropped and the sketch becomes a
    decoding constraint for all future search on this example.
    """
    example = next((e for e in dataset.examples if e.id == ann.example_id), None)
    if example is None:
        raise AnnotationRejected(f"unknown example {ann.example_id}")
    reason = validate_annotation(ann, example, dataset.env(example))
    if reason is not None:
        raise AnnotationRejected(reason)
    if ann.kind == FULL_MR:
        buffers.set_only(example.id, ann.program, lock=True)
    else:
        buffers.filter_sketch(example.id, ann.sketch)
        constraints[example.id] = ann.sketch


@dataclass
class AnnotationLedger:
    """At most one annotation per example, backed by an append-only event
    log that replays to the same map."""

    path: Optional[Path] = None
    annotations: dict[str, Annotation] = field(default_factory=dict)

    def add(self, ann: Annotation) -> None:
        if ann.example_id in self.annotations:
            raise DuplicateAnnotation(f"example {ann.example_id} is already annotated")
        self.annotations[ann.example_id] = ann
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(ann.to_json(), sort_keys=True) + "\n")

    def __contains__(self, example_id: str) -> bool:
        return example_id in self.annotations

    def __len__(self) -> int:
        return len(self.annotations)

    @classmethod
    def replay(cls, path: Path | str) -> "AnnotationLedger":
        ledger = cls(path=Path(path))
        if ledger.path.exists():
            with open(ledger.path, encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    ann = annotation_from_json(json.loads(line))
                    ledger.annotations.setdefault(ann.example_id, ann)
        return ledger
