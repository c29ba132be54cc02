"""Program execution against a single table with a variable memory,
answer comparison, and exhaustive enumeration of the constrained
program space.

Execution never raises for semantic failures: unknown columns, numeric
operators on text columns and aggregates over empty row sets all come
back as ExecError values that simply match no answer.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

from .mrlang import (
    ALL_ROWS,
    COLUMN,
    LITERAL,
    MAX_PROGRAM_LEN,
    ROWS,
    AllRows,
    CellValue,
    ColumnName,
    DecodeState,
    EOF_ACTION,
    Expr,
    GrammarContext,
    Literal,
    Program,
    VarRef,
    advance,
    print_program,
    signature_of,
    valid_actions,
)

NUMBER_KIND = "number"
TEXT_KIND = "text"

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:\.[0-9]+)?")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase and split on whitespace/punctuation, keeping numbers whole."""
    return tuple(_TOKEN_RE.findall(text.lower()))


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class TableEnv:
    """One immutable table: named typed columns and rows of cells."""

    table_id: str
    columns: tuple[tuple[str, str], ...]  # (name, "number" | "text")
    rows: tuple[tuple[CellValue, ...], ...]

    def __post_init__(self):
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            raise TableError(f"duplicate column names in table {self.table_id}")
        for kind in (k for _, k in self.columns):
            if kind not in (NUMBER_KIND, TEXT_KIND):
                raise TableError(f"bad column kind {kind!r}")
        for r, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise TableError(f"row {r} has {len(row)} cells, expected {len(self.columns)}")
            for cell, (name, kind) in zip(row, self.columns):
                numeric = isinstance(cell, (int, float)) and not isinstance(cell, bool)
                if kind == NUMBER_KIND and not numeric:
                    raise TableError(f"non-numeric cell {cell!r} in number column {name}")
                if kind == TEXT_KIND and not isinstance(cell, str):
                    raise TableError(f"non-text cell {cell!r} in text column {name}")
        object.__setattr__(
            self, "_col_index", {name: i for i, (name, _) in enumerate(self.columns)}
        )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def column_kind(self, name: str) -> Optional[str]:
        i = self._col_index.get(name)
        return self.columns[i][1] if i is not None else None

    def column_values(self, name: str) -> list[CellValue]:
        i = self._col_index[name]
        return [row[i] for row in self.rows]

    def cell(self, row: int, col_name: str) -> CellValue:
        return self.rows[row][self._col_index[col_name]]

    def numeric_column_names(self) -> tuple[str, ...]:
        return tuple(name for name, kind in self.columns if kind == NUMBER_KIND)


@dataclass(frozen=True)
class RowSet:
    indices: tuple[int, ...]


@dataclass(frozen=True)
class ExecError:
    """A failed execution: matches no answer, but is a value, not a crash."""

    kind: str  # "unknown_column" | "type_mismatch" | "empty_rows"
    stmt_index: int


ExecResult = Union[RowSet, int, float, str, list, ExecError]

Answer = Union[int, float, str, list]


def _coerce_number(value: CellValue) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return value
    try:
        return int(value) if value.strip().lstrip("-").isdigit() else float(value)
    except (ValueError, AttributeError):
        return None


def _cell_text(value: CellValue) -> str:
    return value if isinstance(value, str) else repr(value)


def _exec_stmt(
    stmt: Expr, index: int, env: TableEnv, memory: Sequence[ExecResult]
) -> ExecResult:
    rows_arg = stmt.args[0]
    if isinstance(rows_arg, AllRows):
        indices: tuple[int, ...] = tuple(range(env.n_rows))
    else:
        assert isinstance(rows_arg, VarRef)
        prior = memory[rows_arg.index]
        assert isinstance(prior, RowSet)
        indices = prior.indices

    func = stmt.func
    if func == "count":
        return len(indices)

    col = stmt.args[-1]
    assert isinstance(col, ColumnName)
    kind = env.column_kind(col.name)
    if kind is None:
        return ExecError("unknown_column", index)

    if func in ("filter_eq", "filter_greater", "filter_less"):
        lit = stmt.args[1]
        assert isinstance(lit, Literal)
        if func == "filter_eq":
            if kind == NUMBER_KIND:
                target = _coerce_number(lit.value)
                kept = (
                    ()
                    if target is None
                    else tuple(i for i in indices if env.cell(i, col.name) == target)
                )
            else:
                text = _cell_text(lit.value)
                kept = tuple(i for i in indices if env.cell(i, col.name) == text)
            return RowSet(kept)
        if kind != NUMBER_KIND:
            return ExecError("type_mismatch", index)
        target = _coerce_number(lit.value)
        if target is None:
            return ExecError("type_mismatch", index)
        if func == "filter_greater":
            return RowSet(tuple(i for i in indices if env.cell(i, col.name) > target))
        return RowSet(tuple(i for i in indices if env.cell(i, col.name) < target))

    if func == "hop":
        if not indices:
            return ExecError("empty_rows", index)
        return [env.cell(i, col.name) for i in indices]

    # Remaining operators aggregate a numeric column.
    if kind != NUMBER_KIND:
        return ExecError("type_mismatch", index)
    if not indices:
        return ExecError("empty_rows", index)
    values = [env.cell(i, col.name) for i in indices]
    if func == "maximum":
        return max(values)
    if func == "minimum":
        return min(values)
    extreme = max(values) if func == "argmax" else min(values)
    return RowSet(tuple(i for i in indices if env.cell(i, col.name) == extreme))


def execute(program: Program, env: TableEnv) -> ExecResult:
    """Run a program; statement i's value is bound to vi. Total: semantic
    failures return ExecError values."""
    memory: list[ExecResult] = []
    for i, stmt in enumerate(program.stmts):
        value = _exec_stmt(stmt, i, env, memory)
        if isinstance(value, ExecError):
            return value
        memory.append(value)
    return memory[-1]


def _canonical(value):
    """Collapse a result to a comparable form: scalar, or Counter multiset.
    Singleton lists compare equal to the bare scalar."""
    if isinstance(value, list):
        if len(value) == 1:
            return value[0]
        return Counter(value)
    return value


def answers_match(result: ExecResult, gold: Answer) -> bool:
    """Exact comparison: numbers by value, text case-sensitively, lists as
    order-insensitive multisets. Errors and row sets match nothing."""
    if isinstance(result, (ExecError, RowSet)):
        return False
    left = _canonical(result)
    right = _canonical(gold)
    if isinstance(left, Counter) != isinstance(right, Counter):
        return False
    return left == right


def normalize_answer(raw) -> Answer:
    """Validate and normalize a JSON-shaped answer value."""
    if isinstance(raw, bool):
        raise TableError("boolean answers are not supported")
    if isinstance(raw, (int, float, str)):
        return raw
    if isinstance(raw, (list, tuple)):
        items = list(raw)
        if not items:
            raise TableError("empty answer list")
        for item in items:
            if isinstance(item, bool) or not isinstance(item, (int, float, str)):
                raise TableError(f"bad answer element {item!r}")
        return items[0] if len(items) == 1 else items
    raise TableError(f"bad answer value {raw!r}")


# ---------------------------------------------------------------------------
# Constrained search space


def literal_candidates(
    env: TableEnv, utterance: Sequence[str]
) -> dict[str, tuple[CellValue, ...]]:
    """Per-column literal pools: distinct cell values that occur in the
    utterance, falling back to all distinct values when none do.

    Multi-token text cells match as a contiguous token subsequence.
    """
    tokens = tuple(utterance)
    pools: dict[str, tuple[CellValue, ...]] = {}
    for name, _ in env.columns:
        distinct: list[CellValue] = []
        seen = set()
        for value in env.column_values(name):
            if value not in seen:
                seen.add(value)
                distinct.append(value)
        matched = [v for v in distinct if _value_in_utterance(v, tokens)]
        pools[name] = tuple(matched if matched else distinct)
    return pools


def _value_in_utterance(value: CellValue, tokens: tuple[str, ...]) -> bool:
    needle = tokenize(_cell_text(value))
    if not needle:
        return False
    n = len(needle)
    return any(tokens[i : i + n] == needle for i in range(len(tokens) - n + 1))


def grammar_context(
    env: TableEnv, utterance: Sequence[str], max_len: int = MAX_PROGRAM_LEN
) -> GrammarContext:
    return GrammarContext(
        columns=env.column_names(),
        numeric_columns=frozenset(env.numeric_column_names()),
        literal_pool=literal_candidates(env, utterance),
        max_len=max_len,
    )


def enumerate_programs(
    env: TableEnv, utterance: Sequence[str], max_len: int
) -> Iterator[Program]:
    """Yield every type-valid program of up to max_len statements, in
    deterministic depth-first order (shorter completions before their
    extensions)."""
    if max_len <= 0:
        return
    gc = grammar_context(env, utterance, max_len)

    def walk(state: DecodeState) -> Iterator[Program]:
        for action in valid_actions(gc, state):
            nxt, finished = advance(state, action)
            if finished is not None:
                yield finished
            else:
                yield from walk(nxt)

    yield from walk(DecodeState())


def _walk_with_values(gc: GrammarContext, env: TableEnv) -> Iterator[tuple[Program, ExecResult]]:
    """Enumerate (program, final value) pairs, executing each statement once
    per shared prefix. Subtrees under a failed statement are skipped: every
    completion of such a prefix executes to the same error."""

    def walk(state, memory):
        for action in valid_actions(gc, state):
            nxt, finished = advance(state, action)
            if finished is not None:
                yield finished, memory[-1]
                continue
            if nxt.step == "head" and len(nxt.stmts) > len(state.stmts):
                index = len(nxt.stmts) - 1
                value = _exec_stmt(nxt.stmts[index], index, env, memory)
                if isinstance(value, ExecError):
                    if EOF_ACTION in valid_actions(gc, nxt):
                        yield Program(nxt.stmts), value
                    continue
                yield from walk(nxt, memory + [value])
            else:
                yield from walk(nxt, memory)

    yield from walk(DecodeState(), [])


def count_spurious(
    env: TableEnv,
    utterance: Sequence[str],
    gold: Answer,
    gold_mr: Program,
    max_len: int,
) -> tuple[int, int]:
    """Count enumerated programs matching the gold answer (hits) and how
    many of those are not the gold program itself (spurious)."""
    gold_text = print_program(gold_mr)
    hits = 0
    gold_hit = 0
    if max_len > 0:
        gc = grammar_context(env, utterance, max_len)
        for program, value in _walk_with_values(gc, env):
            if answers_match(value, gold):
                hits += 1
                if print_program(program) == gold_text:
                    gold_hit = 1
    return hits, hits - gold_hit


def first_spurious(
    env: TableEnv,
    utterance: Sequence[str],
    gold: Answer,
    gold_mr: Program,
    max_len: int,
    budget: Optional[int] = None,
) -> Optional[Program]:
    """First enumerated program that matches the gold answer without being
    the gold program, or None (also None when the enumeration budget runs
    out first)."""
    if max_len <= 0:
        return None
    gold_text = print_program(gold_mr)
    gc = grammar_context(env, utterance, max_len)
    seen = 0
    for program, value in _walk_with_values(gc, env):
        seen += 1
        if budget is not None and seen > budget:
            return None
        if answers_match(value, gold) and print_program(program) != gold_text:
            return program
    return None


# ---------------------------------------------------------------------------
# Table ingestion


def table_to_json(env: TableEnv) -> dict:
    return {
        "columns": [{"name": name, "kind": kind} for name, kind in env.columns],
        "rows": [list(row) for row in env.rows],
    }


def table_from_json(table_id: str, payload: dict) -> TableEnv:
    try:
        columns = tuple((c["name"], c["kind"]) for c in payload["columns"])
        rows = tuple(tuple(row) for row in payload["rows"])
    except (KeyError, TypeError) as exc:
        raise TableError(f"bad table payload for {table_id}: {exc}") from exc
    return TableEnv(table_id, columns, rows)


def load_tables(path: Path | str) -> dict[str, TableEnv]:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    return {tid: table_from_json(tid, body) for tid, body in sorted(payload.items())}


def save_tables(tables: dict[str, TableEnv], path: Path | str) -> None:
    payload = {tid: table_to_json(env) for tid, env in sorted(tables.items())}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def table_from_csv(table_id: str, path: Path | str) -> TableEnv:
    """Header row gives column names; a column whose cells all parse as
    numbers becomes a number column."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = list(csv.reader(handle))
    if not reader:
        raise TableError(f"{path}: empty csv")
    header, *data = reader
    kinds = []
    for j in range(len(header)):
        cells = [row[j] for row in data]
        numeric = bool(cells) and all(_coerce_number(c) is not None for c in cells)
        kinds.append(NUMBER_KIND if numeric else TEXT_KIND)
    rows = tuple(
        tuple(
            _coerce_number(cell) if kind == NUMBER_KIND else cell
            for cell, kind in zip(row, kinds)
        )
        for row in data
    )
    return TableEnv(table_id, tuple(zip(header, kinds)), rows)
