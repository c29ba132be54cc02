"""Independent reference implementations used to check the real ones.

The interpreter here scans rows with explicit loops and its own dispatch,
sharing no code with weakparse.executor.execute beyond the data types.
"""

from __future__ import annotations

import random

from weakparse import mrlang
from weakparse.executor import ExecError, RowSet, TableEnv
from weakparse.mrlang import (
    ALL_ROWS,
    AllRows,
    ColumnName,
    Expr,
    Literal,
    Program,
    VarRef,
)


def _ref_number(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    try:
        text = str(value).strip()
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return None


def reference_execute(program: Program, env: TableEnv):
    """Row-by-row interpreter; mirrors the documented semantics directly."""
    names = [name for name, _ in env.columns]
    kinds = {name: kind for name, kind in env.columns}
    table = [dict(zip(names, row)) for row in env.rows]

    variables = []
    for index, stmt in enumerate(program.stmts):
        source = stmt.args[0]
        if isinstance(source, AllRows):
            rows = list(range(len(table)))
        else:
            rows = list(variables[source.index].indices)

        if stmt.func == "count":
            value = len(rows)
        else:
            column = stmt.args[-1].name
            if column not in kinds:
                return ExecError("unknown_column", index)
            if stmt.func == "filter_eq":
                lit = stmt.args[1].value
                kept = []
                if kinds[column] == "number":
                    want = _ref_number(lit)
                    for r in rows:
                        if want is not None and table[r][column] == want:
                            kept.append(r)
                else:
                    want = lit if isinstance(lit, str) else repr(lit)
                    for r in rows:
                        if table[r][column] == want:
                            kept.append(r)
                value = RowSet(tuple(kept))
            elif stmt.func in ("filter_greater", "filter_less"):
                if kinds[column] != "number":
                    return ExecError("type_mismatch", index)
                want = _ref_number(stmt.args[1].value)
                if want is None:
                    return ExecError("type_mismatch", index)
                kept = []
                for r in rows:
                    cell = table[r][column]
                    if stmt.func == "filter_greater" and cell > want:
                        kept.append(r)
                    if stmt.func == "filter_less" and cell < want:
                        kept.append(r)
                value = RowSet(tuple(kept))
            elif stmt.func == "hop":
                if not rows:
                    return ExecError("empty_rows", index)
                value = [table[r][column] for r in rows]
            else:
                if kinds[column] != "number":
                    return ExecError("type_mismatch", index)
                if not rows:
                    return ExecError("empty_rows", index)
                cells = [(table[r][column], r) for r in rows]
                best = cells[0][0]
                for cell, _ in cells:
                    if stmt.func in ("maximum", "argmax"):
                        best = cell if cell > best else best
                    else:
                        best = cell if cell < best else best
                if stmt.func in ("maximum", "minimum"):
                    value = best
                else:
                    value = RowSet(tuple(r for cell, r in cells if cell == best))
        variables.append(value)
    return variables[-1]


def random_program(rng: random.Random, env: TableEnv, max_len: int = 4) -> Program:
    """Build a structurally valid program directly, without the decoding
    grammar: arguments are drawn from the table schema at random."""
    names = list(env.column_names())
    numeric = list(env.numeric_column_names())
    length = rng.randint(1, max_len)
    stmts: list[Expr] = []
    rows_vars: list[int] = []
    for i in range(length):
        options = list(mrlang.FUNCTIONS)
        if not numeric:
            options = [f for f in options if f not in mrlang.NUMERIC_COLUMN_FUNCS]
        func = rng.choice(options)
        if rows_vars and rng.random() < 0.5:
            source = VarRef(rng.choice(rows_vars))
        else:
            source = ALL_ROWS
        arg_kinds, result = mrlang.SIGNATURES[func]
        args = [source]
        if mrlang.LITERAL in arg_kinds:
            pool = numeric if func in mrlang.NUMERIC_COLUMN_FUNCS else names
            column = rng.choice(pool)
            values = env.column_values(column)
            value = rng.choice(values) if values and rng.random() < 0.8 else rng.randint(0, 50)
            args.extend([Literal(value), ColumnName(column)])
        elif mrlang.COLUMN in arg_kinds:
            pool = numeric if func in mrlang.NUMERIC_COLUMN_FUNCS else names
            args.append(ColumnName(rng.choice(pool)))
        stmts.append(Expr(func, tuple(args)))
        if result == mrlang.ROWS:
            rows_vars.append(i)
    return Program(tuple(stmts))


def random_table(rng: random.Random, table_id: str = "rand") -> TableEnv:
    n_rows = rng.randint(1, 8)
    n_text = rng.randint(1, 2)
    n_num = rng.randint(1, 3)
    columns = []
    data = []
    words = ["ash", "birch", "cedar", "dune", "elm", "fern"]
    for i in range(n_text):
        columns.append((f"T{i}", "text"))
        data.append([rng.choice(words) for _ in range(n_rows)])
    for i in range(n_num):
        columns.append((f"N{i}", "number"))
        data.append([rng.randint(0, 9) for _ in range(n_rows)])
    rows = tuple(tuple(col[r] for col in data) for r in range(n_rows))
    return TableEnv(table_id, tuple(columns), rows)
