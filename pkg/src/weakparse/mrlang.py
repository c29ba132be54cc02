"""The table program language: nine operators, s-expression surface text,
program sketches, and the grammar of valid decoding actions.

A program is a sequence of statements such as

    (filter_eq all_rows `2007' `Year') (count v0)

Each statement applies one operator; its result is bound to a variable
(v0 for statement 0 and so on) that later statements may reference.
Quoted atoms use a back-quote/straight-quote pair; numbers are bare.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union

# Operators in canonical order. Order matters: it fixes enumeration order
# and deterministic tie-breaking everywhere downstream.
FUNCTIONS = (
    "filter_eq",
    "filter_greater",
    "filter_less",
    "hop",
    "count",
    "argmax",
    "argmin",
    "maximum",
    "minimum",
)

# Argument kind / result kind tags used by signatures.
ROWS = "rows"
COLUMN = "column"
LITERAL = "literal"
NUMBER = "number"
VALUES = "values"

# func -> (argument kinds in surface order, result kind)
SIGNATURES: dict[str, tuple[tuple[str, ...], str]] = {
    "filter_eq": ((ROWS, LITERAL, COLUMN), ROWS),
    "filter_greater": ((ROWS, LITERAL, COLUMN), ROWS),
    "filter_less": ((ROWS, LITERAL, COLUMN), ROWS),
    "hop": ((ROWS, COLUMN), VALUES),
    "count": ((ROWS,), NUMBER),
    "argmax": ((ROWS, COLUMN), ROWS),
    "argmin": ((ROWS, COLUMN), ROWS),
    "maximum": ((ROWS, COLUMN), NUMBER),
    "minimum": ((ROWS, COLUMN), NUMBER),
}

# Operators whose column argument must be numeric.
NUMERIC_COLUMN_FUNCS = frozenset(
    ["filter_greater", "filter_less", "argmax", "argmin", "maximum", "minimum"]
)

# Generator and search share this cap on statements per program.
MAX_PROGRAM_LEN = 4

CellValue = Union[int, float, str]


@dataclass(frozen=True)
class AllRows:
    def __repr__(self) -> str:
        return "AllRows"


ALL_ROWS = AllRows()


@dataclass(frozen=True)
class VarRef:
    index: int


@dataclass(frozen=True)
class ColumnName:
    name: str


@dataclass(frozen=True)
class Literal:
    value: CellValue


Arg = Union[AllRows, VarRef, ColumnName, Literal]


@dataclass(frozen=True)
class Expr:
    func: str
    args: tuple[Arg, ...]


@dataclass(frozen=True)
class Program:
    stmts: tuple[Expr, ...]

    def __len__(self) -> int:
        return len(self.stmts)


@dataclass(frozen=True)
class Sketch:
    funcs: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.funcs)


class MRError(Exception):
    """Base for surface-syntax and structural program errors.

    stmt_index is the offending statement, or -1 when the problem is not
    attributable to a single statement.
    """

    def __init__(self, message: str, stmt_index: int = -1):
        super().__init__(f"statement {stmt_index}: {message}" if stmt_index >= 0 else message)
        self.stmt_index = stmt_index


class MalformedSyntax(MRError):
    pass


class UnknownFunction(MRError):
    pass


class ArityMismatch(MRError):
    pass


class ForwardVarRef(MRError):
    pass


def signature_of(func: str) -> tuple[tuple[str, ...], str]:
    """Return (argument kinds, result kind) for an operator name."""
    try:
        return SIGNATURES[func]
    except KeyError:
        raise UnknownFunction(f"unknown function {func!r}") from None


def result_kind(func: str) -> str:
    return signature_of(func)[1]


# ---------------------------------------------------------------------------
# Surface text


def _tokenize_surface(text: str) -> list[tuple[str, str]]:
    """Lex program text into (tag, payload) tokens.

    Tags: "(" ")" "atom" "string". Strings are back-quote opened and
    straight-quote closed and may contain spaces.
    """
    tokens: list[tuple[str, str]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, ch))
            i += 1
        elif ch == "`":
            j = text.find("'", i + 1)
            if j < 0:
                raise MalformedSyntax("unterminated quoted string")
            tokens.append(("string", text[i + 1 : j]))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()`'":
                j += 1
            if j == i:
                raise MalformedSyntax(f"unexpected character {text[i]!r}")
            tokens.append(("atom", text[i:j]))
            i = j
    return tokens


_INT_CHARS = frozenset("0123456789-")


def _parse_number(token: str) -> Optional[CellValue]:
    try:
        if set(token) <= _INT_CHARS:
            return int(token)
        return float(token)
    except ValueError:
        return None


def _parse_arg(tag: str, payload: str, kind: str, stmt_index: int) -> Arg:
    if kind == ROWS:
        if tag == "atom" and payload == "all_rows":
            return ALL_ROWS
        if tag == "atom" and payload.startswith("v") and payload[1:].isdigit():
            return VarRef(int(payload[1:]))
        raise MalformedSyntax(f"expected row set, got {payload!r}", stmt_index)
    if kind == COLUMN:
        if tag == "string":
            return ColumnName(payload)
        raise MalformedSyntax(f"expected quoted column name, got {payload!r}", stmt_index)
    if kind == LITERAL:
        if tag == "string":
            return Literal(payload)
        if tag == "atom":
            num = _parse_number(payload)
            if num is not None:
                return Literal(num)
        raise MalformedSyntax(f"expected literal, got {payload!r}", stmt_index)
    raise AssertionError(kind)


def parse_program(text: str) -> Program:
    """Parse surface text into a validated Program.

    Raises UnknownFunction, ArityMismatch, ForwardVarRef or MalformedSyntax;
    each error carries the offending statement index.
    """
    tokens = _tokenize_surface(text)
    stmts: list[Expr] = []
    i = 0
    while i < len(tokens):
        if tokens[i][0] != "(":
            raise MalformedSyntax("expected '('", len(stmts))
        j = i + 1
        group: list[tuple[str, str]] = []
        while j < len(tokens) and tokens[j][0] != ")":
            if tokens[j][0] == "(":
                raise MalformedSyntax("nested statements are not allowed", len(stmts))
            group.append(tokens[j])
            j += 1
        if j >= len(tokens):
            raise MalformedSyntax("missing ')'", len(stmts))
        if not group or group[0][0] != "atom":
            raise MalformedSyntax("statement must start with a function name", len(stmts))
        func = group[0][1]
        if func not in SIGNATURES:
            raise UnknownFunction(f"unknown function {func!r}", len(stmts))
        arg_kinds, _ = SIGNATURES[func]
        if len(group) - 1 != len(arg_kinds):
            raise ArityMismatch(
                f"{func} takes {len(arg_kinds)} arguments, got {len(group) - 1}", len(stmts)
            )
        args = tuple(
            _parse_arg(tag, payload, kind, len(stmts))
            for (tag, payload), kind in zip(group[1:], arg_kinds)
        )
        stmts.append(Expr(func, args))
        i = j + 1
    if not stmts:
        raise MalformedSyntax("empty program")
    program = Program(tuple(stmts))
    validate_program(program)
    return program


def validate_program(program: Program) -> None:
    """Check arity, argument kinds and variable ordering of a built Program."""
    if not program.stmts:
        raise MalformedSyntax("empty program")
    kinds: list[str] = []
    for i, stmt in enumerate(program.stmts):
        arg_kinds, res = signature_of(stmt.func)
        if len(stmt.args) != len(arg_kinds):
            raise ArityMismatch(
                f"{stmt.func} takes {len(arg_kinds)} arguments, got {len(stmt.args)}", i
            )
        for arg, kind in zip(stmt.args, arg_kinds):
            if kind == ROWS:
                if isinstance(arg, VarRef):
                    if arg.index >= i:
                        raise ForwardVarRef(f"v{arg.index} is not defined yet", i)
                    if kinds[arg.index] != ROWS:
                        raise MalformedSyntax(f"v{arg.index} is not a row set", i)
                elif not isinstance(arg, AllRows):
                    raise MalformedSyntax(f"expected row set, got {arg!r}", i)
            elif kind == COLUMN and not isinstance(arg, ColumnName):
                raise MalformedSyntax(f"expected column name, got {arg!r}", i)
            elif kind == LITERAL and not isinstance(arg, Literal):
                raise MalformedSyntax(f"expected literal, got {arg!r}", i)
        kinds.append(res)


def _print_arg(arg: Arg) -> str:
    if isinstance(arg, AllRows):
        return "all_rows"
    if isinstance(arg, VarRef):
        return f"v{arg.index}"
    if isinstance(arg, ColumnName):
        return f"`{arg.name}'"
    if isinstance(arg, Literal):
        if isinstance(arg.value, str):
            return f"`{arg.value}'"
        return repr(arg.value)
    raise AssertionError(arg)


def print_program(program: Program) -> str:
    """Canonical single-space surface form; inverse of parse_program."""
    return " ".join(
        "(" + " ".join([stmt.func] + [_print_arg(a) for a in stmt.args]) + ")"
        for stmt in program.stmts
    )


def sketch_of(program: Program) -> Sketch:
    """Project a program onto its operator sequence."""
    return Sketch(tuple(stmt.func for stmt in program.stmts))


def parse_sketch(text: str) -> Sketch:
    """Parse sketch text such as "(argmax ...) (hop ...)"."""
    tokens = _tokenize_surface(text)
    funcs: list[str] = []
    i = 0
    while i < len(tokens):
        if tokens[i][0] != "(":
            raise MalformedSyntax("expected '('", len(funcs))
        j = i + 1
        group = []
        while j < len(tokens) and tokens[j][0] != ")":
            group.append(tokens[j])
            j += 1
        if j >= len(tokens):
            raise MalformedSyntax("missing ')'", len(funcs))
        if not group or group[0][0] != "atom":
            raise MalformedSyntax("sketch group must start with a function name", len(funcs))
        func = group[0][1]
        if func not in SIGNATURES:
            raise UnknownFunction(f"unknown function {func!r}", len(funcs))
        for tag, payload in group[1:]:
            if not (tag == "atom" and set(payload) <= {"."}):
                raise MalformedSyntax(f"unexpected token {payload!r} in sketch", len(funcs))
        funcs.append(func)
        i = j + 1
    if not funcs:
        raise MalformedSyntax("empty sketch")
    return Sketch(tuple(funcs))


def print_sketch(sketch: Sketch) -> str:
    return " ".join(f"({f} ...)" for f in sketch.funcs)


# ---------------------------------------------------------------------------
# Decoding grammar
#
# A program is decoded as a fixed sequence of typed choice points:
#
#   head step     choose EOF (only when at least one statement exists) or the
#                 next statement's operator
#   rows step     choose all_rows or one of the row-set variables in scope
#   column step   choose a column permitted for the operator
#   literal step  choose a literal from the column's candidate pool
#
# Every valid program corresponds to exactly one action sequence, so a
# locally-normalized model over these choice points sums to one over the
# set of complete programs.

EOF_ACTION = ("eof",)

Action = tuple


@dataclass(frozen=True)
class GrammarContext:
    """The table-and-utterance specific ingredients of the action space."""

    columns: tuple[str, ...]
    numeric_columns: frozenset[str]
    literal_pool: Mapping[str, tuple[CellValue, ...]]
    max_len: int = MAX_PROGRAM_LEN

    def columns_for(self, func: str) -> tuple[str, ...]:
        if func in NUMERIC_COLUMN_FUNCS:
            return tuple(c for c in self.columns if c in self.numeric_columns)
        return self.columns

    def func_available(self, func: str) -> bool:
        arg_kinds, _ = SIGNATURES[func]
        if COLUMN in arg_kinds and not self.columns_for(func):
            return False
        if LITERAL in arg_kinds and not any(
            self.literal_pool.get(c) for c in self.columns_for(func)
        ):
            return False
        return True


@dataclass(frozen=True)
class DecodeState:
    """Immutable position in the decoding grammar.

    step is one of "head", "rows", "col", "lit"; rows_vars lists the indices
    of earlier statements whose result is a row set.
    """

    stmts: tuple[Expr, ...] = ()
    rows_vars: tuple[int, ...] = ()
    step: str = "head"
    func: Optional[str] = None
    rows_arg: Optional[Arg] = None
    col: Optional[str] = None

    @property
    def pos(self) -> int:
        return len(self.stmts)

    @property
    def prev_func(self) -> Optional[str]:
        return self.stmts[-1].func if self.stmts else None

    def context_key(self) -> tuple:
        if self.step == "head":
            return ("head", self.pos, self.prev_func)
        if self.step == "rows":
            return ("rows", self.pos, self.func, self.rows_vars)
        if self.step == "col":
            return ("col", self.func)
        if self.step == "lit":
            return ("lit", self.col)
        raise AssertionError(self.step)


def valid_actions(gc: GrammarContext, state: DecodeState) -> list[Action]:
    """Type-valid actions at a decode state, in canonical order."""
    if state.step == "head":
        actions: list[Action] = []
        if state.pos >= 1:
            actions.append(EOF_ACTION)
        if state.pos < gc.max_len:
            actions.extend(("func", f) for f in FUNCTIONS if gc.func_available(f))
        return actions
    if state.step == "rows":
        return [("rows", -1)] + [("rows", j) for j in state.rows_vars]
    if state.step == "col":
        assert state.func is not None
        cols = gc.columns_for(state.func)
        if LITERAL in SIGNATURES[state.func][0]:
            cols = tuple(c for c in cols if gc.literal_pool.get(c))
        return [("col", c) for c in cols]
    if state.step == "lit":
        assert state.col is not None
        return [("lit", v) for v in gc.literal_pool[state.col]]
    raise AssertionError(state.step)


def _finish_stmt(state: DecodeState, lit: Optional[Literal]) -> DecodeState:
    func = state.func
    assert func is not None and state.rows_arg is not None
    arg_kinds, res = SIGNATURES[func]
    args: list[Arg] = [state.rows_arg]
    if LITERAL in arg_kinds:
        assert lit is not None and state.col is not None
        args.extend([lit, ColumnName(state.col)])
    elif COLUMN in arg_kinds:
        assert state.col is not None
        args.append(ColumnName(state.col))
    stmts = state.stmts + (Expr(func, tuple(args)),)
    rows_vars = state.rows_vars
    if res == ROWS:
        rows_vars = rows_vars + (len(stmts) - 1,)
    return DecodeState(stmts=stmts, rows_vars=rows_vars)


def advance(state: DecodeState, action: Action) -> tuple[DecodeState, Optional[Program]]:
    """Apply an action; returns (next state, finished program or None)."""
    if state.step == "head":
        if action == EOF_ACTION:
            return state, Program(state.stmts)
        return (
            DecodeState(stmts=state.stmts, rows_vars=state.rows_vars, step="rows", func=action[1]),
            None,
        )
    if state.step == "rows":
        idx = action[1]
        rows_arg: Arg = ALL_ROWS if idx < 0 else VarRef(idx)
        arg_kinds, _ = SIGNATURES[state.func]
        if COLUMN in arg_kinds:
            next_state = DecodeState(
                stmts=state.stmts,
                rows_vars=state.rows_vars,
                step="col",
                func=state.func,
                rows_arg=rows_arg,
            )
            return next_state, None
        done = _finish_stmt(
            DecodeState(
                stmts=state.stmts,
                rows_vars=state.rows_vars,
                step="rows",
                func=state.func,
                rows_arg=rows_arg,
            ),
            None,
        )
        return done, None
    if state.step == "col":
        col = action[1]
        arg_kinds, _ = SIGNATURES[state.func]
        mid = DecodeState(
            stmts=state.stmts,
            rows_vars=state.rows_vars,
            step="col",
            func=state.func,
            rows_arg=state.rows_arg,
            col=col,
        )
        if LITERAL in arg_kinds:
            return (
                DecodeState(
                    stmts=state.stmts,
                    rows_vars=state.rows_vars,
                    step="lit",
                    func=state.func,
                    rows_arg=state.rows_arg,
                    col=col,
                ),
                None,
            )
        return _finish_stmt(mid, None), None
    if state.step == "lit":
        return _finish_stmt(state, Literal(action[1])), None
    raise AssertionError(state.step)


def actions_of_program(gc: GrammarContext, program: Program) -> Optional[list[Action]]:
    """The unique action sequence deriving a program, or None when the
    program falls outside the grammar (for example a literal missing from
    the candidate pool)."""
    actions: list[Action] = []
    state = DecodeState()
    for stmt in program.stmts:
        head: Action = ("func", stmt.func)
        if head not in valid_actions(gc, state):
            return None
        actions.append(head)
        state, _ = advance(state, head)
        arg_kinds, _ = SIGNATURES[stmt.func]
        rows_arg = stmt.args[0]
        rows_action = ("rows", rows_arg.index if isinstance(rows_arg, VarRef) else -1)
        if rows_action not in valid_actions(gc, state):
            return None
        actions.append(rows_action)
        state, _ = advance(state, rows_action)
        if COLUMN in arg_kinds:
            col = stmt.args[-1]
            assert isinstance(col, ColumnName)
            col_action = ("col", col.name)
            if col_action not in valid_actions(gc, state):
                return None
            actions.append(col_action)
            state, _ = advance(state, col_action)
        if LITERAL in arg_kinds:
            lit = stmt.args[1]
            assert isinstance(lit, Literal)
            lit_action = ("lit", lit.value)
            if lit_action not in valid_actions(gc, state):
                return None
            actions.append(lit_action)
            state, _ = advance(state, lit_action)
    if EOF_ACTION not in valid_actions(gc, state):
        return None
    actions.append(EOF_ACTION)
    return actions
