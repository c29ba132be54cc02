import random

import pytest

from weakparse import mrlang
from weakparse.mrlang import (
    ALL_ROWS,
    ArityMismatch,
    ColumnName,
    Expr,
    ForwardVarRef,
    Literal,
    MalformedSyntax,
    Program,
    Sketch,
    UnknownFunction,
    VarRef,
    parse_program,
    parse_sketch,
    print_program,
    print_sketch,
    signature_of,
    sketch_of,
)

from oracles import random_program, random_table


def test_parse_filter_count():
    program = parse_program("(filter_eq all_rows `2007' `Year') (count v0)")
    assert program == Program(
        (
            Expr("filter_eq", (ALL_ROWS, Literal("2007"), ColumnName("Year"))),
            Expr("count", (VarRef(0),)),
        )
    )


def test_parse_minimal_count():
    assert parse_program("(count all_rows)") == Program((Expr("count", (ALL_ROWS,)),))


def test_forward_var_is_rejected():
    with pytest.raises(ForwardVarRef) as err:
        parse_program("(count v0)")
    assert err.value.stmt_index == 0


def test_unknown_function():
    with pytest.raises(UnknownFunction) as err:
        parse_program("(count all_rows) (frobnicate v0)")
    assert err.value.stmt_index == 1


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        parse_program("(count all_rows `Year')")


def test_malformed_inputs():
    for bad in ["", "count all_rows", "(count all_rows", "(count `Year')", "((count all_rows))"]:
        with pytest.raises(MalformedSyntax):
            parse_program(bad)


def test_var_must_be_row_set():
    # v0 holds a number, so it cannot feed another statement's row slot
    with pytest.raises(MalformedSyntax):
        parse_program("(count all_rows) (count v0)")


def test_print_argmax_hop():
    program = Program(
        (
            Expr("argmax", (ALL_ROWS, ColumnName("Gold"))),
            Expr("hop", (VarRef(0), ColumnName("Country"))),
        )
    )
    assert print_program(program) == "(argmax all_rows `Gold') (hop v0 `Country')"


def test_print_count():
    assert print_program(Program((Expr("count", (ALL_ROWS,)),))) == "(count all_rows)"


def test_roundtrip_generated_programs():
    rng = random.Random(20_240_601)
    for _ in range(1000):
        env = random_table(rng)
        program = random_program(rng, env)
        text = print_program(program)
        assert parse_program(text) == program


def test_parse_canonicalizes_whitespace():
    text = "  (argmax   all_rows `N0')   (filter_eq v0 3 `N0')"
    program = parse_program(text)
    assert print_program(program) == "(argmax all_rows `N0') (filter_eq v0 3 `N0')"


def test_numeric_literals_roundtrip():
    program = parse_program("(filter_greater all_rows 1989 `Year') (hop v0 `Chassis')")
    lit = program.stmts[0].args[1]
    assert lit == Literal(1989)
    assert print_program(program) == "(filter_greater all_rows 1989 `Year') (hop v0 `Chassis')"


def test_sketch_of_examples():
    program = parse_program("(argmax all_rows `Gold') (hop v0 `Country')")
    assert sketch_of(program) == Sketch(("argmax", "hop"))
    assert sketch_of(parse_program("(count all_rows)")) == Sketch(("count",))
    table6 = parse_program(
        "(filter_eq all_rows `WIC' `Competition') (filter_greater v0 2008 `Year')"
        " (hop v1 `Position')"
    )
    assert sketch_of(table6) == Sketch(("filter_eq", "filter_greater", "hop"))


def test_sketch_invariant_under_argument_substitution():
    a = parse_program("(filter_eq all_rows `2007' `Year') (count v0)")
    b = parse_program("(filter_eq all_rows `CIL' `Competition') (count v0)")
    assert sketch_of(a) == sketch_of(b)


def test_sketch_text_roundtrip():
    sketch = parse_sketch("(argmax ...) (hop ...)")
    assert sketch == Sketch(("argmax", "hop"))
    assert print_sketch(sketch) == "(argmax ...) (hop ...)"
    assert parse_sketch(print_sketch(sketch)) == sketch
    with pytest.raises(UnknownFunction):
        parse_sketch("(join ...)")


def test_signatures():
    assert signature_of("count") == ((mrlang.ROWS,), mrlang.NUMBER)
    assert signature_of("argmax") == ((mrlang.ROWS, mrlang.COLUMN), mrlang.ROWS)
    assert signature_of("hop") == ((mrlang.ROWS, mrlang.COLUMN), mrlang.VALUES)
    assert signature_of("filter_eq") == (
        (mrlang.ROWS, mrlang.LITERAL, mrlang.COLUMN),
        mrlang.ROWS,
    )
    with pytest.raises(UnknownFunction):
        signature_of("select")


def test_every_parsed_program_typechecks():
    rng = random.Random(99)
    for _ in range(200):
        env = random_table(rng)
        program = random_program(rng, env)
        mrlang.validate_program(parse_program(print_program(program)))
