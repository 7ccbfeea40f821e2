from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from artifact import CORPUS, corpus_path
from artifact.lang import (
    BOOL, INT, ListT, PairT, PairV, ParseError, TypeCheckError, core as C, format_value, load_program, normalize,
    shape, size_equivalent, value_wellformed,
)

CORPUS_FILES = sorted(p.stem for p in CORPUS.glob("*.rml"))

SMALL = """
let rec len(l) = match l with | [] -> 0 | x::xs -> 1 + len(xs)
let dup(l) = let a = len(l) in let b = len(l) in a + b
let swap(p) = match p with (a, b) -> (b, a)
let main(l) = (dup(l), swap((1, true)))
"""


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_corpus_loads_linear_and_typed(name):
    prog = load_program(CORPUS / f"{name}.rml")
    for f in prog.funs.values():
        assert C.is_linear(f.body), f.name
        assert f.ftype is not None
        for e in C.walk(f.body):
            assert hasattr(e, "ty"), (f.name, e)


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_normalize_is_idempotent_up_to_renaming(name):
    prog = load_program(CORPUS / f"{name}.rml")
    again = normalize(prog)
    for fname in prog.funs:
        assert C.alpha_equal(prog[fname].body, again[fname].body)


def test_shared_variable_gets_a_share_node():
    prog = load_program(SMALL)
    body = prog["dup"].body
    assert isinstance(body, C.Share) and body.src == "l"


def test_multi_parameter_functions_take_right_nested_pairs(load):
    f = load("p_compare")["aux"]
    assert f.params == ["r", "h", "l"]
    assert f.param_paths == {"r": ("L",), "h": ("R", "L"), "l": ("R", "R")}
    assert f.ftype.arg == PairT(BOOL, PairT(ListT(INT), ListT(INT)))


def test_entry_defaults_to_last_definition():
    prog = load_program(SMALL)
    assert prog.entry_name() == "main"
    assert prog.entry_name("swap") == "swap"
    with pytest.raises(KeyError):
        prog.entry_name("nope")


def test_types_are_inferred():
    prog = load_program(SMALL)
    assert str(prog["swap"].ftype) == "(int * bool) -> (bool * int)"
    assert str(prog["len"].ftype) == "L(int) -> int"


@pytest.mark.parametrize(
    "src, exc, fragment",
    [
        ("let f(x) = x +", ParseError, "1:"),
        ("let f(x) = y", TypeCheckError, "unbound variable y"),
        ("let f(x) = if x then 1 else true", TypeCheckError, "branches of if"),
        ("let f(l) = match l with | [] -> 0 | x::xs -> x + true", TypeCheckError, "mismatch"),
    ],
)
def test_front_end_errors(src, exc, fragment):
    with pytest.raises(exc, match=fragment):
        load_program(src)


def test_consume_positions_are_recorded(load):
    assert load("c_compare").consume_lines == {1: 6, 2: 9}


def test_corpus_path_resolution():
    assert corpus_path("rev").name == "rev.rml"
    with pytest.raises(FileNotFoundError):
        corpus_path("missing")


def test_pretty_printer_mentions_every_function(load):
    text = C.pretty_program(load("fs_twice"))
    assert "let rec filter_succ" in text and "let rec fs_twice" in text


values = st.recursive(
    st.integers(-3, 3) | st.booleans(),
    lambda inner: st.lists(inner, max_size=3).map(tuple) | st.tuples(inner, inner).map(lambda t: PairV(*t)),
    max_leaves=8,
)


@given(values)
def test_shape_is_reflexive_and_formats(v):
    assert size_equivalent(v, v)
    assert shape(v) == shape(v)
    assert isinstance(format_value(v), str)


@given(st.lists(st.integers(-2, 2), max_size=4), st.lists(st.integers(-2, 2), max_size=4))
@settings(max_examples=60)
def test_size_equivalence_is_equal_length_for_int_lists(a, b):
    assert size_equivalent(tuple(a), tuple(b)) == (len(a) == len(b))


def test_value_wellformedness():
    assert value_wellformed((1, 2), ListT(INT))
    assert not value_wellformed((1, True), ListT(INT))
    assert value_wellformed(PairV(True, ()), PairT(BOOL, ListT(INT)))
