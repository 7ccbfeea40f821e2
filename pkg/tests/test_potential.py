from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from artifact.lang import BOOL, INT, ListT, PairT, PairV
from artifact.lang.types import ValueTypeError
from artifact.lp import ConstraintSystem, Objective, solve
from artifact.potential import (
    AAtom, AList, APair, ShapeError, annotate, const_list, erase, format_anntype, format_sig, is_subtype,
    parse_anntype, parse_sig, phi_context, phi_symbolic, phi_value, share_constraints, split_params,
    subtype_constraints, substitute, zero,
)

INT_A = AAtom(INT)


def test_phi_of_flat_and_nested_lists():
    assert phi_value((1, 2, 3), const_list(INT_A, 5)) == 15
    nested = const_list(INT_A, 2, 3)  # L^2(L^3(int))
    assert phi_value(((1,), (), (1, 2)), nested) == 2 * 3 + 3 * 3
    pair = APair(const_list(INT_A, 5), const_list(INT_A, 1))
    assert phi_value(PairV((1, 2), (3,)), pair) == 11
    assert phi_value(7, INT_A) == 0


def test_phi_rejects_ill_typed_values():
    with pytest.raises(ValueTypeError):
        phi_value((True,), const_list(INT_A, 1))


def test_phi_context_sums_named_variables():
    ctx = {"h": const_list(INT_A, 5), "l": const_list(INT_A, 0)}
    env = {"h": (1, 2), "l": (1, 2, 3)}
    assert phi_context(env, ctx) == 10
    with pytest.raises(KeyError):
        phi_context({"h": ()}, ctx)


def test_symbolic_annotations():
    cs = ConstraintSystem()
    a = annotate(ListT(ListT(INT)), lambda depth: cs.fresh_expr(f"d{depth}_"))
    expr = phi_symbolic(((1, 2), (3,)), a)
    outer, inner = a.ann.variables()[0], a.elem.ann.variables()[0]
    assert expr.terms == {outer: 2, inner: 3}
    concrete = substitute(a, {outer: Fraction(1), inner: Fraction(4)})
    assert format_anntype(concrete) == "L^1(L^4(int))"
    with pytest.raises(ValueError):
        phi_value(((),), a)


def test_share_and_subtype_constraints():
    cs = ConstraintSystem()
    t = ListT(INT)
    a, a1, a2 = (annotate(t, lambda d: cs.fresh_expr()) for _ in range(3))
    cs.constraints += share_constraints(a, a1, a2)
    cs.constraints += subtype_constraints(a1, const_list(INT_A, 2), "ge")
    cs.constraints += subtype_constraints(a2, const_list(INT_A, 3), "ge")
    sol = solve(cs, Objective(a.ann))
    assert sol.objective_values == [5]
    with pytest.raises(ShapeError):
        share_constraints(a, zero(INT), a2)


def test_is_subtype():
    assert is_subtype(const_list(INT_A, 1), const_list(INT_A, 2))
    assert not is_subtype(const_list(INT_A, 3), const_list(INT_A, 2))
    with pytest.raises(ShapeError):
        is_subtype(const_list(INT_A, 1), zero(PairT(INT, BOOL)))


def test_split_params_and_format_sig():
    sig = parse_sig("(L^5(int), L^0(int)) --1/0--> bool")
    assert [format_anntype(x) for x in split_params(sig.arg, 2)] == ["L^5(int)", "L^0(int)"]
    assert format_sig(sig, 2) == "(L^5(int), L^0(int)) --1/0--> bool"
    assert format_sig(sig, 1) == "(L^5(int), L^0(int)) --1/0--> bool"


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_anntype("L^1(int")
    with pytest.raises(ValueError):
        parse_sig("L^1(int) --1/2/3--> int")


rationals = st.fractions(min_value=0, max_value=20, max_denominator=6)
anntypes = st.recursive(
    st.sampled_from(["int", "bool", "unit"]).map(lambda n: parse_anntype(n)),
    lambda inner: st.builds(AList, inner, rationals) | st.builds(APair, inner, inner),
    max_leaves=6,
)


@given(anntypes)
def test_anntype_format_roundtrip(a):
    text = format_anntype(a)
    assert format_anntype(parse_anntype(text)) == text
    assert erase(parse_anntype(text)) == erase(a)


@given(anntypes, anntypes, rationals, rationals)
def test_sig_format_roundtrip(a, r, q, q_out):
    from artifact.potential import AnnSig

    text = format_sig(AnnSig(a, r, q, q_out))
    back = parse_sig(text)
    assert (back.q.const, back.q_out.const) == (q, q_out)
    assert format_sig(back) == text


flat = st.lists(st.integers(-2, 2), max_size=5).map(tuple)
nested = st.lists(flat, max_size=4).map(tuple)


@given(nested, rationals, rationals)
def test_symbolic_potential_agrees_with_concrete(v, p1, p2):
    cs = ConstraintSystem()
    a = annotate(ListT(ListT(INT)), lambda d: cs.fresh_expr())
    outer, inner = a.ann.variables()[0], a.elem.ann.variables()[0]
    values = {outer: p1, inner: p2}
    assert phi_symbolic(v, a).evaluate(values) == phi_value(v, a, values)
    assert phi_value(v, substitute(a, values)) == p1 * len(v) + p2 * sum(len(x) for x in v)


@given(flat, rationals, rationals)
def test_potential_is_additive_over_sharing(v, p1, p2):
    whole = const_list(INT_A, p1 + p2)
    assert phi_value(v, whole) == phi_value(v, const_list(INT_A, p1)) + phi_value(v, const_list(INT_A, p2))


@given(flat, flat, rationals)
def test_potential_of_cons_pays_one_annotation(xs, ys, p):
    a = const_list(INT_A, p)
    assert phi_value(xs + ys, a) == phi_value(xs, a) + phi_value(ys, a)
    assert phi_value((0,) + xs, a) == phi_value(xs, a) + p
