from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from artifact.lang import load_program
from artifact.semantics import (
    CostModel, Domain, EvalError, Evaluator, EnumerationCapExceeded, SizeSpec, StepLimitExceeded, check_judgement,
    const_oracle, enumerate_params, metric, observe, run,
)

int_lists = st.lists(st.integers(-3, 3), max_size=6).map(tuple)


def test_p_compare_tick_costs(load, tick):
    prog = load("p_compare_unpadded")
    assert run(prog, "p_compare", {"h": (1, 2, 3), "l": (0, 1, 2)}, tick).net == 16
    assert run(prog, "p_compare", {"h": (1, 2, 1), "l": (0, 1)}, tick).net == 11
    padded = load("p_compare")
    assert run(padded, "p_compare", {"h": (1, 2, 1), "l": (0, 1)}, tick).net == 16


def test_fs_twice_costs(load, tick):
    prog = load("fs_twice")
    out = run(prog, "fs_twice", {"l": (1,)}, tick)
    assert out.value == () and out.net == 10
    worst = max(o.net for _, o in observe(prog, "fs_twice", SizeSpec.exact({"l": 1}, Domain((-1, 0, 1))), tick))
    assert worst == 13


@given(int_lists)
def test_filter_succ_cost_formula(l):
    # 8 per positive element, 3 per other element, 1 at the end
    prog = load_program_cached("filter_succ")
    out = run(prog, "filter_succ", {"l": l}, metric("tick"))
    assert out.net == 8 * sum(x > 0 for x in l) + 3 * sum(x <= 0 for x in l) + 1
    assert out.value == tuple(x + 1 for x in l if x <= 0)


_cache = {}


def load_program_cached(name):
    from artifact import CORPUS

    if name not in _cache:
        _cache[name] = load_program(CORPUS / f"{name}.rml")
    return _cache[name]


@given(int_lists, int_lists)
@settings(max_examples=80)
def test_highwater_bounds_net(h, l):
    prog = load_program_cached("compare_tick")
    out = run(prog, "compare_tick", {"h": h, "l": l}, metric("tick"))
    assert out.highwater >= max(out.net, 0)
    assert out.value == (h == l)


def test_negative_ticks_release_resources():
    prog = load_program("let f(x) = tick(3.0); tick(-2.0); tick(1.0); x")
    out = run(prog, "f", {"x": 0}, metric("tick"))
    assert out.net == 2 and out.highwater == 3
    assert check_judgement({"x": 0}, 3, prog["f"].body, metric("tick"), prog) == 1
    assert check_judgement({"x": 0}, 2, prog["f"].body, metric("tick"), prog) is None


@pytest.mark.parametrize("a, b, q, r", [(7, 2, 3, 1), (-7, 2, -3, -1), (7, -2, -3, 1), (-7, -2, 3, -1)])
def test_division_truncates_toward_zero(a, b, q, r):
    prog = load_program("let f(a, b) = (a div b, a mod b)")
    out = run(prog, "f", {"a": a, "b": b}, metric("tick"))
    assert (out.value.fst, out.value.snd) == (q, r)


def test_division_by_zero_is_a_runtime_error():
    prog = load_program("let f(a, b) = a div b")
    with pytest.raises(EvalError):
        run(prog, "f", {"a": 1, "b": 0}, metric("tick"))


def test_metrics():
    prog = load_program("let rec g(l) = match l with | [] -> 0 | x::xs -> x * g(xs)\nlet f(l) = tick(2.0); g(l)")
    l = {"l": (1, 2, 3)}
    assert run(prog, "f", l, metric("tick")).net == 2
    assert run(prog, "f", l, metric("calls")).net == 4  # one call to g per list cell plus the empty case
    assert run(prog, "f", l, metric("mults")).net == 3
    assert run(prog, "f", l, metric("steps")).net > run(prog, "f", {"l": ()}, metric("steps")).net
    with pytest.raises(ValueError):
        metric("time")
    with pytest.raises(ValueError):
        CostModel("bad", {"nope": 1})


def test_integrality():
    assert metric("tick").integral(load_program("let f(x) = tick(1.0); x"))
    assert not metric("tick").integral(load_program("let f(x) = tick(0.5); x"))
    assert metric("steps").integral(load_program("let f(x) = tick(0.5); x"))


def test_unelaborated_consume_is_refused(load, tick):
    prog = load("c_compare")
    args = {"h": (1, 2), "l": ()}
    with pytest.raises(EvalError, match="consume"):
        run(prog, "c_compare", args, tick)
    assert run(prog, "c_compare", args, tick, unelaborated_consume="free").net == 1


def test_call_limit():
    prog = load_program("let rec loop(x) = loop(x)")
    with pytest.raises(StepLimitExceeded):
        Evaluator(prog, metric("calls"), max_calls=1000).call("loop", 0)


def test_domain_and_size_parsing():
    assert Domain.parse("int:-1..1").ints == (-1, 0, 1)
    assert Domain.parse("int:0,5").ints == (0, 5)
    with pytest.raises(ValueError):
        Domain.parse("bool")
    spec = SizeSpec.parse("h=3,l=0..2")
    assert spec.lengths == {"h": (3,), "l": (0, 1, 2)}


def test_enumeration_counts_and_cap(load):
    f = load("compare")["compare"]
    envs = list(enumerate_params(f, SizeSpec.exact({"h": 2, "l": 1}, Domain((0, 1)))))
    assert len(envs) == 4 * 2
    with pytest.raises(EnumerationCapExceeded):
        list(enumerate_params(f, SizeSpec.up_to(f, 6, Domain((0, 1, 2)), cap=1000)))
    with pytest.raises(ValueError):
        list(enumerate_params(f, SizeSpec.exact({"h": 1}, Domain())))


def test_const_oracle(load, tick):
    unpadded = load("p_compare_unpadded")
    spec = SizeSpec.up_to(unpadded["p_compare"], 3)
    assert const_oracle(unpadded, "p_compare", ["h", "l"], spec, tick)
    # semantically constant in h alone too; only the typing fails there
    assert const_oracle(unpadded, "p_compare", ["h"], spec, tick)
    early_exit = load("compare_tick")
    res = const_oracle(early_exit, "compare_tick", ["h"], SizeSpec.up_to(early_exit["compare_tick"], 3), tick)
    assert not res and res.witness is not None


def test_const_oracle_holds_other_parameters_fixed(tick):
    # cost depends on the values in x: constant in y only if x is held fixed
    prog = load_program("let rec pos(l) = match l with | [] -> () | z::zs -> if z > 0 then tick(1.0); pos(zs) "
                        "else pos(zs)\nlet f(x, y) = pos(x)")
    spec = SizeSpec.up_to(prog["f"], 2, Domain((0, 1)))
    assert const_oracle(prog, "f", ["y"], spec, tick)
    assert not const_oracle(prog, "f", ["x"], spec, tick)


def test_fraction_costs_are_exact():
    prog = load_program("let f(x) = tick(1/3); tick(1/3); tick(1/3); x")
    assert run(prog, "f", {"x": 0}, metric("tick")).net == Fraction(1)
