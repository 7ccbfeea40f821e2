"""Turning a program into a constant-resource one with ``consume`` sinks.

A bare ``consume(x)`` throws away the potential of ``x`` plus a constant.
How much is decided by constant-mode inference: the solver picks each
sink's annotation so that every path costs the same, and the result is a
copy of the program whose sinks carry concrete annotations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .infer import Mode, check_constant, evaluate_bound, infer_signature, upper_slack
from .lang import core as C
from .lang.types import ListT, PairT, UNIT, BaseType
from .potential import AAtom, AnnSig, format_anntype, format_sig
from .semantics import CostModel, Evaluator, EvalError, SizeSpec, build_arg, enumerate_params, shape_key


class RepairInfeasible(Exception):
    """No choice of sink annotations makes the function constant."""


@dataclass
class RepairResult:
    program: C.Program  # elaborated copy
    fname: str
    wrt: tuple
    sig: AnnSig
    consumes: dict  # uid -> (AnnType, Fraction)
    lines: dict = field(default_factory=dict)  # uid -> source line, when known

    def consume_sig(self, uid: int) -> str:
        a, p = self.consumes[uid]
        return format_sig(AnnSig(a, AAtom(UNIT), p, 0))

    def source(self) -> str:
        return C.pretty_program(self.program, consume_fmt=format_consume)


def format_consume(e: C.Consume) -> str:
    if e.ann is None:
        return f"consume({e.var})"
    a, p = e.ann
    q = Fraction(p)
    ps = str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    return f"consume[({format_anntype(a)}, {ps})]({e.var})"


def copy_program(prog: C.Program) -> C.Program:
    out = C.Program(entry=prog.entry, source=prog.source, consume_lines=dict(prog.consume_lines))
    for f in prog.funs.values():
        out.funs[f.name] = C.FunDef(f.name, f.arg, list(f.params), dict(f.param_paths), C.deep_copy(f.body), f.ftype)
    return out


def consume_nodes(prog: C.Program) -> list:
    return [e for f in prog.funs.values() for e in C.walk(f.body) if isinstance(e, C.Consume)]


def elaborate_consumes(prog: C.Program, fname: str, wrt: Iterable, model: CostModel) -> RepairResult:
    """Fill in every bare sink reachable from ``fname`` so that it is
    constant resource with respect to ``wrt``.  Among the valid choices the
    solver takes the least constant cost and then the smallest sinks;
    sinks that are not needed get zero."""
    wrt = tuple(wrt)
    res = check_constant(prog, fname, wrt, model, minimize_consumes=True)
    if not res.ok:
        raise RepairInfeasible(f"{fname} cannot be made constant with respect to {{{', '.join(wrt)}}} "
                               f"by the sinks it has ({res.status})")
    typings = res.consume_typings()
    out = copy_program(prog)
    for node in consume_nodes(out):
        if node.ann is None and node.uid in typings:
            node.ann = typings[node.uid]
    lines = {uid: prog.consume_lines[uid] for uid in typings if uid in prog.consume_lines}
    check = check_constant(out, fname, wrt, model)
    if not check.ok:  # the elaborated program must type on its own
        raise RepairInfeasible(f"elaborated {fname} does not re-check as constant ({check.status})")
    return RepairResult(out, fname, wrt, res.sig, typings, lines)


# Automatic placement ---------------------------------------------------------

def _has_list(t: BaseType) -> bool:
    if isinstance(t, ListT):
        return True
    if isinstance(t, PairT):
        return _has_list(t.left) or _has_list(t.right)
    return False


def insert_consumes(prog: C.Program, functions: Optional[Iterable] = None) -> C.Program:
    """Copy of ``prog`` with a bare sink for every list-carrying variable
    that is available but unused at the end of each branch."""
    out = copy_program(prog)
    uids = itertools.count(max([e.uid for e in consume_nodes(prog)], default=0) + 1)
    names = itertools.count(1)
    for f in out.funs.values():
        if functions is not None and f.name not in functions:
            continue
        f.body = _place(f.body, {f.arg: f.ftype.arg}, uids, names)
    return out


def _place(e: C.Expr, avail: dict, uids, names) -> C.Expr:
    if isinstance(e, C.Let):
        fv_bound = C.free_vars(e.bound)
        # unused variables stay available to the body
        to_bound = {x: t for x, t in avail.items() if x in fv_bound}
        to_body = {x: t for x, t in avail.items() if x not in fv_bound}
        to_body[e.name] = e.bound.ty
        out = C.Let(e.name, _place(e.bound, to_bound, uids, names), _place(e.body, to_body, uids, names))
    elif isinstance(e, C.If):
        out = C.If(e.cond, _branch(e.then, avail, uids, names), _branch(e.orelse, avail, uids, names))
    elif isinstance(e, C.MatchList):
        t = avail.get(e.scrut)
        rest = {x: ty for x, ty in avail.items() if x != e.scrut}
        cons_avail = {**rest, e.head: t.elem, e.tail: t} if t is not None else rest
        out = C.MatchList(e.scrut, _branch(e.nil_body, rest, uids, names), e.head, e.tail,
                          _branch(e.cons_body, cons_avail, uids, names))
    elif isinstance(e, (C.MatchPair, C.Share)):
        src = e.scrut if isinstance(e, C.MatchPair) else e.src
        t = avail.get(src)
        rest = {x: ty for x, ty in avail.items() if x != src}
        if t is not None:
            parts = (t.left, t.right) if isinstance(e, C.MatchPair) else (t, t)
            rest.update({e.left: parts[0], e.right: parts[1]})
        body = _place(e.body, rest, uids, names)
        out = (C.MatchPair(e.scrut, e.left, e.right, body) if isinstance(e, C.MatchPair)
               else C.Share(e.src, e.left, e.right, body))
    else:
        return C.copy_leaf(e)
    out.ty = e.ty
    return out


def _branch(e: C.Expr, avail: dict, uids, names) -> C.Expr:
    body = _place(e, avail, uids, names)
    fv = C.free_vars(e)
    dead = [x for x, t in sorted(avail.items()) if x not in fv and _has_list(t)]
    if not dead:
        return body
    result = f"r#auto{next(names)}"
    tail: C.Expr = C.Var(result)
    tail.ty = e.ty
    for x in reversed(dead):
        sink = C.Consume(x, None, next(uids))
        sink.ty = UNIT
        tail = _let(f"_#auto{next(names)}", sink, tail)
    return _let(result, body, tail)


def _let(name: str, bound: C.Expr, body: C.Expr) -> C.Expr:
    out = C.Let(name, bound, body)
    out.ty = body.ty
    return out


# Checking a repair -----------------------------------------------------------

@dataclass
class RepairCheck:
    ok: bool
    checked: int
    problem: str = ""
    witness: Optional[tuple] = None


def verify_repair(original: C.Program, repaired: C.Program, fname: str, wrt: Iterable, spec: SizeSpec,
                  model: CostModel, original_fname: Optional[str] = None) -> RepairCheck:
    """Exhaustive check over ``spec``: same results as the original and
    equal net cost on environments that agree outside ``wrt`` and have the
    same shapes on it.  The repaired program's inferred upper signature
    must hold on every run and must be a minimal upper signature of the
    original, so the repair costs no more than a tightest bound the
    original already has.  Bare sinks
    in ``original`` cost nothing, so it may be the unrepaired source of
    ``repaired``."""
    wrt = list(wrt)
    ofname = original_fname or fname
    f = repaired[fname]
    up = infer_signature(repaired, fname, Mode.UPPER, model)
    if up.ok:
        slack = upper_slack(original, ofname, model, up.sig)
        if slack is None:
            return RepairCheck(False, 0, "the original does not admit the repaired upper bound", (up.sig,))
        if slack > 0:
            return RepairCheck(False, 0, "the original has a tighter upper bound than the repair", (up.sig, slack))
    ev_o, ev_r = Evaluator(original, model, unelaborated_consume="free"), Evaluator(repaired, model)
    rest = [p for p in f.params if p not in wrt]
    seen: dict = {}
    count = 0
    for params in enumerate_params(f, spec):
        try:
            o = ev_o.call(ofname, build_arg(original[ofname], params))
        except EvalError:
            continue
        r = ev_r.call(fname, build_arg(f, params))
        count += 1
        if o.value != r.value:
            return RepairCheck(False, count, "results differ", (params, o.value, r.value))
        if up.ok and r.highwater > evaluate_bound(f, up.sig, params):
            return RepairCheck(False, count, "cost exceeds the inferred upper bound", (params, r.highwater))
        key = (shape_key(params, wrt), tuple(repr(params[p]) for p in rest))
        if key in seen and seen[key][1] != r.net:
            return RepairCheck(False, count, "costs differ on equivalent inputs", (seen[key], (params, r.net)))
        seen.setdefault(key, (params, r.net))
    return RepairCheck(True, count)
