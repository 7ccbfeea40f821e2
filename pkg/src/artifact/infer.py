"""Linear constraint generation for annotated types, in three modes.

``upper`` may waste potential, ``constant`` must use it exactly and
``lower`` may conjure it.  The syntax-directed rules are shared; the modes
differ only in the structural steps, which are folded into the leaves
(relaxing the budget), into variable uses (subtyping) and into the points
where an unused variable leaves the context (weakening).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional

import networkx as nx

from .lang import core as C
from .lang.types import BaseType, ListT, PairT
from .lp import ConstraintSystem, LinExpr, Objective, Solution, Status, solve
from .potential import (
    AAtom, AList, APair, AnnSig, AnnType, annotate, annotations, erase, layers,
    phi_value, share_constraints, subtype_constraints, substitute,
)
from .semantics import CostModel


class Mode(str, Enum):
    UPPER = "upper"
    CONSTANT = "constant"
    LOWER = "lower"

    @staticmethod
    def parse(text) -> "Mode":
        if isinstance(text, Mode):
            return text
        try:
            return Mode(str(text).lower())
        except ValueError:
            raise ValueError(f"unknown mode {text!r} (expected upper, constant or lower)") from None


class InferenceError(Exception):
    pass


@dataclass
class Derivation:
    """One typing step: the rule applied at ``expr`` with its context and
    budgets.  Children follow the expression structure; a call node's
    callee derivation is not repeated."""

    rule: str
    expr: C.Expr
    ctx: dict
    q: LinExpr
    q_out: LinExpr
    result: AnnType
    children: list = field(default_factory=list)

    def render(self, values: Optional[dict] = None, indent: int = 0) -> str:
        def show(x):
            return repr(x.substitute(values)) if values is not None else repr(x)

        def ty(a):
            from .potential import format_anntype
            return format_anntype(substitute(a, values) if values is not None else a)

        ctx = ", ".join(f"{x}:{ty(a)}" for x, a in self.ctx.items())
        line = f"{'  ' * indent}{self.rule}: {ctx} |- {show(self.q)}/{show(self.q_out)} : {ty(self.result)}"
        return "\n".join([line] + [c.render(values, indent + 1) for c in self.children])


def call_graph(prog: C.Program) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(prog.funs)
    for f in prog.funs.values():
        for e in C.walk(f.body):
            if isinstance(e, C.App):
                g.add_edge(f.name, e.fun)
    return g


def components(prog: C.Program) -> dict:
    """Map each function to its strongly connected component (a tuple of
    names in definition order)."""
    order = list(prog.funs)
    out = {}
    for comp in nx.strongly_connected_components(call_graph(prog)):
        members = tuple(sorted(comp, key=order.index))
        for name in members:
            out[name] = members
    return out


class Generator:
    """Emits the constraint system for one root call and everything it
    reaches.  Calls inside the current recursive component reuse its
    signature variables; any other call gets a fresh copy of the callee's
    constraints."""

    def __init__(self, prog: C.Program, mode: Mode, model: CostModel, cs: Optional[ConstraintSystem] = None,
                 lower_contraction: bool = False, trace: bool = False):
        self.prog = prog
        self.mode = Mode.parse(mode)
        self.model = model
        self.cs = cs if cs is not None else ConstraintSystem()
        self.lower_contraction = lower_contraction
        self.trace = trace
        self.scc = components(prog)
        self.fv_memo: dict = {}
        self.consumes: dict = {}  # uid -> (AnnType, LinExpr) for unelaborated sinks
        self.instances = 0

    # fresh material

    def fresh_type(self, t: BaseType, tag: str = "p") -> AnnType:
        return annotate(t, lambda depth: self.cs.fresh_expr(tag))

    def fresh_sig(self, f: C.FunDef) -> AnnSig:
        if f.ftype is None:
            raise InferenceError(f"{f.name} has not been base-type checked")
        return AnnSig(
            self.fresh_type(f.ftype.arg, f"{f.name}.arg"),
            self.fresh_type(f.ftype.result, f"{f.name}.res"),
            self.cs.fresh_expr(f"{f.name}.q"),
            self.cs.fresh_expr(f"{f.name}.q'"),
        )

    def instantiate(self, fname: str) -> tuple:
        """Fresh signatures for ``fname``'s component, with the bodies'
        constraints.  Returns ``(signature, derivations)``."""
        if fname not in self.prog.funs:
            raise InferenceError(f"call to undefined function {fname}")
        self.instances += 1
        members = self.scc[fname]
        sigs = {g: self.fresh_sig(self.prog[g]) for g in members}
        derivs = {}
        for g in members:
            f = self.prog[g]
            s = sigs[g]
            derivs[g] = self.gen(f.body, {f.arg: s.arg}, s.q, s.q_out, s.result, sigs)
        return sigs[fname], derivs

    # structural steps

    def weaken(self, a: AnnType, why: str) -> None:
        if self.mode is Mode.UPPER:
            return
        for ann in annotations(a):
            self.cs.eq(ann, 0, why)

    def relax(self, q: LinExpr, q_out: LinExpr, p: LinExpr, p_out: LinExpr, why: str) -> None:
        """Fit a premise needing ``p`` before and leaving ``p_out`` after
        into the budget ``q``/``q_out``."""
        slack_in, slack_out = q - p, q_out - p_out
        if self.mode is Mode.UPPER:
            self.cs.ge(q, p, why)
            self.cs.ge(slack_in, slack_out, why)
        elif self.mode is Mode.CONSTANT:
            self.cs.ge(q, p, why)
            self.cs.eq(slack_in, slack_out, why)
        else:
            self.cs.le(slack_in, slack_out, why)

    def leaf(self, q: LinExpr, q_out: LinExpr, cost, why: str, pre: LinExpr = None, post: LinExpr = None) -> None:
        cost = Fraction(cost)
        p = (pre if pre is not None else LinExpr()) + max(cost, 0)
        p_out = (post if post is not None else LinExpr()) + max(-cost, 0)
        self.relax(q, q_out, p, p_out, why)

    def ctx_use(self, have: AnnType, need: AnnType, why: str) -> None:
        """A context variable of type ``have`` is used at type ``need``."""
        direction = {Mode.UPPER: "ge", Mode.CONSTANT: "eq", Mode.LOWER: "le"}[self.mode]
        for c in subtype_constraints(have, need, direction):
            c.origin = why
            self.cs.constraints.append(c)

    def result_use(self, natural: AnnType, expected: AnnType, why: str) -> None:
        """An expression producing ``natural`` is typed at ``expected``."""
        self.ctx_use(natural, expected, why)

    def budget(self, e: LinExpr, why: str) -> LinExpr:
        # lower bounds are not resources: intermediate values may be negative
        if self.mode is not Mode.LOWER:
            self.cs.nonneg(e, why)
        return e

    def fresh_budget(self, tag: str) -> LinExpr:
        if self.mode is Mode.LOWER:
            return self.cs.fresh_expr(tag) - self.cs.fresh_expr(tag)
        return self.cs.fresh_expr(tag)

    # the syntax-directed pass

    def gen(self, e: C.Expr, ctx: dict, q: LinExpr, q_out: LinExpr, result: AnnType, sigs: dict):
        fv = C.free_vars(e, self.fv_memo)
        if any(x not in fv for x in ctx):
            for x in [x for x in ctx if x not in fv]:
                self.weaken(ctx[x], f"weaken {x}")
            ctx = {x: a for x, a in ctx.items() if x in fv}
        missing = fv - ctx.keys()
        if missing:
            raise InferenceError(f"unbound variable(s) {sorted(missing)} (program not linear?)")
        node = Derivation(type(e).__name__.lower(), e, dict(ctx), q, q_out, result) if self.trace else None
        kids = self._gen(e, ctx, q, q_out, result, sigs)
        if node is not None:
            node.children = [k for k in kids if k is not None]
        return node

    def _gen(self, e, ctx, q, q_out, result, sigs) -> list:
        m = self.model
        if isinstance(e, C.Unit):
            self.leaf(q, q_out, m.k("unit"), "unit")
        elif isinstance(e, C.BoolLit):
            self.leaf(q, q_out, m.k("bool"), "bool")
        elif isinstance(e, C.IntLit):
            self.leaf(q, q_out, m.k("int"), "int")
        elif isinstance(e, C.Var):
            self.leaf(q, q_out, m.k("var"), f"var {e.name}")
            self.result_use(ctx[e.name], result, f"var {e.name}")
        elif isinstance(e, C.BinOp):
            self.leaf(q, q_out, m.op(e.op), f"op {e.op}")
        elif isinstance(e, C.Tick):
            self.leaf(q, q_out, m.tick_cost(e.amount), "tick")
        elif isinstance(e, C.Nil):
            self.leaf(q, q_out, m.k("nil"), "nil")
        elif isinstance(e, C.Pair):
            self.leaf(q, q_out, m.k("pair"), "pair")
            self.result_use(APair(ctx[e.x1], ctx[e.x2]), result, "pair")
        elif isinstance(e, C.Cons):
            if not isinstance(result, AList):
                raise InferenceError("cons typed at a non-list type")
            self.leaf(q, q_out, m.k("cons"), "cons", pre=result.ann)
            self.ctx_use(ctx[e.head], result.elem, "cons head")
            self.ctx_use(ctx[e.tail], result, "cons tail")
        elif isinstance(e, C.Consume):
            a, p = self.consume_type(e, ctx[e.var])
            self.leaf(q, q_out, 0, f"consume {e.var}", pre=p)
            self.ctx_use(ctx[e.var], a, f"consume {e.var}")
        elif isinstance(e, C.App):
            if e.fun in sigs:
                sig = sigs[e.fun]
            else:
                sig, _ = self.instantiate(e.fun)
            self.leaf(q, q_out, m.k("app"), f"call {e.fun}", pre=sig.q, post=sig.q_out)
            self.ctx_use(ctx[e.arg], sig.arg, f"call {e.fun} argument")
            self.result_use(sig.result, result, f"call {e.fun} result")
        elif isinstance(e, C.Let):
            fv1 = C.free_vars(e.bound, self.fv_memo)
            ctx1 = {x: a for x, a in ctx.items() if x in fv1}
            ctx2 = {x: a for x, a in ctx.items() if x not in fv1}
            mid_type = self.fresh_type(e.bound.ty, "let")
            mid = self.fresh_budget("b")
            start = self.budget(q - m.k("let"), "let")
            d1 = self.gen(e.bound, ctx1, start, mid, mid_type, sigs)
            d2 = self.gen(e.body, {**ctx2, e.name: mid_type}, mid, q_out, result, sigs)
            return [d1, d2]
        elif isinstance(e, C.If):
            rest = {x: a for x, a in ctx.items() if x != e.cond}
            start = self.budget(q - m.k("cond"), "if")
            return [
                self.gen(e.then, rest, start, q_out, result, sigs),
                self.gen(e.orelse, rest, start, q_out, result, sigs),
            ]
        elif isinstance(e, C.MatchList):
            a = ctx[e.scrut]
            if not isinstance(a, AList):
                raise InferenceError(f"match on non-list {e.scrut}")
            rest = {x: t for x, t in ctx.items() if x != e.scrut}
            nil_q = self.budget(q - m.k("matchN"), "match nil")
            cons_q = self.budget(q + a.ann - m.k("matchL"), "match cons")
            return [
                self.gen(e.nil_body, rest, nil_q, q_out, result, sigs),
                self.gen(e.cons_body, {**rest, e.head: a.elem, e.tail: a}, cons_q, q_out, result, sigs),
            ]
        elif isinstance(e, C.MatchPair):
            a = ctx[e.scrut]
            if not isinstance(a, APair):
                raise InferenceError(f"pair match on non-pair {e.scrut}")
            rest = {x: t for x, t in ctx.items() if x != e.scrut}
            start = self.budget(q - m.k("matchP"), "match pair")
            return [self.gen(e.body, {**rest, e.left: a.left, e.right: a.right}, start, q_out, result, sigs)]
        elif isinstance(e, C.Share):
            a = ctx[e.src]
            rest = {x: t for x, t in ctx.items() if x != e.src}
            if isinstance(a, AAtom):
                a1 = a2 = a
            elif self.mode is Mode.LOWER and self.lower_contraction:
                a1 = a2 = a
            else:
                a1 = self.fresh_type(erase(a), "sh")
                a2 = self.fresh_type(erase(a), "sh")
                for c in share_constraints(a, a1, a2):
                    c.origin = f"share {e.src}"
                    self.cs.constraints.append(c)
            return [self.gen(e.body, {**rest, e.left: a1, e.right: a2}, q, q_out, result, sigs)]
        else:
            raise InferenceError(f"no typing rule for {type(e).__name__}")
        return []

    def consume_type(self, e: C.Consume, have: AnnType) -> tuple:
        if e.ann is not None:
            a, p = e.ann
            return a, LinExpr.lift(p)
        if e.uid not in self.consumes:
            self.consumes[e.uid] = (self.fresh_type(erase(have), f"c{e.uid}."), self.cs.fresh_expr(f"c{e.uid}.p"))
        return self.consumes[e.uid]


# Analyses --------------------------------------------------------------------

@dataclass
class Analysis:
    prog: C.Program
    fname: str
    mode: Mode
    model: CostModel
    cs: ConstraintSystem
    sig: AnnSig  # symbolic root signature
    derivation: Optional[Derivation]
    consumes: dict

    @property
    def fundef(self) -> C.FunDef:
        return self.prog[self.fname]


def gen_constraints(prog: C.Program, fname: str, mode, model: CostModel, *, lower_contraction: bool = False,
                    trace: bool = False) -> Analysis:
    """The constraint system of ``fname`` in ``mode`` and its symbolic
    signature."""
    g = Generator(prog, Mode.parse(mode), model, lower_contraction=lower_contraction, trace=trace)
    sig, derivs = g.instantiate(fname)
    return Analysis(prog, fname, g.mode, model, g.cs, sig, derivs.get(fname), g.consumes)


def pin_zero(cs: ConstraintSystem, a: AnnType, why: str) -> None:
    for ann in annotations(a):
        cs.eq(ann, 0, why)


def param_component(f: C.FunDef, sig_arg: AnnType, name: str) -> AnnType:
    a = sig_arg
    for step in f.param_paths[name]:
        a = a.left if step == "L" else a.right
    return a


def arg_phases(a: AnnType, sense: str) -> list:
    """One objective per list depth, deepest layers first."""
    by_depth: dict = {}
    for _, depth, ann in layers(a):
        by_depth[depth] = by_depth.get(depth, LinExpr()) + ann
    return [Objective(by_depth[d], sense) for d in sorted(by_depth, reverse=True)]


@dataclass
class InferResult:
    status: str
    analysis: Analysis
    solution: Optional[Solution] = None
    sig: Optional[AnnSig] = None  # concrete

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL

    def consume_typings(self) -> dict:
        """uid -> (concrete AnnType, Fraction p) for elaborated sinks."""
        if not self.ok:
            return {}
        vals = self.solution.values
        return {uid: (substitute(a, vals), p.evaluate(vals)) for uid, (a, p) in self.analysis.consumes.items()}

    def bound_string(self) -> str:
        if not self.ok:
            return ""
        return format_bound(*bound_terms(self.analysis.fundef, self.sig))


def _finish(an: Analysis, objectives: list) -> InferResult:
    sol = solve(an.cs, objectives)
    if not sol.ok:
        return InferResult(sol.status, an, sol)
    vals = sol.values
    sig = AnnSig(substitute(an.sig.arg, vals), substitute(an.sig.result, vals),
                 an.sig.q.evaluate(vals), an.sig.q_out.evaluate(vals))
    return InferResult(sol.status, an, sol, sig)


def infer_signature(prog: C.Program, fname: str, mode, model: CostModel, *, lower_strategy: str = "pin-result",
                    minimize_consumes: bool = False, lower_contraction: bool = False, trace: bool = False) -> InferResult:
    """Concrete signature for ``fname``.  Upper and constant modes pin the
    result potential and q' to zero, then minimise the argument
    annotations (deepest layers first) and then q.  Lower mode maximises
    instead; with ``lower_strategy="output-first"`` it leaves the result
    free, first minimises the result potential and then maximises."""
    mode = Mode.parse(mode)
    an = gen_constraints(prog, fname, mode, model, lower_contraction=lower_contraction, trace=trace)
    sense = "max" if mode is Mode.LOWER else "min"
    objectives = []
    if mode is Mode.LOWER and lower_strategy == "output-first":
        objectives.append(Objective(sum(annotations(an.sig.result), LinExpr()) + an.sig.q_out, "min"))
    elif lower_strategy in ("pin-result", "output-first"):
        pin_zero(an.cs, an.sig.result, "result potential is zero")
        an.cs.eq(an.sig.q_out, 0, "q' is zero")
    else:
        raise ValueError(f"unknown lower strategy {lower_strategy!r}")
    objectives += arg_phases(an.sig.arg, sense)
    objectives.append(Objective(an.sig.q, sense))
    if minimize_consumes:
        objectives += _consume_phases(an)
    return _finish(an, objectives)


def _consume_phases(an: Analysis) -> list:
    ps = LinExpr()
    anns = LinExpr()
    for uid in sorted(an.consumes):
        a, p = an.consumes[uid]
        ps = ps + p
        for x in annotations(a):
            anns = anns + x
    return [Objective(ps, "min"), Objective(anns, "min")]


def _pins_for_constant(an: Analysis, wrt: Iterable) -> None:
    f = an.fundef
    wrt = set(wrt)
    unknown = wrt - set(f.params)
    if unknown:
        raise ValueError(f"{f.name} has no parameter(s) {sorted(unknown)}")
    pin_zero(an.cs, an.sig.result, "result potential is zero")
    for name in f.params:
        if name not in wrt:
            pin_zero(an.cs, param_component(f, an.sig.arg, name), f"{name} outside the constant set")


def check_constant(prog: C.Program, fname: str, wrt: Iterable, model: CostModel, *, trace: bool = False,
                   minimize_consumes: bool = False) -> InferResult:
    """Constant-mode typing with zero potential outside ``wrt`` and on the
    result.  ``result.ok`` says whether ``fname`` is provably constant
    resource with respect to the parameters in ``wrt``."""
    an = gen_constraints(prog, fname, Mode.CONSTANT, model, trace=trace)
    _pins_for_constant(an, wrt)
    objectives = arg_phases(an.sig.arg, "min") + [Objective(an.sig.q, "min"), Objective(an.sig.q_out, "min")]
    if minimize_consumes:
        objectives += _consume_phases(an)
    return _finish(an, objectives)


def check_constant_expr(prog: C.Program, e: C.Expr, ctx_types: dict, wrt: Iterable, model: CostModel) -> bool:
    """Constant-mode typing of a sub-expression whose free variables have
    the given base types; variables outside ``wrt`` and the result carry
    no potential."""
    g = Generator(prog, Mode.CONSTANT, model)
    wrt = set(wrt)
    ctx = {}
    for x in C.free_vars(e):
        if x not in ctx_types:
            raise InferenceError(f"no type for free variable {x}")
        ctx[x] = g.fresh_type(ctx_types[x], x)
        if x not in wrt:
            pin_zero(g.cs, ctx[x], f"{x} outside the constant set")
    result = g.fresh_type(e.ty, "res")
    pin_zero(g.cs, result, "result potential is zero")
    g.gen(e, ctx, g.cs.fresh_expr("q"), g.cs.fresh_expr("q'"), result, {})
    return solve(g.cs).ok


def admits_signature(prog: C.Program, fname: str, mode, model: CostModel, sig: AnnSig) -> bool:
    """Whether ``fname`` can be typed with the concrete signature ``sig``."""
    an = gen_constraints(prog, fname, mode, model)
    if erase(sig.arg) != erase(an.sig.arg) or erase(sig.result) != erase(an.sig.result):
        raise ValueError(f"signature shape does not match {fname}: {an.fundef.ftype}")
    for c in subtype_constraints(an.sig.arg, sig.arg, "eq") + subtype_constraints(an.sig.result, sig.result, "eq"):
        an.cs.constraints.append(c)
    an.cs.eq(an.sig.q, sig.q, "pinned q")
    an.cs.eq(an.sig.q_out, sig.q_out, "pinned q'")
    return solve(an.cs).ok


def upper_slack(prog: C.Program, fname: str, model: CostModel, sig: AnnSig) -> Optional[Fraction]:
    """How far below ``sig`` an upper signature of ``fname`` can go: the
    largest total decrease over the argument annotations and q, keeping
    the result part of ``sig``.  ``None`` when ``sig`` is not admitted at
    all; ``0`` when ``sig`` is minimal among admitted signatures."""
    an = gen_constraints(prog, fname, Mode.UPPER, model)
    if erase(sig.arg) != erase(an.sig.arg) or erase(sig.result) != erase(an.sig.result):
        raise ValueError(f"signature shape does not match {fname}: {an.fundef.ftype}")
    an.cs.constraints += subtype_constraints(an.sig.arg, sig.arg, "le")
    an.cs.constraints += subtype_constraints(an.sig.result, sig.result, "eq")
    an.cs.le(an.sig.q, sig.q, "q at most the given one")
    an.cs.eq(an.sig.q_out, sig.q_out, "pinned q'")
    slack = sum(annotations(sig.arg), LinExpr()) - sum(annotations(an.sig.arg), LinExpr()) + sig.q - an.sig.q
    sol = solve(an.cs, Objective(slack, "max"))
    return sol.objective_values[0] if sol.ok else None


# Bounds ----------------------------------------------------------------------

OUTER_NAMES = ("n", "x", "y", "z", "w", "v", "u")


def size_variables(f: C.FunDef) -> list:
    """``(name, param, path, depth)`` for every list layer of the argument.
    Outermost layers of list parameters are named n, x, y, ... in order;
    inner layers m, m1, m2, ... (their value is the total length of all
    inner lists at that layer)."""
    out = []
    outer = iter(OUTER_NAMES)
    inner = 0
    for p in f.params:
        t = f.param_type(p)
        for path, depth in _list_layers(t):
            if depth == 0:
                try:
                    name = next(outer)
                except StopIteration:
                    name = f"n{len(out)}"
            else:
                name = "m" if inner == 0 else f"m{inner}"
                inner += 1
            out.append((name, p, path, depth))
    return out


def _list_layers(t: BaseType, depth: int = 0, path: tuple = ()):
    if isinstance(t, ListT):
        yield path, depth
        yield from _list_layers(t.elem, depth + 1, path + ("E",))
    elif isinstance(t, PairT):
        yield from _list_layers(t.left, depth, path + ("L",))
        yield from _list_layers(t.right, depth, path + ("R",))


def bound_terms(f: C.FunDef, sig: AnnSig) -> tuple:
    """``(coefficients by size variable, constant)`` of the bound
    ``q + potential(arg) - q'`` for a concrete signature with a zero-potential
    result."""
    names = size_variables(f)
    coeffs = {}
    for name, p, path, _ in names:
        comp = param_component(f, sig.arg, p)
        ann = _layer_at(comp, path)
        coeffs[name] = ann.const if isinstance(ann, LinExpr) else Fraction(ann)
    const = LinExpr.lift(sig.q).const - LinExpr.lift(sig.q_out).const
    return coeffs, const


def _layer_at(a: AnnType, path: tuple):
    for step in path:
        a = {"L": lambda t: t.left, "R": lambda t: t.right, "E": lambda t: t.elem}[step](a)
    return a.ann


def _fmt_q(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_bound(coeffs: dict, const: Fraction) -> str:
    """``8*n + 1`` style linear expression."""
    parts = []
    for name, c in coeffs.items():
        if c == 0:
            continue
        mag = abs(c)
        term = name if mag == 1 else f"{_fmt_q(mag)}*{name}"
        parts.append(("-" if c < 0 else "+", term))
    if const != 0 or not parts:
        parts.append(("-" if const < 0 else "+", _fmt_q(abs(const))))
    text = ""
    for i, (sign, term) in enumerate(parts):
        if i == 0:
            text = term if sign == "+" else f"-{term}"
        else:
            text += f" {sign} {term}"
    return text


def evaluate_bound(f: C.FunDef, sig: AnnSig, params: dict) -> Fraction:
    """``q + potential(arg) - q'`` at concrete parameter values."""
    total = LinExpr.lift(sig.q).const - LinExpr.lift(sig.q_out).const
    for p in f.params:
        total += phi_value(params[p], param_component(f, sig.arg, p))
    return total
