"""Core expressions in share-let normal form, plus programs.

Every operator and constructor argument is a variable, and a variable is
used at most once along any evaluation path; multiple uses go through an
explicit :class:`Share`.  The ``ty`` slot on each node is filled in by the
base type checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from .types import BaseType, FunType, PairT


class Expr:
    __slots__ = ("ty",)

    def children(self) -> tuple:
        return ()

    def __repr__(self) -> str:
        return pretty(self)


class Unit(Expr):
    __slots__ = ()


class BoolLit(Expr):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = value


class IntLit(Expr):
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name


class BinOp(Expr):
    __slots__ = ("op", "x1", "x2")

    def __init__(self, op: str, x1: str, x2: str):
        self.op = op
        self.x1 = x1
        self.x2 = x2


class App(Expr):
    __slots__ = ("fun", "arg")

    def __init__(self, fun: str, arg: str):
        self.fun = fun
        self.arg = arg


class If(Expr):
    __slots__ = ("cond", "then", "orelse")

    def __init__(self, cond: str, then: Expr, orelse: Expr):
        self.cond = cond
        self.then = then
        self.orelse = orelse

    def children(self):
        return (self.then, self.orelse)


class Let(Expr):
    __slots__ = ("name", "bound", "body")

    def __init__(self, name: str, bound: Expr, body: Expr):
        self.name = name
        self.bound = bound
        self.body = body

    def children(self):
        return (self.bound, self.body)


class Pair(Expr):
    __slots__ = ("x1", "x2")

    def __init__(self, x1: str, x2: str):
        self.x1 = x1
        self.x2 = x2


class MatchPair(Expr):
    __slots__ = ("scrut", "left", "right", "body")

    def __init__(self, scrut: str, left: str, right: str, body: Expr):
        self.scrut = scrut
        self.left = left
        self.right = right
        self.body = body

    def children(self):
        return (self.body,)


class Nil(Expr):
    __slots__ = ()


class Cons(Expr):
    __slots__ = ("head", "tail")

    def __init__(self, head: str, tail: str):
        self.head = head
        self.tail = tail


class MatchList(Expr):
    __slots__ = ("scrut", "nil_body", "head", "tail", "cons_body")

    def __init__(self, scrut: str, nil_body: Expr, head: str, tail: str, cons_body: Expr):
        self.scrut = scrut
        self.nil_body = nil_body
        self.head = head
        self.tail = tail
        self.cons_body = cons_body

    def children(self):
        return (self.nil_body, self.cons_body)


class Share(Expr):
    __slots__ = ("src", "left", "right", "body")

    def __init__(self, src: str, left: str, right: str, body: Expr):
        self.src = src
        self.left = left
        self.right = right
        self.body = body

    def children(self):
        return (self.body,)


class Tick(Expr):
    __slots__ = ("amount",)

    def __init__(self, amount: Fraction):
        self.amount = Fraction(amount)


class Consume(Expr):
    """``consume((A, p), x)``.  ``ann`` is ``None`` until elaborated; ``uid``
    identifies the sink across copies of a program."""

    __slots__ = ("var", "ann", "uid")

    def __init__(self, var: str, ann=None, uid: int = 0):
        self.var = var
        self.ann = ann
        self.uid = uid


# Free variables --------------------------------------------------------------

def free_vars(e: Expr, memo: Optional[dict] = None) -> frozenset:
    if memo is not None:
        hit = memo.get(id(e))
        if hit is not None:
            return hit
    fv = _free_vars(e, memo)
    if memo is not None:
        memo[id(e)] = fv
    return fv


def _free_vars(e: Expr, memo) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (BinOp, Pair)):
        return frozenset((e.x1, e.x2))
    if isinstance(e, App):
        return frozenset((e.arg,))
    if isinstance(e, Cons):
        return frozenset((e.head, e.tail))
    if isinstance(e, Consume):
        return frozenset((e.var,))
    if isinstance(e, If):
        return frozenset((e.cond,)) | free_vars(e.then, memo) | free_vars(e.orelse, memo)
    if isinstance(e, Let):
        return free_vars(e.bound, memo) | (free_vars(e.body, memo) - {e.name})
    if isinstance(e, MatchPair):
        return frozenset((e.scrut,)) | (free_vars(e.body, memo) - {e.left, e.right})
    if isinstance(e, MatchList):
        return (
            frozenset((e.scrut,))
            | free_vars(e.nil_body, memo)
            | (free_vars(e.cons_body, memo) - {e.head, e.tail})
        )
    if isinstance(e, Share):
        return frozenset((e.src,)) | (free_vars(e.body, memo) - {e.left, e.right})
    return frozenset()


def occurrences(e: Expr) -> dict:
    """Count free occurrences per variable, summing across branches.  Used by
    the linearity check: outside ``share`` every count along one path is 1."""
    counts: dict = {}

    def add(name, k=1):
        counts[name] = counts.get(name, 0) + k

    def walk(e, bound):
        for x in _atom_uses(e):
            if x not in bound:
                add(x)
        if isinstance(e, Let):
            walk(e.bound, bound)
            walk(e.body, bound | {e.name})
        elif isinstance(e, If):
            walk(e.then, bound)
            walk(e.orelse, bound)
        elif isinstance(e, MatchPair):
            walk(e.body, bound | {e.left, e.right})
        elif isinstance(e, MatchList):
            walk(e.nil_body, bound)
            walk(e.cons_body, bound | {e.head, e.tail})
        elif isinstance(e, Share):
            walk(e.body, bound | {e.left, e.right})

    walk(e, frozenset())
    return counts


def _atom_uses(e: Expr) -> tuple:
    if isinstance(e, Var):
        return (e.name,)
    if isinstance(e, (BinOp, Pair)):
        return (e.x1, e.x2)
    if isinstance(e, App):
        return (e.arg,)
    if isinstance(e, Cons):
        return (e.head, e.tail)
    if isinstance(e, Consume):
        return (e.var,)
    if isinstance(e, If):
        return (e.cond,)
    if isinstance(e, (MatchPair, MatchList)):
        return (e.scrut,)
    if isinstance(e, Share):
        return (e.src,)
    return ()


def is_linear(e: Expr) -> bool:
    """Each variable occurs at most once on every evaluation path."""

    def uses(e) -> dict:
        # max over branches, sum over sequential parts
        out: dict = {}
        for x in _atom_uses(e):
            out[x] = out.get(x, 0) + 1

        def seq(d, minus=()):
            for k, v in d.items():
                if k not in minus:
                    out[k] = out.get(k, 0) + v

        def alt(*ds):
            merged: dict = {}
            for d, minus in ds:
                for k, v in d.items():
                    if k not in minus:
                        merged[k] = max(merged.get(k, 0), v)
            seq(merged)

        if isinstance(e, Let):
            seq(uses(e.bound))
            seq(uses(e.body), (e.name,))
        elif isinstance(e, If):
            alt((uses(e.then), ()), (uses(e.orelse), ()))
        elif isinstance(e, MatchPair):
            seq(uses(e.body), (e.left, e.right))
        elif isinstance(e, MatchList):
            alt((uses(e.nil_body), ()), (uses(e.cons_body), (e.head, e.tail)))
        elif isinstance(e, Share):
            seq(uses(e.body), (e.left, e.right))
        return out

    def ok(e) -> bool:
        if any(v > 1 for v in uses(e).values()):
            return False
        return all(ok(c) for c in e.children())

    return ok(e)


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in e.children():
        yield from walk(c)


# Programs -------------------------------------------------------------------

@dataclass
class FunDef:
    name: str
    arg: str
    params: list  # surface parameter names
    param_paths: dict  # parameter name -> path of "L"/"R" steps into the argument pair
    body: Expr
    ftype: Optional[FunType] = None

    def param_type(self, name: str) -> BaseType:
        t = self.ftype.arg
        for step in self.param_paths[name]:
            assert isinstance(t, PairT)
            t = t.left if step == "L" else t.right
        return t


@dataclass
class Program:
    funs: dict = field(default_factory=dict)
    entry: Optional[str] = None
    source: Optional[str] = None
    consume_lines: dict = field(default_factory=dict)  # consume uid -> source line

    def __getitem__(self, name: str) -> FunDef:
        return self.funs[name]

    def __contains__(self, name: str) -> bool:
        return name in self.funs

    def entry_name(self, override: Optional[str] = None) -> str:
        if override is not None:
            if override not in self.funs:
                raise KeyError(f"no function named {override!r}")
            return override
        return self.entry or list(self.funs)[-1]


# Rebuilding ------------------------------------------------------------------

def map_children(e: Expr, f: Callable[[Expr], Expr]) -> Expr:
    """Shallow copy of ``e`` with ``f`` applied to each sub-expression."""
    if isinstance(e, If):
        out = If(e.cond, f(e.then), f(e.orelse))
    elif isinstance(e, Let):
        out = Let(e.name, f(e.bound), f(e.body))
    elif isinstance(e, MatchPair):
        out = MatchPair(e.scrut, e.left, e.right, f(e.body))
    elif isinstance(e, MatchList):
        out = MatchList(e.scrut, f(e.nil_body), e.head, e.tail, f(e.cons_body))
    elif isinstance(e, Share):
        out = Share(e.src, e.left, e.right, f(e.body))
    else:
        out = copy_leaf(e)
    if hasattr(e, "ty"):
        out.ty = e.ty
    return out


def copy_leaf(e: Expr) -> Expr:
    if isinstance(e, Unit):
        out = Unit()
    elif isinstance(e, BoolLit):
        out = BoolLit(e.value)
    elif isinstance(e, IntLit):
        out = IntLit(e.value)
    elif isinstance(e, Var):
        out = Var(e.name)
    elif isinstance(e, BinOp):
        out = BinOp(e.op, e.x1, e.x2)
    elif isinstance(e, App):
        out = App(e.fun, e.arg)
    elif isinstance(e, Pair):
        out = Pair(e.x1, e.x2)
    elif isinstance(e, Nil):
        out = Nil()
    elif isinstance(e, Cons):
        out = Cons(e.head, e.tail)
    elif isinstance(e, Tick):
        out = Tick(e.amount)
    elif isinstance(e, Consume):
        out = Consume(e.var, e.ann, e.uid)
    else:
        raise TypeError(f"not a leaf: {type(e).__name__}")
    if hasattr(e, "ty"):
        out.ty = e.ty
    return out


def deep_copy(e: Expr) -> Expr:
    return map_children(e, deep_copy)


# Alpha equivalence -------------------------------------------------------------

def alpha_equal(a: Expr, b: Expr) -> bool:
    def eq(a, b, ma: dict, mb: dict) -> bool:
        if type(a) is not type(b):
            return False

        def same(x, y):
            return ma.get(x, ("free", x)) == mb.get(y, ("free", y))

        def bind(ma, mb, pairs):
            ma, mb = dict(ma), dict(mb)
            for x, y in pairs:
                tag = ("bound", len(ma), x, y)
                ma[x] = tag
                mb[y] = tag
            return ma, mb

        if isinstance(a, (Unit, Nil)):
            return True
        if isinstance(a, (BoolLit, IntLit)):
            return a.value == b.value
        if isinstance(a, Tick):
            return a.amount == b.amount
        if isinstance(a, Var):
            return same(a.name, b.name)
        if isinstance(a, (BinOp, Pair)):
            return getattr(a, "op", None) == getattr(b, "op", None) and same(a.x1, b.x1) and same(a.x2, b.x2)
        if isinstance(a, App):
            return a.fun == b.fun and same(a.arg, b.arg)
        if isinstance(a, Cons):
            return same(a.head, b.head) and same(a.tail, b.tail)
        if isinstance(a, Consume):
            return same(a.var, b.var)
        if isinstance(a, If):
            return same(a.cond, b.cond) and eq(a.then, b.then, ma, mb) and eq(a.orelse, b.orelse, ma, mb)
        if isinstance(a, Let):
            if not eq(a.bound, b.bound, ma, mb):
                return False
            return eq(a.body, b.body, *bind(ma, mb, [(a.name, b.name)]))
        if isinstance(a, MatchPair):
            return same(a.scrut, b.scrut) and eq(a.body, b.body, *bind(ma, mb, [(a.left, b.left), (a.right, b.right)]))
        if isinstance(a, MatchList):
            return (
                same(a.scrut, b.scrut)
                and eq(a.nil_body, b.nil_body, ma, mb)
                and eq(a.cons_body, b.cons_body, *bind(ma, mb, [(a.head, b.head), (a.tail, b.tail)]))
            )
        if isinstance(a, Share):
            return same(a.src, b.src) and eq(a.body, b.body, *bind(ma, mb, [(a.left, b.left), (a.right, b.right)]))
        raise TypeError(type(a).__name__)

    return eq(a, b, {}, {})


# Pretty printing --------------------------------------------------------------

def pretty(e: Expr, indent: int = 0, consume_fmt: Optional[Callable] = None) -> str:
    pad = "  " * indent

    def p(e, ind):
        return pretty(e, ind, consume_fmt)

    if isinstance(e, Unit):
        return "()"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        return f"{e.x1} {e.op} {e.x2}"
    if isinstance(e, App):
        return f"{e.fun}({e.arg})"
    if isinstance(e, Pair):
        return f"({e.x1}, {e.x2})"
    if isinstance(e, Nil):
        return "[]"
    if isinstance(e, Cons):
        return f"{e.head} :: {e.tail}"
    if isinstance(e, Tick):
        return f"tick({_fmt_q(e.amount)})"
    if isinstance(e, Consume):
        if consume_fmt is not None:
            return consume_fmt(e)
        return f"consume({e.var})"
    if isinstance(e, If):
        return (
            f"if {e.cond} then\n{pad}  {p(e.then, indent + 1)}\n"
            f"{pad}else\n{pad}  {p(e.orelse, indent + 1)}"
        )
    if isinstance(e, Let):
        return f"let {e.name} = {p(e.bound, indent + 1)} in\n{pad}{p(e.body, indent)}"
    if isinstance(e, MatchPair):
        return f"match {e.scrut} with ({e.left}, {e.right}) ->\n{pad}  {p(e.body, indent + 1)}"
    if isinstance(e, MatchList):
        return (
            f"match {e.scrut} with\n{pad}| [] -> {p(e.nil_body, indent + 1)}\n"
            f"{pad}| {e.head} :: {e.tail} -> {p(e.cons_body, indent + 1)}"
        )
    if isinstance(e, Share):
        return f"share {e.src} as ({e.left}, {e.right}) in\n{pad}{p(e.body, indent)}"
    return f"<{type(e).__name__}>"


def _fmt_q(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def pretty_program(prog: Program, consume_fmt: Optional[Callable] = None) -> str:
    out = []
    for f in prog.funs.values():
        out.append(f"let rec {f.name}({f.arg}) =\n  {pretty(f.body, 1, consume_fmt)}")
    return "\n\n".join(out) + "\n"
