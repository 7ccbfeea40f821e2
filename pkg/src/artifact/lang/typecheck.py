"""Monomorphic base type inference by unification.

Function signatures are not written in the source, so argument and result
types are inferred across the whole program.  Type variables left open at
the end (e.g. the element type of a list that is only ever moved around)
default to ``int``.
"""

from __future__ import annotations

from typing import Optional

from . import core as C
from .types import BOOL, INT, UNIT, Atom, BaseType, FunType, ListT, PairT


class TypeCheckError(Exception):
    pass


class _TV:
    __slots__ = ("ref", "n")
    _count = 0

    def __init__(self):
        _TV._count += 1
        self.n = _TV._count
        self.ref = None


def _find(t):
    while isinstance(t, _TV) and t.ref is not None:
        t = t.ref
    return t


def _show(t) -> str:
    t = _find(t)
    if isinstance(t, _TV):
        return f"'a{t.n}"
    if isinstance(t, Atom):
        return t.name
    if t[0] == "list":
        return f"L({_show(t[1])})"
    return f"({_show(t[1])} * {_show(t[2])})"


def _occurs(v: _TV, t) -> bool:
    t = _find(t)
    if t is v:
        return True
    if isinstance(t, tuple):
        return any(_occurs(v, x) for x in t[1:])
    return False


def unify(a, b, where: str = "") -> None:
    a, b = _find(a), _find(b)
    if a is b:
        return
    if isinstance(a, _TV):
        if _occurs(a, b):
            raise TypeCheckError(f"{where}infinite type {_show(a)} = {_show(b)}")
        a.ref = b
        return
    if isinstance(b, _TV):
        unify(b, a, where)
        return
    if isinstance(a, Atom) and isinstance(b, Atom):
        if a != b:
            raise TypeCheckError(f"{where}type mismatch: {a} vs {b}")
        return
    if isinstance(a, tuple) and isinstance(b, tuple) and a[0] == b[0]:
        for x, y in zip(a[1:], b[1:]):
            unify(x, y, where)
        return
    raise TypeCheckError(f"{where}type mismatch: {_show(a)} vs {_show(b)}")


def _resolve(t) -> BaseType:
    t = _find(t)
    if isinstance(t, _TV):
        t.ref = INT
        return INT
    if isinstance(t, Atom):
        return t
    if t[0] == "list":
        return ListT(_resolve(t[1]))
    return PairT(_resolve(t[1]), _resolve(t[2]))


def _embed(t: BaseType):
    if isinstance(t, Atom):
        return t
    if isinstance(t, ListT):
        return ("list", _embed(t.elem))
    return ("pair", _embed(t.left), _embed(t.right))


_ARITH = {"+", "-", "*", "div", "mod"}
_ORDER = {"<", ">", "<=", ">="}
_EQ = {"=", "<>"}
_LOGIC = {"and", "or"}


class _Checker:
    def __init__(self, prog: C.Program):
        self.prog = prog
        self.sigs = {name: (_TV(), _TV()) for name in prog.funs}
        self.nodes: list = []

    def run(self, hints: Optional[dict] = None) -> None:
        for name, ft in (hints or {}).items():
            if name in self.sigs:
                unify(self.sigs[name][0], _embed(ft.arg), f"{name}: ")
                unify(self.sigs[name][1], _embed(ft.result), f"{name}: ")
        for f in self.prog.funs.values():
            arg, res = self.sigs[f.name]
            t = self.expr(f.body, {f.arg: arg}, f.name)
            unify(t, res, f"{f.name}: result: ")
        for node, t in self.nodes:
            node.ty = _resolve(t)
        for f in self.prog.funs.values():
            arg, res = self.sigs[f.name]
            f.ftype = FunType(_resolve(arg), _resolve(res))

    def var(self, env: dict, x: str, fname: str):
        if x not in env:
            raise TypeCheckError(f"{fname}: unbound variable {x}")
        return env[x]

    def expr(self, e: C.Expr, env: dict, fname: str):
        t = self._expr(e, env, fname)
        self.nodes.append((e, t))
        return t

    def _expr(self, e: C.Expr, env: dict, fn: str):
        where = f"{fn}: "
        if isinstance(e, C.Unit):
            return UNIT
        if isinstance(e, C.BoolLit):
            return BOOL
        if isinstance(e, C.IntLit):
            return INT
        if isinstance(e, C.Var):
            return self.var(env, e.name, fn)
        if isinstance(e, C.BinOp):
            a, b = self.var(env, e.x1, fn), self.var(env, e.x2, fn)
            w = f"{fn}: operator {e.op}: "
            if e.op in _ARITH:
                unify(a, INT, w)
                unify(b, INT, w)
                return INT
            if e.op in _ORDER:
                unify(a, INT, w)
                unify(b, INT, w)
                return BOOL
            if e.op in _EQ:
                unify(a, b, w)
                if not isinstance(_find(a), (Atom, _TV)) or _find(a) == UNIT:
                    raise TypeCheckError(f"{w}equality is defined on int and bool only")
                return BOOL
            if e.op in _LOGIC:
                unify(a, BOOL, w)
                unify(b, BOOL, w)
                return BOOL
            raise TypeCheckError(f"{w}unknown operator")
        if isinstance(e, C.App):
            if e.fun not in self.sigs:
                raise TypeCheckError(f"{fn}: call to undefined function {e.fun}")
            arg, res = self.sigs[e.fun]
            unify(self.var(env, e.arg, fn), arg, f"{fn}: argument of {e.fun}: ")
            return res
        if isinstance(e, C.If):
            unify(self.var(env, e.cond, fn), BOOL, f"{fn}: condition: ")
            t1 = self.expr(e.then, env, fn)
            t2 = self.expr(e.orelse, env, fn)
            unify(t1, t2, f"{fn}: branches of if: ")
            return t1
        if isinstance(e, C.Let):
            t1 = self.expr(e.bound, env, fn)
            return self.expr(e.body, {**env, e.name: t1}, fn)
        if isinstance(e, C.Pair):
            return ("pair", self.var(env, e.x1, fn), self.var(env, e.x2, fn))
        if isinstance(e, C.MatchPair):
            a, b = _TV(), _TV()
            unify(self.var(env, e.scrut, fn), ("pair", a, b), where)
            return self.expr(e.body, {**env, e.left: a, e.right: b}, fn)
        if isinstance(e, C.Nil):
            return ("list", _TV())
        if isinstance(e, C.Cons):
            h = self.var(env, e.head, fn)
            tl = self.var(env, e.tail, fn)
            unify(tl, ("list", h), f"{fn}: cons: ")
            return tl
        if isinstance(e, C.MatchList):
            a = _TV()
            unify(self.var(env, e.scrut, fn), ("list", a), f"{fn}: match on {e.scrut}: ")
            t1 = self.expr(e.nil_body, env, fn)
            t2 = self.expr(e.cons_body, {**env, e.head: a, e.tail: ("list", a)}, fn)
            unify(t1, t2, f"{fn}: branches of match: ")
            return t1
        if isinstance(e, C.Share):
            t = self.var(env, e.src, fn)
            return self.expr(e.body, {**env, e.left: t, e.right: t}, fn)
        if isinstance(e, C.Tick):
            return UNIT
        if isinstance(e, C.Consume):
            self.var(env, e.var, fn)
            return UNIT
        raise TypeCheckError(f"{fn}: unknown node {type(e).__name__}")


def typecheck_base(prog: C.Program, hints: Optional[dict] = None) -> C.Program:
    """Annotate every node with its base type and every function with its
    :class:`FunType`.  ``hints`` may pin function types by name."""
    _Checker(prog).run(hints)
    return prog


def type_of_expr(e: C.Expr, env: dict, prog: Optional[C.Program] = None) -> BaseType:
    """Type a standalone expression under ``env`` (name -> BaseType)."""
    ck = _Checker(prog or C.Program())
    if prog is not None:
        for f in prog.funs.values():
            if f.ftype is not None:
                unify(ck.sigs[f.name][0], _embed(f.ftype.arg))
                unify(ck.sigs[f.name][1], _embed(f.ftype.result))
    t = ck.expr(e, {k: _embed(v) for k, v in env.items()}, "<expr>")
    for node, tv in ck.nodes:
        node.ty = _resolve(tv)
    return _resolve(t)
