"""Elaboration of surface programs into share-let normal form.

Three passes run per function:

1. let-normalisation: every operand becomes a variable, tuples become
   right-nested pairs and multi-parameter functions take one pair argument;
2. binder renaming, so no binder shadows a variable that is still in scope;
3. linearisation: a variable needed by two sequential parts of an
   expression is split with ``share`` right where the uses diverge.
   Alternative branches of ``if``/``match`` do not count as two uses.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Optional, Union

from . import core as C
from . import surface as S


class NormalizeError(Exception):
    pass


class _Fresh:
    def __init__(self):
        self.counter = itertools.count(1)

    def __call__(self, base: str = "t") -> str:
        base = base.split("#")[0] or "t"
        return f"{base}#{next(self.counter)}"


def normalize(p: Union[S.SProgram, C.Program]) -> C.Program:
    """Turn a parsed program (or an existing core program) into share-let
    normal form.  Applied to a core program it only re-linearises, so the
    operation is idempotent up to renaming."""
    if isinstance(p, C.Program):
        fresh = _Fresh()
        out = C.Program(entry=p.entry, source=p.source, consume_lines=dict(p.consume_lines))
        for f in p.funs.values():
            body = linearize(uniquify(C.deep_copy(f.body), {f.arg}, fresh), fresh)
            out.funs[f.name] = C.FunDef(f.name, f.arg, list(f.params), dict(f.param_paths), body, f.ftype)
        return out
    return _Normalizer(p).run()


class _Normalizer:
    def __init__(self, prog: S.SProgram):
        self.prog = prog
        self.fresh = _Fresh()
        self.consume_ids = itertools.count(1)
        self.consume_lines: dict = {}
        self.defs: list = []  # lifted SDefs in definition order
        self.arity: dict = {}

    def run(self) -> C.Program:
        for d in self.prog.defs:
            self._lift(d, set(), {})
        names = [d.name for d in self.defs]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise NormalizeError(f"function defined twice: {sorted(dup)[0]}")
        out = C.Program(source=self.prog.source)
        for d in self.defs:
            out.funs[d.name] = self._fundef(d)
        out.consume_lines = dict(self.consume_lines)
        top = [d.name for d in self.prog.defs]
        out.entry = top[-1] if top else None
        return out

    # Lambda lifting of local definitions.
    def _lift(self, d: S.SDef, outer_names: set, renames: dict) -> None:
        self.arity[d.name] = len(d.params)
        body = self._lift_expr(d.body, renames, d.name)
        self.defs.append(S.SDef(d.name, d.params, body, d.recursive, d.pos))

    def _lift_expr(self, e: S.SExpr, renames: dict, owner: str) -> S.SExpr:
        if isinstance(e, S.SLetFun):
            local = dict(renames)
            existing = {x.name for x in self.defs} | {x.name for x in self.prog.defs}
            for d in e.defs:
                new = d.name if d.name not in existing else f"{owner}.{d.name}"
                local[d.name] = new
            for d in e.defs:
                captured = _surface_free(d.body, set(d.params)) - set(local) - existing
                if captured:
                    raise NormalizeError(
                        f"local function {d.name} uses variables of the enclosing scope: {sorted(captured)}"
                    )
                self.arity[local[d.name]] = len(d.params)
                body = self._lift_expr(d.body, local, owner)
                self.defs.append(S.SDef(local[d.name], d.params, body, d.recursive, d.pos))
            return self._lift_expr(e.body, local, owner)
        if isinstance(e, S.SApp):
            return S.SApp(renames.get(e.fun, e.fun), [self._lift_expr(a, renames, owner) for a in e.args], e.pos)
        return _map_surface(e, lambda c: self._lift_expr(c, renames, owner))

    # Let-normalisation.
    def _fundef(self, d: S.SDef) -> C.FunDef:
        params = list(d.params)
        if len(set(params) - {"_"}) != len([p for p in params if p != "_"]):
            raise NormalizeError(f"{d.name}: repeated parameter name")
        params = [p if p != "_" else self.fresh("_") for p in params]
        body = self.core(d.body)
        if not params:
            arg = self.fresh("u")
            paths: dict = {}
        elif len(params) == 1:
            arg = params[0]
            paths = {arg: ()}
        else:
            arg = self.fresh("args")
            paths = {}
            body = self._destructure(arg, params, body, paths, ())
        fresh = self.fresh
        body = uniquify(body, {arg}, fresh)
        body = linearize(body, fresh)
        return C.FunDef(d.name, arg, params, paths, body)

    def _destructure(self, var: str, names: list, body: C.Expr, paths: Optional[dict], prefix: tuple) -> C.Expr:
        # names bound right-nested: (a, (b, c))
        if len(names) == 2:
            if paths is not None:
                paths[names[0]] = prefix + ("L",)
                paths[names[1]] = prefix + ("R",)
            return C.MatchPair(var, names[0], names[1], body)
        rest = self.fresh("rest")
        if paths is not None:
            paths[names[0]] = prefix + ("L",)
        inner = self._destructure(rest, names[1:], body, paths, prefix + ("R",))
        return C.MatchPair(var, names[0], rest, inner)

    def _binder(self, name: str) -> str:
        return self.fresh("_") if name == "_" else name

    def atomize(self, e: S.SExpr, k: Callable[[str], C.Expr]) -> C.Expr:
        if isinstance(e, S.SVar):
            return k(e.name)
        t = self.fresh()
        return C.Let(t, self.core(e), k(t))

    def atomize_many(self, es: list, k: Callable[[list], C.Expr]) -> C.Expr:
        def go(i, acc):
            if i == len(es):
                return k(acc)
            return self.atomize(es[i], lambda x: go(i + 1, acc + [x]))

        return go(0, [])

    def _tuple(self, xs: list) -> C.Expr:
        # right-nested pair of variables, built with lets
        if len(xs) == 2:
            return C.Pair(xs[0], xs[1])
        t = self.fresh("p")
        return C.Let(t, self._tuple(xs[1:]), C.Pair(xs[0], t))

    def core(self, e: S.SExpr) -> C.Expr:
        if isinstance(e, S.SUnit):
            return C.Unit()
        if isinstance(e, S.SBool):
            return C.BoolLit(e.value)
        if isinstance(e, S.SInt):
            return C.IntLit(e.value)
        if isinstance(e, S.SVar):
            return C.Var(e.name)
        if isinstance(e, S.SNil):
            return C.Nil()
        if isinstance(e, S.STick):
            return C.Tick(e.amount)
        if isinstance(e, S.SBin):
            return self.atomize_many([e.left, e.right], lambda xs: C.BinOp(e.op, xs[0], xs[1]))
        if isinstance(e, S.SCons):
            return self.atomize_many([e.head, e.tail], lambda xs: C.Cons(xs[0], xs[1]))
        if isinstance(e, S.STuple):
            return self.atomize_many(e.items, self._tuple)
        if isinstance(e, S.SApp):
            want = self.arity.get(e.fun)
            if want is None:
                raise NormalizeError(f"{e.pos[0]}:{e.pos[1]}: call to undefined function {e.fun}")
            if want != len(e.args):
                raise NormalizeError(
                    f"{e.pos[0]}:{e.pos[1]}: {e.fun} expects {want} argument(s), got {len(e.args)}"
                )
            if not e.args:
                u = self.fresh("u")
                return C.Let(u, C.Unit(), C.App(e.fun, u))
            if len(e.args) == 1:
                return self.atomize(e.args[0], lambda x: C.App(e.fun, x))

            def call(xs):
                t = self.fresh("p")
                return C.Let(t, self._tuple(xs), C.App(e.fun, t))

            return self.atomize_many(e.args, call)
        if isinstance(e, S.SLet):
            if isinstance(e.pat, tuple):
                names = [self._binder(n) for n in e.pat]
                return self.atomize(e.bound, lambda x: self._destructure(x, names, self.core(e.body), None, ()))
            return C.Let(self._binder(e.pat), self.core(e.bound), self.core(e.body))
        if isinstance(e, S.SSeq):
            return C.Let(self.fresh("_"), self.core(e.first), self.core(e.second))
        if isinstance(e, S.SIf):
            return self.atomize(e.cond, lambda x: C.If(x, self.core(e.then), self.core(e.orelse)))
        if isinstance(e, S.SMatchList):
            return self.atomize(
                e.scrut,
                lambda x: C.MatchList(
                    x, self.core(e.nil_body), self._binder(e.head), self._binder(e.tail), self.core(e.cons_body)
                ),
            )
        if isinstance(e, S.SMatchPair):
            names = [self._binder(n) for n in e.names]
            return self.atomize(e.scrut, lambda x: self._destructure(x, names, self.core(e.body), None, ()))
        if isinstance(e, S.SConsume):
            out: Optional[C.Expr] = None
            for name in reversed(e.names):
                node = C.Consume(name, None, next(self.consume_ids))
                self.consume_lines[node.uid] = e.pos[0]
                out = node if out is None else C.Let(self.fresh("_"), node, out)
            return out
        if isinstance(e, S.SLetFun):
            raise NormalizeError("internal: local function survived lifting")
        raise NormalizeError(f"unsupported surface node {type(e).__name__}")


def _map_surface(e: S.SExpr, f: Callable[[S.SExpr], S.SExpr]) -> S.SExpr:
    if isinstance(e, S.SBin):
        return S.SBin(e.op, f(e.left), f(e.right), e.pos)
    if isinstance(e, S.SApp):
        return S.SApp(e.fun, [f(a) for a in e.args], e.pos)
    if isinstance(e, S.SLet):
        return S.SLet(e.pat, f(e.bound), f(e.body), e.pos)
    if isinstance(e, S.SIf):
        return S.SIf(f(e.cond), f(e.then), f(e.orelse), e.pos)
    if isinstance(e, S.SMatchList):
        return S.SMatchList(f(e.scrut), f(e.nil_body), e.head, e.tail, f(e.cons_body), e.pos)
    if isinstance(e, S.SMatchPair):
        return S.SMatchPair(f(e.scrut), e.names, f(e.body), e.pos)
    if isinstance(e, S.STuple):
        return S.STuple([f(x) for x in e.items], e.pos)
    if isinstance(e, S.SCons):
        return S.SCons(f(e.head), f(e.tail), e.pos)
    if isinstance(e, S.SSeq):
        return S.SSeq(f(e.first), f(e.second), e.pos)
    if isinstance(e, S.SLetFun):
        return S.SLetFun(e.defs, f(e.body), e.pos)
    return e


def _surface_free(e: S.SExpr, bound: set) -> set:
    if isinstance(e, S.SVar):
        return set() if e.name in bound else {e.name}
    if isinstance(e, S.SConsume):
        return {n for n in e.names if n not in bound}
    if isinstance(e, S.SLet):
        names = set(e.pat) if isinstance(e.pat, tuple) else {e.pat}
        return _surface_free(e.bound, bound) | _surface_free(e.body, bound | names)
    if isinstance(e, S.SMatchList):
        return (
            _surface_free(e.scrut, bound)
            | _surface_free(e.nil_body, bound)
            | _surface_free(e.cons_body, bound | {e.head, e.tail})
        )
    if isinstance(e, S.SMatchPair):
        return _surface_free(e.scrut, bound) | _surface_free(e.body, bound | set(e.names))
    if isinstance(e, S.SLetFun):
        out = _surface_free(e.body, bound)
        for d in e.defs:
            out |= _surface_free(d.body, bound | set(d.params))
        return out
    out: set = set()
    for child in _surface_children(e):
        out |= _surface_free(child, bound)
    return out


def _surface_children(e: S.SExpr) -> Iterable[S.SExpr]:
    if isinstance(e, S.SBin):
        return (e.left, e.right)
    if isinstance(e, S.SApp):
        return tuple(e.args)
    if isinstance(e, S.SIf):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, S.STuple):
        return tuple(e.items)
    if isinstance(e, S.SCons):
        return (e.head, e.tail)
    if isinstance(e, S.SSeq):
        return (e.first, e.second)
    return ()


# Binder renaming -------------------------------------------------------------

def rename_free(e: C.Expr, old: str, new: str) -> C.Expr:
    """Rename free occurrences of ``old``.  Binders are assumed not to shadow
    ``old`` (guaranteed after :func:`uniquify`)."""

    def r(x):
        return new if x == old else x

    if isinstance(e, C.Var):
        out = C.Var(r(e.name))
    elif isinstance(e, C.BinOp):
        out = C.BinOp(e.op, r(e.x1), r(e.x2))
    elif isinstance(e, C.Pair):
        out = C.Pair(r(e.x1), r(e.x2))
    elif isinstance(e, C.App):
        out = C.App(e.fun, r(e.arg))
    elif isinstance(e, C.Cons):
        out = C.Cons(r(e.head), r(e.tail))
    elif isinstance(e, C.Consume):
        out = C.Consume(r(e.var), e.ann, e.uid)
    elif isinstance(e, C.If):
        out = C.If(r(e.cond), rename_free(e.then, old, new), rename_free(e.orelse, old, new))
    elif isinstance(e, C.Let):
        body = e.body if e.name == old else rename_free(e.body, old, new)
        out = C.Let(e.name, rename_free(e.bound, old, new), body)
    elif isinstance(e, C.MatchPair):
        body = e.body if old in (e.left, e.right) else rename_free(e.body, old, new)
        out = C.MatchPair(r(e.scrut), e.left, e.right, body)
    elif isinstance(e, C.MatchList):
        cons = e.cons_body if old in (e.head, e.tail) else rename_free(e.cons_body, old, new)
        out = C.MatchList(r(e.scrut), rename_free(e.nil_body, old, new), e.head, e.tail, cons)
    elif isinstance(e, C.Share):
        body = e.body if old in (e.left, e.right) else rename_free(e.body, old, new)
        out = C.Share(r(e.src), e.left, e.right, body)
    else:
        out = C.copy_leaf(e)
    if hasattr(e, "ty"):
        out.ty = e.ty
    return out


def uniquify(e: C.Expr, scope: set, fresh: _Fresh) -> C.Expr:
    """Rename binders that would shadow a variable already in scope."""

    def binder(x, body, scope):
        if x in scope:
            y = fresh(x)
            return y, rename_free(body, x, y)
        return x, body

    if isinstance(e, C.Let):
        bound = uniquify(e.bound, scope, fresh)
        x, body = binder(e.name, e.body, scope)
        return _keep_ty(e, C.Let(x, bound, uniquify(body, scope | {x}, fresh)))
    if isinstance(e, C.If):
        return _keep_ty(e, C.If(e.cond, uniquify(e.then, scope, fresh), uniquify(e.orelse, scope, fresh)))
    if isinstance(e, C.MatchPair):
        a, body = binder(e.left, e.body, scope)
        b, body = binder(e.right, body, scope | {a})
        return _keep_ty(e, C.MatchPair(e.scrut, a, b, uniquify(body, scope | {a, b}, fresh)))
    if isinstance(e, C.MatchList):
        h, body = binder(e.head, e.cons_body, scope)
        t, body = binder(e.tail, body, scope | {h})
        return _keep_ty(
            e,
            C.MatchList(e.scrut, uniquify(e.nil_body, scope, fresh), h, t, uniquify(body, scope | {h, t}, fresh)),
        )
    if isinstance(e, C.Share):
        a, body = binder(e.left, e.body, scope)
        b, body = binder(e.right, body, scope | {a})
        return _keep_ty(e, C.Share(e.src, a, b, uniquify(body, scope | {a, b}, fresh)))
    return e


def _keep_ty(old: C.Expr, new: C.Expr) -> C.Expr:
    if hasattr(old, "ty"):
        new.ty = old.ty
    return new


# Linearisation ---------------------------------------------------------------

def _first_use_order(parts: list, candidates: set) -> list:
    """Candidates ordered by first textual occurrence across ``parts``."""
    order: list = []
    for part in parts:
        for x in _textual_vars(part):
            if x in candidates and x not in order:
                order.append(x)
    return order


def _textual_vars(e) -> list:
    if isinstance(e, str):
        return [e]
    out = list(C._atom_uses(e))
    for c in e.children():
        out.extend(_textual_vars(c))
    return out


def _split(shared: list, fresh: _Fresh, first: list, second: list, build: Callable[[list, list], C.Expr]) -> C.Expr:
    """Share every variable in ``shared`` between two parts.  ``first`` and
    ``second`` are lists of sub-expressions / variable names; ``build`` gets
    the renamed parts back."""
    wraps = []
    for v in shared:
        v1, v2 = fresh(v), fresh(v)
        first = [_rename_part(p, v, v1) for p in first]
        second = [_rename_part(p, v, v2) for p in second]
        wraps.append((v, v1, v2))
    out = build(first, second)
    for v, v1, v2 in reversed(wraps):
        out = C.Share(v, v1, v2, out)
    return out


def _rename_part(p, old, new):
    if isinstance(p, str):
        return new if p == old else p
    return rename_free(p, old, new)


def linearize(e: C.Expr, fresh: _Fresh) -> C.Expr:
    def fv(x) -> frozenset:
        if isinstance(x, str):
            return frozenset((x,))
        return C.free_vars(x)

    def lin(e: C.Expr) -> C.Expr:
        if isinstance(e, (C.BinOp, C.Pair)) and e.x1 == e.x2:
            a, b = fresh(e.x1), fresh(e.x1)
            inner = C.BinOp(e.op, a, b) if isinstance(e, C.BinOp) else C.Pair(a, b)
            return C.Share(e.x1, a, b, inner)
        if isinstance(e, C.Cons) and e.head == e.tail:
            a, b = fresh(e.head), fresh(e.head)
            return C.Share(e.head, a, b, C.Cons(a, b))
        if isinstance(e, C.Let):
            shared = fv(e.bound) & (fv(e.body) - {e.name})
            if shared:
                order = _first_use_order([e.bound, e.body], shared)
                return lin(_split(order, fresh, [e.bound], [e.body], lambda a, b: C.Let(e.name, a[0], b[0])))
            return C.Let(e.name, lin(e.bound), lin(e.body))
        if isinstance(e, C.If):
            if e.cond in fv(e.then) | fv(e.orelse):
                return lin(_split([e.cond], fresh, [e.cond], [e.then, e.orelse], lambda a, b: C.If(a[0], b[0], b[1])))
            return C.If(e.cond, lin(e.then), lin(e.orelse))
        if isinstance(e, C.MatchList):
            if e.scrut in fv(e.nil_body) | (fv(e.cons_body) - {e.head, e.tail}):
                return lin(
                    _split(
                        [e.scrut], fresh, [e.scrut], [e.nil_body, e.cons_body],
                        lambda a, b: C.MatchList(a[0], b[0], e.head, e.tail, b[1]),
                    )
                )
            return C.MatchList(e.scrut, lin(e.nil_body), e.head, e.tail, lin(e.cons_body))
        if isinstance(e, C.MatchPair):
            if e.scrut in fv(e.body) - {e.left, e.right}:
                return lin(
                    _split([e.scrut], fresh, [e.scrut], [e.body], lambda a, b: C.MatchPair(a[0], e.left, e.right, b[0]))
                )
            return C.MatchPair(e.scrut, e.left, e.right, lin(e.body))
        if isinstance(e, C.Share):
            if e.src in fv(e.body) - {e.left, e.right}:
                return lin(_split([e.src], fresh, [e.src], [e.body], lambda a, b: C.Share(a[0], e.left, e.right, b[0])))
            return C.Share(e.src, e.left, e.right, lin(e.body))
        return e

    return lin(e)
