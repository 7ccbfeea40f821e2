"""Resource-annotated types and the potential function.

An annotation is a :class:`~artifact.lp.LinExpr`: a concrete rational is a
constant expression, an unsolved annotation is a single LP variable.  The
same code therefore computes potentials of concrete types (for the
oracles) and emits constraints for inference.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional, Union

from .lang.types import Atom, BaseType, ListT, PairT, Value, ValueTypeError, value_wellformed
from .lp import Constraint, LinExpr, EQ, GE, LE


class AnnType:
    __slots__ = ()


@dataclass(eq=False)
class AAtom(AnnType):
    base: Atom

    def __repr__(self) -> str:
        return self.base.name


@dataclass(eq=False)
class AList(AnnType):
    elem: AnnType
    ann: LinExpr

    def __post_init__(self):
        self.ann = LinExpr.lift(self.ann)

    def __repr__(self) -> str:
        return format_anntype(self)


@dataclass(eq=False)
class APair(AnnType):
    left: AnnType
    right: AnnType

    def __repr__(self) -> str:
        return format_anntype(self)


@dataclass(eq=False)
class AnnSig:
    arg: AnnType
    result: AnnType
    q: LinExpr
    q_out: LinExpr

    def __post_init__(self):
        self.q = LinExpr.lift(self.q)
        self.q_out = LinExpr.lift(self.q_out)


AnnContext = dict  # variable name -> AnnType


class ShapeError(ValueError):
    pass


# Construction ---------------------------------------------------------------

def annotate(t: BaseType, ann: Callable[[int], object]) -> AnnType:
    """Decorate ``t``; ``ann(depth)`` supplies each list annotation, where
    depth counts enclosing list layers (0 for an outermost list)."""

    def go(t, depth):
        if isinstance(t, Atom):
            return AAtom(t)
        if isinstance(t, ListT):
            return AList(go(t.elem, depth + 1), LinExpr.lift(ann(depth)))
        if isinstance(t, PairT):
            return APair(go(t.left, depth), go(t.right, depth))
        raise ShapeError(f"not a base type: {t!r}")

    return go(t, 0)


def zero(t: BaseType) -> AnnType:
    return annotate(t, lambda d: 0)


def const_list(elem: AnnType, *anns) -> AnnType:
    """``L^p1(L^p2(...elem))`` for concrete annotations, outermost first."""
    out = elem
    for a in reversed(anns):
        out = AList(out, LinExpr.lift(Fraction(a)))
    return out


def erase(a: AnnType) -> BaseType:
    if isinstance(a, AAtom):
        return a.base
    if isinstance(a, AList):
        return ListT(erase(a.elem))
    if isinstance(a, APair):
        return PairT(erase(a.left), erase(a.right))
    raise ShapeError(f"not an annotated type: {a!r}")


def layers(a: AnnType, depth: int = 0, path: tuple = ()) -> Iterator[tuple]:
    """Yield ``(path, depth, annotation)`` for every list layer.  Paths use
    "L"/"R" for pair components and "E" for a list element."""
    if isinstance(a, AList):
        yield path, depth, a.ann
        yield from layers(a.elem, depth + 1, path + ("E",))
    elif isinstance(a, APair):
        yield from layers(a.left, depth, path + ("L",))
        yield from layers(a.right, depth, path + ("R",))


def annotations(a: AnnType) -> list:
    return [ann for _, _, ann in layers(a)]


def substitute(a: AnnType, values: dict) -> AnnType:
    """Plug solved variable values into every annotation."""
    if isinstance(a, AAtom):
        return a
    if isinstance(a, AList):
        return AList(substitute(a.elem, values), a.ann.substitute(values))
    return APair(substitute(a.left, values), substitute(a.right, values))


def is_concrete(a: AnnType) -> bool:
    return all(x.is_const() for x in annotations(a))


def same_shape(a: AnnType, b: AnnType) -> bool:
    return erase(a) == erase(b)


def _check_shape(*types: AnnType) -> None:
    base = erase(types[0])
    for t in types[1:]:
        if erase(t) != base:
            raise ShapeError(f"shape mismatch: {base} vs {erase(t)}")


# Potential ---------------------------------------------------------------

def _concrete(ann: LinExpr, values: Optional[dict]) -> Fraction:
    if values is not None:
        return ann.evaluate(values)
    if not ann.is_const():
        raise ValueError("annotation is not concrete; pass a solution")
    return ann.const


def phi_value(v: Value, a: AnnType, values: Optional[dict] = None) -> Fraction:
    """Potential of ``v`` at annotated type ``a``.  ``values`` resolves
    symbolic annotations."""
    if not value_wellformed(v, erase(a)):
        raise ValueTypeError(f"value {v!r} is not of type {erase(a)}")
    return _phi(v, a, values)


def _phi(v, a, values) -> Fraction:
    if isinstance(a, AAtom):
        return Fraction(0)
    if isinstance(a, APair):
        return _phi(v.fst, a.left, values) + _phi(v.snd, a.right, values)
    p = _concrete(a.ann, values)
    total = p * len(v)
    if _has_lists(a.elem):
        for x in v:
            total += _phi(x, a.elem, values)
    return total


def _has_lists(a: AnnType) -> bool:
    if isinstance(a, AAtom):
        return False
    if isinstance(a, AList):
        return True
    return _has_lists(a.left) or _has_lists(a.right)


def phi_symbolic(v: Value, a: AnnType) -> LinExpr:
    """Potential as a linear expression in the annotation variables."""
    if isinstance(a, AAtom):
        return LinExpr()
    if isinstance(a, APair):
        return phi_symbolic(v.fst, a.left) + phi_symbolic(v.snd, a.right)
    total = a.ann * len(v)
    for x in v:
        total = total + phi_symbolic(x, a.elem)
    return total


def phi_context(env: dict, ctx: AnnContext, names=None, values: Optional[dict] = None) -> Fraction:
    """Sum of potentials of the variables in ``names`` (default: all of
    ``ctx``)."""
    names = ctx.keys() if names is None else names
    total = Fraction(0)
    for x in names:
        if x not in env:
            raise KeyError(f"variable {x} missing from the environment")
        if x not in ctx:
            raise KeyError(f"variable {x} missing from the context")
        total += phi_value(env[x], ctx[x], values)
    return total


# Constraints ---------------------------------------------------------------

def share_constraints(a: AnnType, a1: AnnType, a2: AnnType) -> list:
    """Sharing: every list layer of ``a`` splits as the sum of ``a1``'s
    and ``a2``'s layer."""
    _check_shape(a, a1, a2)
    out = []
    for (path, _, p), (_, _, p1), (_, _, p2) in zip(layers(a), layers(a1), layers(a2)):
        out.append(Constraint(p, EQ, p1 + p2, "share " + "".join(path)))
    return out


def subtype_constraints(a: AnnType, b: AnnType, direction: str = "le") -> list:
    """Layerwise comparison of ``a`` against ``b``.  ``"le"`` states
    ``a <: b`` (every annotation of ``a`` at most that of ``b``), ``"ge"``
    the reverse and ``"eq"`` equality."""
    _check_shape(a, b)
    rel = {"le": LE, "ge": GE, "eq": EQ}[direction]
    return [Constraint(pa, rel, pb, "subtype") for (_, _, pa), (_, _, pb) in zip(layers(a), layers(b))]


def is_subtype(a: AnnType, b: AnnType) -> bool:
    """Concrete check of ``a <: b``."""
    return all(c.holds({}) for c in subtype_constraints(a, b, "le"))


# Formatting -----------------------------------------------------------------

def _fmt(q: Union[LinExpr, Fraction]) -> str:
    if isinstance(q, LinExpr):
        if not q.is_const():
            return "{" + repr(q) + "}"
        q = q.const
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_anntype(a: AnnType) -> str:
    if isinstance(a, AAtom):
        return a.base.name
    if isinstance(a, AList):
        return f"L^{_fmt(a.ann)}({format_anntype(a.elem)})"
    return f"({format_anntype(a.left)}, {format_anntype(a.right)})"


def split_params(a: AnnType, count: int) -> list:
    """Undo the right-nested pairing of a multi-parameter argument."""
    out = []
    while count > 1:
        out.append(a.left)
        a = a.right
        count -= 1
    out.append(a)
    return out


def format_sig(sig: AnnSig, nparams: int = 1) -> str:
    """``(L^5(int), L^0(int)) --1/0--> bool`` style rendering."""
    if nparams > 1 and isinstance(sig.arg, APair):
        arg = "(" + ", ".join(format_anntype(x) for x in split_params(sig.arg, nparams)) + ")"
    else:
        arg = format_anntype(sig.arg)
    return f"{arg} --{_fmt_budget(sig.q)}/{_fmt_budget(sig.q_out)}--> {format_anntype(sig.result)}"


def _fmt_budget(q) -> str:
    # parenthesised when fractional so that "q/q'" stays unambiguous
    text = _fmt(q)
    return f"({text})" if "/" in text else text


def parse_anntype(text: str) -> AnnType:
    """Inverse of :func:`format_anntype` for concrete types, e.g.
    ``L^5(int)`` or ``(L^5(int), L^0(int))``."""
    pos = 0
    s = text.replace(" ", "")

    def number():
        nonlocal pos
        start = pos
        while pos < len(s) and (s[pos].isdigit() or s[pos] in "/-."):
            pos += 1
        return Fraction(s[start:pos])

    def expect(tok):
        nonlocal pos
        if not s.startswith(tok, pos):
            raise ValueError(f"expected {tok!r} at {pos} in {text!r}")
        pos += len(tok)

    def go():
        nonlocal pos
        for name in ("unit", "bool", "int"):
            if s.startswith(name, pos):
                pos += len(name)
                return AAtom(Atom(name))
        if s.startswith("L^", pos):
            pos += 2
            p = number()
            expect("(")
            inner = go()
            expect(")")
            return AList(inner, p)
        expect("(")
        items = [go()]
        while s.startswith(",", pos):
            pos += 1
            items.append(go())
        expect(")")
        out = items[-1]
        for x in reversed(items[:-1]):
            out = APair(x, out)
        return out

    out = go()
    if pos != len(s):
        raise ValueError(f"trailing text in {text!r}")
    return out


def parse_sig(text: str) -> AnnSig:
    """Parse ``ARG --q/q'--> RESULT``."""
    left, rest = text.split("--", 1)
    budget, result = rest.split("-->", 1)
    m = re.fullmatch(r"\s*(\([^()]*\)|[^/()]+)/(\([^()]*\)|[^/()]+)\s*", budget)
    if m is None:
        raise ValueError(f"budget {budget!r} must read q/q' (fractions in parentheses)")
    q, q_out = (Fraction(g.strip("()")) for g in m.groups())
    return AnnSig(parse_anntype(left.strip()), parse_anntype(result.strip()), q, q_out)

