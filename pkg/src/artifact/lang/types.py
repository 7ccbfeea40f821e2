"""Base types and runtime values.

Values use plain Python objects where possible so the evaluator stays fast:
``None`` is unit, ``bool`` and ``int`` are themselves, a list value is a
``tuple`` of elements and a pair is a :class:`PairV`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


class BaseType:
    __slots__ = ()

    def is_atom(self) -> bool:
        return isinstance(self, Atom)


@dataclass(frozen=True)
class Atom(BaseType):
    name: str  # "unit" | "bool" | "int"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ListT(BaseType):
    elem: BaseType

    def __str__(self) -> str:
        return f"L({self.elem})"


@dataclass(frozen=True)
class PairT(BaseType):
    left: BaseType
    right: BaseType

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


UNIT = Atom("unit")
BOOL = Atom("bool")
INT = Atom("int")


@dataclass(frozen=True)
class FunType:
    arg: BaseType
    result: BaseType

    def __str__(self) -> str:
        return f"{self.arg} -> {self.result}"


@dataclass(frozen=True)
class PairV:
    fst: "Value"
    snd: "Value"


Value = Union[None, bool, int, tuple, PairV]


class ValueTypeError(TypeError):
    pass


def value_wellformed(v: Value, t: BaseType) -> bool:
    """True iff ``v`` is a well-formed value of base type ``t``."""
    if isinstance(t, Atom):
        if t.name == "unit":
            return v is None
        if t.name == "bool":
            return isinstance(v, bool)
        return isinstance(v, int) and not isinstance(v, bool)
    if isinstance(t, ListT):
        return isinstance(v, tuple) and all(value_wellformed(x, t.elem) for x in v)
    if isinstance(t, PairT):
        return isinstance(v, PairV) and value_wellformed(v.fst, t.left) and value_wellformed(v.snd, t.right)
    return False


def size_equivalent(v1: Value, v2: Value, t: BaseType | None = None) -> bool:
    """Structural size equivalence: atoms always agree, lists need equal
    lengths and pointwise equivalent elements, pairs go componentwise."""
    if t is not None and not (value_wellformed(v1, t) and value_wellformed(v2, t)):
        raise ValueTypeError(f"values are not both of type {t}")
    return shape(v1) == shape(v2)


def shape(v: Value):
    """Canonical hashable size skeleton; two values are size equivalent
    exactly when their shapes are equal."""
    if isinstance(v, tuple):
        return tuple(shape(x) for x in v)
    if isinstance(v, PairV):
        return ("*", shape(v.fst), shape(v.snd))
    return None


def format_value(v: Value) -> str:
    if v is None:
        return "()"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return "[" + "; ".join(format_value(x) for x in v) + "]"
    if isinstance(v, PairV):
        return f"({format_value(v.fst)}, {format_value(v.snd)})"
    raise ValueTypeError(f"not a value: {v!r}")


def to_json_value(v: Value):
    if isinstance(v, tuple):
        return [to_json_value(x) for x in v]
    if isinstance(v, PairV):
        return {"fst": to_json_value(v.fst), "snd": to_json_value(v.snd)}
    return v


def list_depth(t: BaseType) -> int:
    """Number of list layers along the deepest path of ``t``."""
    if isinstance(t, ListT):
        return 1 + list_depth(t.elem)
    if isinstance(t, PairT):
        return max(list_depth(t.left), list_depth(t.right))
    return 0
