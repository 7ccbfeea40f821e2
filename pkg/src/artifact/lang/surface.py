"""Surface syntax tree produced by the parser."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

Pos = tuple  # (line, column), both 1-based


@dataclass
class SExpr:
    pass


@dataclass
class SUnit(SExpr):
    pos: Pos = (0, 0)


@dataclass
class SBool(SExpr):
    value: bool
    pos: Pos = (0, 0)


@dataclass
class SInt(SExpr):
    value: int
    pos: Pos = (0, 0)


@dataclass
class SVar(SExpr):
    name: str
    pos: Pos = (0, 0)


@dataclass
class SBin(SExpr):
    op: str
    left: SExpr
    right: SExpr
    pos: Pos = (0, 0)


@dataclass
class SApp(SExpr):
    fun: str
    args: list
    pos: Pos = (0, 0)


# A let pattern is a name (possibly "_") or a tuple of names.
LetPat = Union[str, tuple]


@dataclass
class SLet(SExpr):
    pat: LetPat
    bound: SExpr
    body: SExpr
    pos: Pos = (0, 0)


@dataclass
class SLetFun(SExpr):
    defs: list  # list[SDef]
    body: SExpr
    pos: Pos = (0, 0)


@dataclass
class SIf(SExpr):
    cond: SExpr
    then: SExpr
    orelse: SExpr
    pos: Pos = (0, 0)


@dataclass
class SMatchList(SExpr):
    scrut: SExpr
    nil_body: SExpr
    head: str
    tail: str
    cons_body: SExpr
    pos: Pos = (0, 0)


@dataclass
class SMatchPair(SExpr):
    scrut: SExpr
    names: tuple
    body: SExpr
    pos: Pos = (0, 0)


@dataclass
class STuple(SExpr):
    items: list
    pos: Pos = (0, 0)


@dataclass
class SNil(SExpr):
    pos: Pos = (0, 0)


@dataclass
class SCons(SExpr):
    head: SExpr
    tail: SExpr
    pos: Pos = (0, 0)


@dataclass
class STick(SExpr):
    amount: Fraction
    pos: Pos = (0, 0)


@dataclass
class SConsume(SExpr):
    names: list
    pos: Pos = (0, 0)


@dataclass
class SSeq(SExpr):
    first: SExpr
    second: SExpr
    pos: Pos = (0, 0)


@dataclass
class SDef:
    name: str
    params: list
    body: SExpr
    recursive: bool = True
    pos: Pos = (0, 0)


@dataclass
class SProgram:
    defs: list = field(default_factory=list)
    source: Optional[str] = None

    def names(self) -> list:
        return [d.name for d in self.defs]
