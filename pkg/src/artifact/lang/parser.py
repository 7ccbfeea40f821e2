"""Recursive-descent parser for the OCaml-like surface language.

The grammar follows OCaml closely with two layout conveniences that the
example listings rely on:

* ``if c then e1; e2 else e3; e4`` takes whole sequences as branches, and a
  match arm body extends over ``;`` sequences as well.
* A ``|`` that starts a line closes an inner ``match`` whose arms were
  introduced at a larger column, so nested matches can be written without
  parentheses and disambiguated by indentation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import surface as S

BINOPS = ("+", "-", "*", "div", "mod", "=", "<>", ">", "<", "<=", ">=", "and", "or")

KEYWORDS = {
    "let", "rec", "in", "if", "then", "else", "match", "with", "true", "false",
    "and", "or", "div", "mod", "tick", "consume",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<dec>\d+\.\d*|\d+/\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>::|->|<>|<=|>=|&&|\|\||\(\)|\[\]|[-+*=<>(),;\[\]|])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # int | dec | ident | kw | sym | eof
    text: str
    line: int
    col: int
    bol: bool  # first token on its line

    @property
    def pos(self):
        return (self.line, self.col)


def _strip_comments(src: str) -> str:
    # Replace (* ... *) (nested) with spaces, keeping newlines so positions survive.
    out = []
    depth = 0
    i = 0
    n = len(src)
    while i < n:
        if src.startswith("(*", i):
            depth += 1
            out.append("  ")
            i += 2
        elif depth and src.startswith("*)", i):
            depth -= 1
            out.append("  ")
            i += 2
        elif depth:
            out.append("\n" if src[i] == "\n" else " ")
            i += 1
        else:
            out.append(src[i])
            i += 1
    if depth:
        raise ParseError("unterminated comment")
    return "".join(out)


def tokenize(src: str) -> list:
    src = _strip_comments(src)
    toks = []
    line, line_start = 1, 0
    bol = True
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if not m:
            raise ParseError(f"unexpected character {src[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
            bol = True
        elif kind != "ws":
            if text == "&&":
                text = "and"
            elif text == "||":
                text = "or"
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, text, line, col, bol))
            bol = False
        i = m.end()
    toks.append(Token("eof", "", line, i - line_start + 1, True))
    return toks


_CMP = ("=", "<>", ">", "<", "<=", ">=")


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.match_stack: list = []

    # token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("sym", "kw") and t.text == text

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def binder(self) -> str:
        # identifier or wildcard
        return self.ident().text

    # program level
    def program(self) -> S.SProgram:
        defs = []
        while self.peek().kind != "eof":
            defs.extend(self.definition_group())
        return S.SProgram(defs)

    def definition_group(self) -> list:
        start = self.expect("let")
        rec = False
        if self.at("rec"):
            self.next()
            rec = True
        defs = [self.fundef(rec, start)]
        while self._at_and_def():
            tok = self.next()
            defs.append(self.fundef(True, tok))
        return defs

    def _at_and_def(self) -> bool:
        return self.at("and") and self.peek().bol and self.peek(1).kind == "ident" and (
            self.at("(", 2) or self.at("()", 2)
        )

    def fundef(self, rec: bool, start: Token) -> S.SDef:
        name = self.ident().text
        params = self.params()
        self.expect("=")
        body = self.seq()
        return S.SDef(name, params, body, rec, start.pos)

    def params(self) -> list:
        if self.at("()"):
            self.next()
            return []
        if self.peek().kind == "ident":
            return [self.next().text]
        self.expect("(")
        names = [self.binder()]
        while self.at(","):
            self.next()
            names.append(self.binder())
        self.expect(")")
        return names

    # expressions
    def seq(self) -> S.SExpr:
        first = self.stmt()
        if self.at(";"):
            tok = self.next()
            return S.SSeq(first, self.seq(), tok.pos)
        return first

    def stmt(self) -> S.SExpr:
        t = self.peek()
        if self.at("let"):
            return self.let_expr()
        if self.at("if"):
            self.next()
            cond = self.seq()
            self.expect("then")
            then = self.seq()
            self.expect("else")
            orelse = self.seq()
            return S.SIf(cond, then, orelse, t.pos)
        if self.at("match"):
            return self.match_expr()
        return self.opexpr()

    def let_expr(self) -> S.SExpr:
        start = self.expect("let")
        if self.at("rec") or (self.peek().kind == "ident" and (self.at("(", 1) or self.at("()", 1))):
            rec = False
            if self.at("rec"):
                self.next()
                rec = True
            defs = [self.fundef(rec, start)]
            while self._at_and_def():
                tok = self.next()
                defs.append(self.fundef(True, tok))
            self.expect("in")
            return S.SLetFun(defs, self.seq(), start.pos)
        if self.at("("):
            self.next()
            names = [self.binder()]
            while self.at(","):
                self.next()
                names.append(self.binder())
            self.expect(")")
            pat = tuple(names) if len(names) > 1 else names[0]
        else:
            pat = self.binder()
        self.expect("=")
        bound = self.seq()
        self.expect("in")
        return S.SLet(pat, bound, self.seq(), start.pos)

    def match_expr(self) -> S.SExpr:
        start = self.expect("match")
        scrut = self.seq()
        self.expect("with")
        entry = {"col": None}
        ancestors = list(self.match_stack)
        self.match_stack.append(entry)
        arms = []
        try:
            while True:
                t = self.peek()
                if self.at("|"):
                    if t.bol:
                        c = t.col
                        if entry["col"] is None:
                            if any(a["col"] is not None and a["col"] >= c for a in ancestors):
                                break
                            entry["col"] = c
                        elif c < entry["col"]:
                            break
                    self.next()
                elif arms:
                    break
                arms.append(self.arm())
        finally:
            self.match_stack.pop()
        return self._build_match(scrut, arms, start)

    def arm(self):
        t = self.peek()
        if self.at("[]"):
            self.next()
            pat = ("nil",)
        elif self.at("(") and not self.at("()"):
            self.next()
            names = [self.binder()]
            while self.at(","):
                self.next()
                names.append(self.binder())
            self.expect(")")
            if len(names) < 2:
                raise ParseError("pair pattern needs at least two components", t.line, t.col)
            pat = ("pair", tuple(names))
        else:
            h = self.binder()
            self.expect("::")
            tl = self.binder()
            pat = ("cons", h, tl)
        self.expect("->")
        return pat, self.seq(), t

    def _build_match(self, scrut, arms, start) -> S.SExpr:
        if not arms:
            raise ParseError("match without cases", *start.pos)
        kinds = [a[0][0] for a in arms]
        if kinds == ["pair"]:
            return S.SMatchPair(scrut, arms[0][0][1], arms[0][1], start.pos)
        if sorted(kinds) != ["cons", "nil"]:
            raise ParseError("a list match needs exactly one [] case and one :: case", *start.pos)
        nil = next(a for a in arms if a[0][0] == "nil")
        cons = next(a for a in arms if a[0][0] == "cons")
        return S.SMatchList(scrut, nil[1], cons[0][1], cons[0][2], cons[1], start.pos)

    # operator precedence, loosest first
    def opexpr(self) -> S.SExpr:
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.at("or"):
            t = self.next()
            left = S.SBin("or", left, self.and_expr(), t.pos)
        return left

    def and_expr(self):
        left = self.cmp_expr()
        while self.at("and") and not self._at_and_def():
            t = self.next()
            left = S.SBin("and", left, self.cmp_expr(), t.pos)
        return left

    def cmp_expr(self):
        left = self.cons_expr()
        while self.peek().kind == "sym" and self.peek().text in _CMP:
            t = self.next()
            left = S.SBin(t.text, left, self.cons_expr(), t.pos)
        return left

    def cons_expr(self):
        left = self.add_expr()
        if self.at("::"):
            t = self.next()
            return S.SCons(left, self.cons_expr(), t.pos)
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.at("+") or self.at("-"):
            t = self.next()
            left = S.SBin(t.text, left, self.mul_expr(), t.pos)
        return left

    def mul_expr(self):
        left = self.app_expr()
        while self.at("*") or self.at("div") or self.at("mod"):
            t = self.next()
            left = S.SBin(t.text, left, self.app_expr(), t.pos)
        return left

    def _starts_atom(self, t: Token) -> bool:
        if t.kind in ("int", "ident"):
            return True
        if t.kind == "kw" and t.text in ("true", "false", "tick", "consume"):
            return True
        return t.kind == "sym" and t.text in ("(", "()", "[", "[]")

    def app_expr(self):
        t = self.peek()
        if t.kind == "ident":
            nxt = self.peek(1)
            if self.at("(", 1) or self.at("()", 1):
                self.next()
                return S.SApp(t.text, self.call_args(), t.pos)
            if self._starts_atom(nxt) and nxt.line == t.line:
                self.next()
                arg = self.atom()
                args = arg.items if isinstance(arg, S.STuple) else [] if isinstance(arg, S.SUnit) else [arg]
                return S.SApp(t.text, args, t.pos)
        return self.atom()

    def call_args(self) -> list:
        if self.at("()"):
            self.next()
            return []
        self.expect("(")
        args = [self.seq()]
        while self.at(","):
            self.next()
            args.append(self.seq())
        self.expect(")")
        return args

    def atom(self) -> S.SExpr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return S.SInt(int(t.text), t.pos)
        if t.kind == "dec":
            raise ParseError("decimal literals are only allowed inside tick(...)", t.line, t.col)
        if self.at("-") and self.peek(1).kind == "int":
            self.next()
            n = self.next()
            return S.SInt(-int(n.text), t.pos)
        if self.at("true") or self.at("false"):
            self.next()
            return S.SBool(t.text == "true", t.pos)
        if self.at("()"):
            self.next()
            return S.SUnit(t.pos)
        if self.at("[]"):
            self.next()
            return S.SNil(t.pos)
        if self.at("["):
            self.next()
            items = [self.stmt()]
            while self.at(";"):
                self.next()
                items.append(self.stmt())
            self.expect("]")
            out: S.SExpr = S.SNil(t.pos)
            for it in reversed(items):
                out = S.SCons(it, out, t.pos)
            return out
        if self.at("("):
            self.next()
            items = [self.seq()]
            while self.at(","):
                self.next()
                items.append(self.seq())
            self.expect(")")
            return items[0] if len(items) == 1 else S.STuple(items, t.pos)
        if self.at("tick"):
            self.next()
            self.expect("(")
            neg = False
            if self.at("-"):
                self.next()
                neg = True
            num = self.next()
            if num.kind not in ("int", "dec"):
                raise ParseError("tick expects a rational literal", num.line, num.col)
            amount = Fraction(num.text)
            self.expect(")")
            return S.STick(-amount if neg else amount, t.pos)
        if self.at("consume"):
            self.next()
            self.expect("(")
            names = [self.ident().text]
            while self.at(","):
                self.next()
                names.append(self.ident().text)
            self.expect(")")
            return S.SConsume(names, t.pos)
        if t.kind == "ident":
            self.next()
            return S.SVar(t.text, t.pos)
        if t.kind == "sym" and t.text in BINOPS:
            raise ParseError(f"operator {t.text!r} is missing its left operand", t.line, t.col)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.line, t.col)


def parse(source: str) -> S.SProgram:
    """Parse a source text into a surface program."""
    prog = Parser(source).program()
    prog.source = source
    return prog


def parse_expr(source: str) -> S.SExpr:
    p = Parser(source)
    e = p.seq()
    if p.peek().kind != "eof":
        t = p.peek()
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return e
