"""Security lattices, labelled types and the resource-aware
noninterference checker.

Labels are checked, not inferred: every function carries a user-supplied
signature.  The checker computes the most precise type of each expression
(labels joined with the program counter) and, separately, whether the
expression's resource use is independent of secret inputs.  Local rules
establish that where they can; where one fails the checker asks the
constant-resource type system about that sub-expression, moving outward
until a check succeeds or the function body is reached.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .lang import core as C
from .lang.types import Atom, BaseType, ListT, PairT, BOOL, INT, UNIT, shape
from .semantics import CostModel, OracleResult, SizeSpec, build_arg, enumerate_params, Evaluator, EvalError, StepLimitExceeded


class SecurityError(Exception):
    """Ill-formed labels or signatures, or a plain information-flow
    violation."""


# Lattice ---------------------------------------------------------------------

@dataclass
class Lattice:
    labels: tuple
    order: frozenset  # pairs (a, b) with a below-or-equal b

    @staticmethod
    def from_edges(edges: Iterable, labels: Iterable = ()) -> "Lattice":
        """Build from Hasse edges ``(lower, upper)``; the reflexive and
        transitive closure is taken."""
        edges = list(edges)
        names = list(dict.fromkeys(list(labels) + [x for e in edges for x in e]))
        leq = {(a, a) for a in names} | set(edges)
        changed = True
        while changed:
            changed = False
            for a, b in list(leq):
                for c, d in list(leq):
                    if b == c and (a, d) not in leq:
                        leq.add((a, d))
                        changed = True
        for a, b in leq:
            if a != b and (b, a) in leq:
                raise SecurityError(f"labels {a} and {b} form a cycle")
        lat = Lattice(tuple(names), frozenset(leq))
        for a in names:
            for b in names:
                lat.join(a, b)  # raises if no least upper bound
        lat.bottom
        return lat

    @staticmethod
    def two_point() -> "Lattice":
        return Lattice.from_edges([("l", "h")])

    def check(self, k: str) -> str:
        if k not in self.labels:
            raise SecurityError(f"unknown label {k!r}")
        return k

    def leq(self, a: str, b: str) -> bool:
        return (self.check(a), self.check(b)) in self.order

    def join(self, a: str, b: str) -> str:
        ups = [c for c in self.labels if self.leq(a, c) and self.leq(b, c)]
        least = [c for c in ups if all(self.leq(c, d) for d in ups)]
        if len(least) != 1:
            raise SecurityError(f"labels {a} and {b} have no least upper bound")
        return least[0]

    def join_all(self, labels: Iterable[str]) -> str:
        out = self.bottom
        for k in labels:
            out = self.join(out, k)
        return out

    @property
    def bottom(self) -> str:
        lows = [a for a in self.labels if all(self.leq(a, b) for b in self.labels)]
        if len(lows) != 1:
            raise SecurityError("lattice has no bottom element")
        return lows[0]


# Security types ------------------------------------------------------------------

class SecType:
    __slots__ = ()


@dataclass(frozen=True)
class SAtom(SecType):
    base: Atom
    label: str

    def __str__(self) -> str:
        return format_sectype(self)


@dataclass(frozen=True)
class SList(SecType):
    elem: SecType
    label: str  # the length (spine) label

    def __str__(self) -> str:
        return format_sectype(self)


@dataclass(frozen=True)
class SPair(SecType):
    left: SecType
    right: SecType

    def __str__(self) -> str:
        return format_sectype(self)


def format_sectype(s: SecType) -> str:
    """Concrete syntax, e.g. ``int list @ h @ l`` for a list of ``h``
    integers whose length is ``l``."""
    spine = []
    while isinstance(s, SList):
        spine.append(s.label)
        s = s.elem
    spine.reverse()
    if isinstance(s, SAtom):
        head, labels = s.base.name, [s.label] + spine
    else:
        head, labels = f"({format_sectype(s.left)} * {format_sectype(s.right)})", spine
    return head + " list" * len(spine) + "".join(f" @ {k}" for k in labels)


def erase(s: SecType) -> BaseType:
    if isinstance(s, SAtom):
        return s.base
    if isinstance(s, SList):
        return ListT(erase(s.elem))
    return PairT(erase(s.left), erase(s.right))


def labels_of(s: SecType) -> list:
    if isinstance(s, SAtom):
        return [s.label]
    if isinstance(s, SList):
        return [s.label] + labels_of(s.elem)
    return labels_of(s.left) + labels_of(s.right)


def size_labels(s: SecType) -> list:
    """Labels that govern list lengths, i.e. the shape of a value."""
    if isinstance(s, SAtom):
        return []
    if isinstance(s, SList):
        return [s.label] + size_labels(s.elem)
    return size_labels(s.left) + size_labels(s.right)


def guard(lat: Lattice, k: str, s: SecType) -> bool:
    """``k`` is below every label of ``s``."""
    return all(lat.leq(k, x) for x in labels_of(s))


def collect(lat: Lattice, s: SecType, k: str) -> bool:
    """Every label of ``s`` is below ``k``."""
    return all(lat.leq(x, k) for x in labels_of(s))


def sec_subtype(lat: Lattice, s1: SecType, s2: SecType) -> bool:
    if erase(s1) != erase(s2):
        raise SecurityError(f"shape mismatch: {erase(s1)} vs {erase(s2)}")
    return _sub(lat, s1, s2)


def _sub(lat, s1, s2) -> bool:
    if isinstance(s1, SAtom):
        return lat.leq(s1.label, s2.label)
    if isinstance(s1, SList):
        return lat.leq(s1.label, s2.label) and _sub(lat, s1.elem, s2.elem)
    return _sub(lat, s1.left, s2.left) and _sub(lat, s1.right, s2.right)


def raise_by(lat: Lattice, s: SecType, k: str) -> SecType:
    """Join every label of ``s`` with ``k``."""
    if isinstance(s, SAtom):
        return SAtom(s.base, lat.join(s.label, k))
    if isinstance(s, SList):
        return SList(raise_by(lat, s.elem, k), lat.join(s.label, k))
    return SPair(raise_by(lat, s.left, k), raise_by(lat, s.right, k))


def join_types(lat: Lattice, a: SecType, b: SecType) -> SecType:
    if erase(a) != erase(b):
        raise SecurityError(f"shape mismatch: {erase(a)} vs {erase(b)}")
    if isinstance(a, SAtom):
        return SAtom(a.base, lat.join(a.label, b.label))
    if isinstance(a, SList):
        return SList(join_types(lat, a.elem, b.elem), lat.join(a.label, b.label))
    return SPair(join_types(lat, a.left, b.left), join_types(lat, a.right, b.right))


def uniform(t: BaseType, k: str) -> SecType:
    if isinstance(t, Atom):
        return SAtom(t, k)
    if isinstance(t, ListT):
        return SList(uniform(t.elem, k), k)
    return SPair(uniform(t.left, k), uniform(t.right, k))


@dataclass
class SecSig:
    arg: SecType
    result: SecType
    pc: str
    const: bool = False
    params: tuple = ()

    def __str__(self) -> str:
        args = _split(self.arg, len(self.params)) if len(self.params) > 1 else [self.arg]
        tail = " [const]" if self.const else ""
        return f"({', '.join(map(str, args))}) -{self.pc}-> {self.result}{tail}"


def _split(s: SecType, n: int) -> list:
    out = []
    while n > 1:
        out.append(s.left)
        s = s.right
        n -= 1
    return out + [s]


# Signature files -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(-[A-Za-z_]\w*->)|(\w+)|(\[const\])|([@(),*:{}<]))")


def _tokens(text: str) -> list:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SecurityError(f"cannot read {text[pos:pos + 12]!r}")
        out.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
    return out


def parse_sectype(text: str, lat: Optional[Lattice] = None) -> SecType:
    toks = _tokens(text)
    s, i = _sectype(toks, 0, lat)
    if i != len(toks):
        raise SecurityError(f"unexpected {toks[i]!r} in {text!r}")
    return s


def _sectype(toks: list, i: int, lat) -> tuple:
    s, i = _sec_atom(toks, i, lat)
    while i < len(toks) and toks[i] == "*":
        rhs, i = _sectype(toks, i + 1, lat)
        return SPair(s, rhs), i
    return s, i


def _sec_atom(toks: list, i: int, lat) -> tuple:
    # ``int list @ h @ l``: list layers first, then labels innermost first
    if i >= len(toks):
        raise SecurityError("unexpected end of type")
    t = toks[i]
    if t == "(":
        inner, i = _sectype(toks, i + 1, lat)
        if i >= len(toks) or toks[i] != ")":
            raise SecurityError("missing ')' in type")
        i += 1
    elif t in ("int", "bool", "unit"):
        inner, i = {"int": INT, "bool": BOOL, "unit": UNIT}[t], i + 1
    else:
        raise SecurityError(f"unexpected {t!r} in type")
    depth = 0
    while i < len(toks) and toks[i] == "list":
        depth, i = depth + 1, i + 1
    labels = []
    while i < len(toks) and toks[i] == "@":
        labels.append(_label(toks, i + 1, lat))
        i += 2
    want = depth + (0 if isinstance(inner, SecType) else 1)
    if len(labels) != want:
        raise SecurityError(f"expected {want} label(s) near {t!r}, got {len(labels)}")
    if not isinstance(inner, SecType):
        inner = SAtom(inner, labels.pop(0))
    for k in labels:
        inner = SList(inner, k)
    return inner, i


def _label(toks, i, lat) -> str:
    if i >= len(toks) or not re.match(r"\w+$", toks[i]):
        raise SecurityError("missing label")
    return lat.check(toks[i]) if lat is not None else toks[i]


def parse_signatures(text: str) -> tuple:
    """Read a signature file: an optional ``lattice { a < b, ... }`` block
    followed by lines ``f : (S1, S2) -pc-> S [const]``.  Returns
    ``(lattice, {name: SecSig})``."""
    body = re.sub(r"#[^\n]*", "", text)
    lat = Lattice.two_point()
    m = re.search(r"lattice\s*\{([^}]*)\}", body)
    if m:
        edges, labels = [], []
        for chain in re.split(r"[,;\n]", m.group(1)):
            parts = [p.strip() for p in chain.split("<") if p.strip()]
            labels += parts
            edges += list(zip(parts, parts[1:]))
        lat = Lattice.from_edges(edges, labels)
        body = body[: m.start()] + body[m.end():]
    sigs = {}
    for line in body.splitlines():
        line = line.strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        if not sep:
            raise SecurityError(f"expected 'name : type' in {line!r}")
        sigs[name.strip()] = _parse_sig(rest, lat)
    return lat, sigs


def _parse_sig(text: str, lat: Lattice) -> SecSig:
    toks = _tokens(text)
    const = toks and toks[-1] == "[const]"
    if const:
        toks = toks[:-1]
    arrow = next((i for i, t in enumerate(toks) if t.startswith("-") and t.endswith("->")), None)
    if arrow is None:
        raise SecurityError(f"missing -pc-> arrow in {text!r}")
    pc = lat.check(toks[arrow][1:-2])
    lhs, rhs = toks[:arrow], toks[arrow + 1:]
    if not lhs or lhs[0] != "(" or lhs[-1] != ")":
        raise SecurityError("argument list must be parenthesised")
    items, depth, cur = [], 0, []
    for t in lhs[1:-1]:
        if t == "," and depth == 0:
            items.append(cur)
            cur = []
            continue
        depth += (t == "(") - (t == ")")
        cur.append(t)
    if cur:
        items.append(cur)
    args = []
    for it in items:
        s, i = _sectype(it, 0, lat)
        if i != len(it):
            raise SecurityError(f"unexpected {it[i]!r} in argument type")
        args.append(s)
    res, i = _sectype(rhs, 0, lat)
    if i != len(rhs):
        raise SecurityError(f"unexpected {rhs[i]!r} in result type")
    arg = args[-1]
    for a in reversed(args[:-1]):
        arg = SPair(a, arg)
    return SecSig(arg, res, pc, bool(const), tuple(range(len(args))))


# Checker -------------------------------------------------------------------------

PLAIN, CONST, REJECT = "plain", "const", "reject"


@dataclass
class Step:
    rule: str
    where: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.rule} at {self.where}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class Verdict:
    function: str
    verdict: str
    type: Optional[SecType] = None
    reason: str = ""
    trace: list = field(default_factory=list)
    leaf_checks: list = field(default_factory=list)  # (result type, operand types) at leaves


def _describe(e: C.Expr) -> str:
    text = C.pretty(e).split("\n")[0]
    return text if len(text) <= 48 else text[:45] + "..."


class _Checker:
    def __init__(self, prog, sigs, lat, k1, model):
        self.prog, self.sigs, self.lat, self.k1, self.model = prog, sigs, lat, lat.check(k1), model
        self.trace: list = []
        self.leaves: list = []
        # let-bound variables whose size may depend on secrets; parameters
        # and what is matched out of them have public sizes by assumption
        self.secret_size: set = set()

    def low(self, s: SecType) -> bool:
        return collect(self.lat, s, self.k1)

    def sizes_low(self, s: SecType) -> bool:
        return all(self.lat.leq(k, self.k1) for k in size_labels(s))

    def check(self, e: C.Expr, ctx: dict, pc: str) -> tuple:
        """``(type, const)``; raises :class:`SecurityError` when plain
        noninterference fails."""
        s, const, failed = self._rule(e, ctx, pc)
        if const or failed is None:
            return s, const
        # a local premise failed here: try the constant-resource system
        from .infer import check_constant_expr

        fv = C.free_vars(e)
        hidden = sorted(x for x in fv if not self.low(ctx[x]))
        unsized = [x for x in hidden if x in self.secret_size]
        if unsized:
            self.trace.append(Step("no-const", _describe(e), f"size of {', '.join(unsized)} may depend on secrets"))
            return s, False
        types = {x: erase(ctx[x]) for x in fv}
        if check_constant_expr(self.prog, e, types, hidden, self.model):
            self.trace.append(Step("C-Gen", _describe(e), "constant w.r.t. {" + ", ".join(hidden) + "}"))
            return s, True
        self.trace.append(Step("no-const", _describe(e), failed))
        return s, False

    def _rule(self, e, ctx, pc) -> tuple:
        lat = self.lat
        if isinstance(e, (C.Unit, C.BoolLit, C.IntLit)):
            return SAtom(e.ty, pc), True, None
        if isinstance(e, C.Var):
            s = raise_by(lat, ctx[e.name], pc)
            self.leaves.append((s, [ctx[e.name]]))
            return s, True, None
        if isinstance(e, C.BinOp):
            a, b = ctx[e.x1], ctx[e.x2]
            s = SAtom(e.ty, lat.join_all([a.label, b.label, pc]))
            self.leaves.append((s, [a, b]))
            return s, True, None
        if isinstance(e, C.Pair):
            # no pc join: pairing creates no information, and every
            # branch result is joined with pc anyway
            a, b = ctx[e.x1], ctx[e.x2]
            s = SPair(a, b)
            self.leaves.append((s, [a, b]))
            return s, True, None
        if isinstance(e, C.Nil):
            return uniform(e.ty, pc), True, None
        if isinstance(e, C.Cons):
            h, t = ctx[e.head], ctx[e.tail]
            s = raise_by(lat, SList(join_types(lat, h, t.elem), t.label), pc)
            self.leaves.append((s, [h, t]))
            return s, True, None
        if isinstance(e, C.Tick):
            return SAtom(UNIT, pc), True, None
        if isinstance(e, C.Consume):
            ok = self.sizes_low(ctx[e.var])
            return SAtom(UNIT, pc), ok, None if ok else f"size of {e.var} is not public"
        if isinstance(e, C.App):
            sig = self.sigs.get(e.fun)
            if sig is None:
                raise SecurityError(f"no security signature for {e.fun}")
            a = ctx[e.arg]
            if not sec_subtype(lat, a, sig.arg):
                raise SecurityError(f"argument of {e.fun} has type {a}, expected {sig.arg}")
            s = raise_by(lat, sig.result, pc)
            if self.low(a):
                self.trace.append(Step("L-Arg", _describe(e)))
                return s, True, None
            if sig.const and self.sizes_low(a):
                self.trace.append(Step("C-Fun", _describe(e)))
                return s, True, None
            return s, False, f"call to {e.fun} on secret data"
        if isinstance(e, C.Let):
            s1, c1 = self.check(e.bound, ctx, pc)
            if not self.sizes_low(s1):
                self.secret_size.add(e.name)
            s2, c2 = self.check(e.body, {**ctx, e.name: s1}, pc)
            if c1 and c2 and self.low(s1):
                return s2, True, None
            why = f"{e.name} depends on secrets" if not self.low(s1) else "a part is not constant"
            return s2, False, why
        if isinstance(e, C.If):
            k = ctx[e.cond].label
            inner = lat.join(pc, k)
            s1, c1 = self.check(e.then, ctx, inner)
            s2, c2 = self.check(e.orelse, ctx, inner)
            s = raise_by(lat, join_types(lat, s1, s2), inner)
            if c1 and c2 and lat.leq(k, self.k1):
                self.trace.append(Step("L-If", _describe(e)))
                return s, True, None
            return s, False, f"branch on {e.cond}" if not lat.leq(k, self.k1) else "a branch is not constant"
        if isinstance(e, C.MatchList):
            lst = ctx[e.scrut]
            k = lst.label
            inner = lat.join(pc, k)
            s1, c1 = self.check(e.nil_body, ctx, inner)
            if e.scrut in self.secret_size:
                self.secret_size.update((e.head, e.tail))
            s2, c2 = self.check(e.cons_body, {**ctx, e.head: lst.elem, e.tail: lst}, inner)
            s = raise_by(lat, join_types(lat, s1, s2), inner)
            if c1 and c2 and lat.leq(k, self.k1):
                self.trace.append(Step("C-Match-L", _describe(e)))
                return s, True, None
            return s, False, f"match on the length of {e.scrut}" if not lat.leq(k, self.k1) else "a branch is not constant"
        if isinstance(e, C.MatchPair):
            p = ctx[e.scrut]
            if e.scrut in self.secret_size:
                self.secret_size.update((e.left, e.right))
            s, c = self.check(e.body, {**ctx, e.left: p.left, e.right: p.right}, pc)
            return s, c, None if c else "body is not constant"
        if isinstance(e, C.Share):
            a = ctx[e.src]
            if e.src in self.secret_size:
                self.secret_size.update((e.left, e.right))
            s, c = self.check(e.body, {**ctx, e.left: a, e.right: a}, pc)
            return s, c, None if c else "body is not constant"
        raise SecurityError(f"no security rule for {type(e).__name__}")


def check_function(prog: C.Program, fname: str, sigs: dict, lat: Lattice, k1: str, model: CostModel) -> Verdict:
    f = prog[fname]
    sig = sigs.get(fname)
    if sig is None:
        raise SecurityError(f"no security signature for {fname}")
    _check_shape(f, sig)
    ck = _Checker(prog, sigs, lat, k1, model)
    try:
        s, const = ck.check(f.body, {f.arg: sig.arg}, sig.pc)
    except SecurityError as err:
        return Verdict(fname, REJECT, None, str(err), ck.trace, ck.leaves)
    if not sec_subtype(lat, s, sig.result):
        return Verdict(fname, REJECT, s, f"body has type {s}, declared {sig.result}", ck.trace, ck.leaves)
    if const:
        return Verdict(fname, CONST, s, "", ck.trace, ck.leaves)
    if sig.const:
        return Verdict(fname, REJECT, s, "declared const but resource use depends on secrets", ck.trace, ck.leaves)
    return Verdict(fname, PLAIN, s, "resource use may depend on secrets", ck.trace, ck.leaves)


def _check_shape(f: C.FunDef, sig: SecSig) -> None:
    if erase(sig.arg) != f.ftype.arg or erase(sig.result) != f.ftype.result:
        raise SecurityError(
            f"signature of {f.name} does not match its type {f.ftype}: "
            f"{erase(sig.arg)} -> {erase(sig.result)}"
        )


def check_security(prog: C.Program, sigs: dict, lat: Lattice, k1: str, model: CostModel,
                   functions: Optional[Iterable] = None) -> dict:
    """Verdict per function (all functions that have a signature, unless
    ``functions`` selects some)."""
    names = list(functions) if functions is not None else [n for n in prog.funs if n in sigs]
    return {n: check_function(prog, n, sigs, lat, k1, model) for n in names}


# Oracle --------------------------------------------------------------------------

def param_sectypes(f: C.FunDef, sig: SecSig) -> dict:
    out = {}
    for name, path in f.param_paths.items():
        s = sig.arg
        for step in path:
            s = s.left if step == "L" else s.right
        out[name] = s
    return out


def noninterference_oracle(prog: C.Program, fname: str, sigs: dict, lat: Lattice, k1: str, spec: SizeSpec,
                           model: CostModel, resource: bool = True) -> OracleResult:
    """Brute force over environments: runs that agree on every parameter
    whose type collects to ``k1`` and have the same shapes elsewhere must
    have equal net cost (when ``resource``) and, if the result type
    collects to ``k1``, equal results."""
    f = prog[fname]
    sig = sigs[fname]
    types = param_sectypes(f, sig)
    low = [p for p in f.params if collect(lat, types[p], k1)]
    others = [p for p in f.params if p not in low]
    compare_values = collect(lat, sig.result, k1)
    ev = Evaluator(prog, model)
    seen: dict = {}
    count = 0
    for params in enumerate_params(f, spec):
        try:
            out = ev.call(fname, build_arg(f, params))
        except StepLimitExceeded:
            raise
        except EvalError:
            continue
        count += 1
        key = (tuple(repr(params[p]) for p in low), tuple(shape(params[p]) for p in others))
        if key not in seen:
            seen[key] = (params, out)
            continue
        p0, o0 = seen[key]
        if (resource and o0.net != out.net) or (compare_values and o0.value != out.value):
            return OracleResult(False, ((p0, o0.net, o0.value), (params, out.net, out.value)), count)
    return OracleResult(True, None, count)
