"""Big-step cost semantics and the brute-force oracles built on it.

Expressions are compiled once into nested closures; a run threads a small
mutable state ``[net, highwater, calls_left]`` through them.  ``net`` is
the running total of consumed resources and ``highwater`` its maximum so
far (starting at 0), which is the least initial budget that keeps the
counter nonnegative.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional

from .lang import core as C
from .lang.types import Atom, BaseType, ListT, PairT, PairV, Value, shape
from .potential import AnnType, phi_value

RULES = (
    "unit", "bool", "int", "var", "op", "app", "let", "cond",
    "pair", "matchP", "nil", "cons", "matchN", "matchL",
)


@dataclass
class CostModel:
    """Rule constants plus per-operator overrides for the ``op`` rule."""

    name: str = "custom"
    constants: dict = field(default_factory=dict)
    tick: bool = True
    op_costs: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.constants) - set(RULES)
        if unknown:
            raise ValueError(f"unknown cost rule(s): {sorted(unknown)}")
        self.constants = {r: Fraction(self.constants.get(r, 0)) for r in RULES}
        self.op_costs = {op: Fraction(k) for op, k in self.op_costs.items()}

    def k(self, rule: str) -> Fraction:
        return self.constants[rule]

    def op(self, op: str) -> Fraction:
        return self.op_costs.get(op, self.constants["op"])

    def tick_cost(self, amount: Fraction) -> Fraction:
        return Fraction(amount) if self.tick else Fraction(0)

    def integral(self, prog: Optional[C.Program] = None) -> bool:
        """All constants (and, given a program, all honoured ticks) are
        integers, so every run cost is an integer."""
        nums = list(self.constants.values()) + list(self.op_costs.values())
        if prog is not None and self.tick:
            nums += [e.amount for f in prog.funs.values() for e in C.walk(f.body) if isinstance(e, C.Tick)]
        return all(Fraction(x).denominator == 1 for x in nums)


def metric(name: str) -> CostModel:
    """The shipped metrics.  ``steps`` is our own model: one unit per
    evaluation rule."""
    if name == "tick":
        return CostModel("tick", {}, tick=True)
    if name == "steps":
        return CostModel("steps", {r: 1 for r in RULES}, tick=False)
    if name == "calls":
        return CostModel("calls", {"app": 1}, tick=False)
    if name == "mults":
        return CostModel("mults", {}, tick=False, op_costs={"*": 1})
    raise ValueError(f"unknown metric {name!r} (expected tick, steps, calls or mults)")


METRICS = ("tick", "steps", "calls", "mults")


@dataclass(frozen=True)
class EvalOutcome:
    value: Value
    net: Fraction
    highwater: Fraction


class EvalError(Exception):
    pass


class StepLimitExceeded(EvalError):
    pass


def _num(q: Fraction):
    """Keep integral costs as ints; the arithmetic is much faster."""
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else q


def _ocaml_div(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def _ocaml_mod(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("modulo by zero")
    return a - b * _ocaml_div(a, b)


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": _ocaml_div,
    "mod": _ocaml_mod,
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
}


def _charge(st: list, k) -> None:
    n = st[0] + k
    st[0] = n
    if n > st[1]:
        st[1] = n


class Evaluator:
    """Compiled evaluator for one program under one cost model."""

    def __init__(self, prog: Optional[C.Program], model: CostModel, max_calls: int = 10**7,
                 unelaborated_consume: str = "error"):
        if unelaborated_consume not in ("error", "free"):
            raise ValueError("unelaborated_consume must be 'error' or 'free'")
        self.prog = prog
        self.model = model
        self.max_calls = max_calls
        self.unelaborated_consume = unelaborated_consume
        self._funs: dict = {}

    # public API

    def call(self, fname: str, arg: Value) -> EvalOutcome:
        fn = self._function(fname)
        st = [0, 0, self.max_calls]
        with _deep_recursion():
            value = fn(arg, st)
        return EvalOutcome(value, Fraction(st[0]), Fraction(st[1]))

    def expr(self, e: C.Expr, env: dict) -> EvalOutcome:
        fn = self._compile(e)
        st = [0, 0, self.max_calls]
        with _deep_recursion():
            value = fn(dict(env), st)
        return EvalOutcome(value, Fraction(st[0]), Fraction(st[1]))

    # compilation

    def _function(self, name: str) -> Callable:
        if name in self._funs:
            return self._funs[name]
        if self.prog is None or name not in self.prog.funs:
            raise EvalError(f"call to undefined function {name}")
        f = self.prog.funs[name]
        arg = f.arg
        cell: list = []

        def run(v, st):
            return cell[0]({arg: v}, st)

        self._funs[name] = run
        cell.append(self._compile(f.body))
        return run

    def _compile(self, e: C.Expr) -> Callable:
        m = self.model
        if isinstance(e, (C.Unit, C.BoolLit, C.IntLit, C.Nil)):
            rule = {C.Unit: "unit", C.BoolLit: "bool", C.IntLit: "int", C.Nil: "nil"}[type(e)]
            v = {C.Unit: None, C.Nil: ()}.get(type(e), getattr(e, "value", None))
            return self._leaf(_num(m.k(rule)), lambda env: v)
        if isinstance(e, C.Var):
            x = e.name
            return self._leaf(_num(m.k("var")), lambda env: _lookup(env, x))
        if isinstance(e, C.BinOp):
            op, x1, x2 = _OPS[e.op], e.x1, e.x2
            return self._leaf(_num(m.op(e.op)), lambda env: op(_lookup(env, x1), _lookup(env, x2)))
        if isinstance(e, C.Pair):
            x1, x2 = e.x1, e.x2
            return self._leaf(_num(m.k("pair")), lambda env: PairV(_lookup(env, x1), _lookup(env, x2)))
        if isinstance(e, C.Cons):
            h, t = e.head, e.tail
            return self._leaf(_num(m.k("cons")), lambda env: (_lookup(env, h),) + _lookup(env, t))
        if isinstance(e, C.Tick):
            k = _num(m.tick_cost(e.amount))

            def tick(env, st):
                if k:
                    _charge(st, k)
                return None

            return tick
        if isinstance(e, C.Consume):
            return self._consume(e)
        if isinstance(e, C.App):
            return self._app(e)
        if isinstance(e, C.Let):
            k = _num(m.k("let"))
            name, bound, body = e.name, self._compile(e.bound), self._compile(e.body)

            def let(env, st):
                if k:
                    _charge(st, k)
                env[name] = bound(env, st)
                return body(env, st)

            return let
        if isinstance(e, C.If):
            k = _num(m.k("cond"))
            x, then, orelse = e.cond, self._compile(e.then), self._compile(e.orelse)

            def cond(env, st):
                if k:
                    _charge(st, k)
                return then(env, st) if _lookup(env, x) else orelse(env, st)

            return cond
        if isinstance(e, C.MatchPair):
            k = _num(m.k("matchP"))
            x, l, r, body = e.scrut, e.left, e.right, self._compile(e.body)

            def match_pair(env, st):
                if k:
                    _charge(st, k)
                v = _lookup(env, x)
                env[l] = v.fst
                env[r] = v.snd
                return body(env, st)

            return match_pair
        if isinstance(e, C.MatchList):
            kn, kc = _num(m.k("matchN")), _num(m.k("matchL"))
            x, h, t = e.scrut, e.head, e.tail
            nil_body, cons_body = self._compile(e.nil_body), self._compile(e.cons_body)

            def match_list(env, st):
                v = _lookup(env, x)
                if not v:
                    if kn:
                        _charge(st, kn)
                    return nil_body(env, st)
                if kc:
                    _charge(st, kc)
                env[h] = v[0]
                env[t] = v[1:]
                return cons_body(env, st)

            return match_list
        if isinstance(e, C.Share):
            x, l, r, body = e.src, e.left, e.right, self._compile(e.body)

            def share(env, st):
                v = _lookup(env, x)
                env[l] = v
                env[r] = v
                return body(env, st)

            return share
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    @staticmethod
    def _leaf(k, compute: Callable) -> Callable:
        if not k:
            return lambda env, st: compute(env)

        def leaf(env, st):
            _charge(st, k)
            return compute(env)

        return leaf

    def _app(self, e: C.App) -> Callable:
        k = _num(self.model.k("app"))
        fname, x = e.fun, e.arg
        holder: list = []

        def app(env, st):
            if not holder:
                holder.append(self._function(fname))
            st[2] -= 1
            if st[2] < 0:
                raise StepLimitExceeded(f"call limit of {self.max_calls} exceeded")
            if k:
                _charge(st, k)
            return holder[0](_lookup(env, x), st)

        return app

    def _consume(self, e: C.Consume) -> Callable:
        x = e.var
        if e.ann is None:
            if self.unelaborated_consume == "free":
                return lambda env, st: None

            def missing(env, st):
                raise EvalError(f"consume({x}) has no (A, p) annotation; run repair first")

            return missing
        ann, p = e.ann
        p = _num(Fraction(p.const) if hasattr(p, "const") else p)

        def consume(env, st):
            k = _num(phi_value(_lookup(env, x), ann) + p)
            if k:
                _charge(st, k)
            return None

        return consume


def _lookup(env: dict, x: str):
    try:
        return env[x]
    except KeyError:
        raise EvalError(f"unbound variable {x}") from None


class _deep_recursion:
    """Raise the interpreter recursion limit for the duration of a run."""

    LIMIT = 200_000

    def __enter__(self):
        self.old = sys.getrecursionlimit()
        if self.old < self.LIMIT:
            sys.setrecursionlimit(self.LIMIT)

    def __exit__(self, *exc):
        sys.setrecursionlimit(self.old)
        return False


def evaluate(env: dict, e: C.Expr, model: CostModel, prog: Optional[C.Program] = None, **kw) -> EvalOutcome:
    """Evaluate ``e`` in ``env``; ``prog`` supplies called functions."""
    return Evaluator(prog, model, **kw).expr(e, env)


def check_judgement(env: dict, budget, e: C.Expr, model: CostModel,
                    prog: Optional[C.Program] = None) -> Optional[Fraction]:
    """The residual budget if ``e`` runs to completion starting with
    ``budget`` resources, otherwise ``None``."""
    out = evaluate(env, e, model, prog)
    budget = Fraction(budget)
    if budget < out.highwater:
        return None
    return budget - out.net


# Arguments and environments ------------------------------------------------------

def build_arg(f: C.FunDef, params: dict) -> Value:
    """Assemble the single (pair-nested) argument value from named
    parameters."""
    if not f.param_paths:
        return None
    if list(f.param_paths.values()) == [()]:
        return params[f.params[0]]

    def build(prefix):
        for name, path in f.param_paths.items():
            if path == prefix:
                return params[name]
        return PairV(build(prefix + ("L",)), build(prefix + ("R",)))

    return build(())


def run(prog: C.Program, fname: str, params, model: CostModel, **kw) -> EvalOutcome:
    """Call ``fname`` with named parameters (a dict) or a ready argument."""
    f = prog[fname]
    arg = build_arg(f, params) if isinstance(params, dict) else params
    return Evaluator(prog, model, **kw).call(fname, arg)


@dataclass(frozen=True)
class Domain:
    """Finite atom domain for enumeration."""

    ints: tuple = (0, 1)
    bools: tuple = (False, True)

    @staticmethod
    def parse(text: str) -> "Domain":
        """``int:0..1`` or ``int:-1,0,1``."""
        kind, _, rng = text.partition(":")
        if kind.strip() != "int" or not rng:
            raise ValueError(f"bad domain {text!r}; expected int:LO..HI or int:a,b,c")
        if ".." in rng:
            lo, hi = (int(x) for x in rng.split(".."))
            return Domain(tuple(range(lo, hi + 1)))
        return Domain(tuple(int(x) for x in rng.split(",")))

    def atoms(self, t: Atom) -> tuple:
        return {"unit": (None,), "bool": self.bools, "int": self.ints}[t.name]


def values_of_length(t: BaseType, n: Optional[int], domain: Domain, inner_max: int = 2) -> Iterator[Value]:
    """Values of ``t`` whose outermost list (if any) has length ``n``;
    nested lists range over lengths ``0..inner_max``."""
    if isinstance(t, Atom):
        yield from domain.atoms(t)
    elif isinstance(t, ListT):
        elems = list(values_up_to(t.elem, inner_max, domain, inner_max))
        for combo in itertools.product(elems, repeat=n or 0):
            yield tuple(combo)
    else:
        lefts = list(values_up_to(t.left, inner_max, domain, inner_max))
        rights = list(values_up_to(t.right, inner_max, domain, inner_max))
        for a in lefts:
            for b in rights:
                yield PairV(a, b)


def values_up_to(t: BaseType, max_len: int, domain: Domain, inner_max: int = 2) -> Iterator[Value]:
    if isinstance(t, ListT):
        for n in range(max_len + 1):
            yield from values_of_length(t, n, domain, inner_max)
    else:
        yield from values_of_length(t, None, domain, inner_max)


@dataclass
class SizeSpec:
    """Which argument values to enumerate: allowed outer lengths per list
    parameter, the atom domain, and the cap on environments."""

    lengths: dict = field(default_factory=dict)  # param -> tuple of lengths
    domain: Domain = field(default_factory=Domain)
    inner_max: int = 1
    cap: int = 200_000

    @staticmethod
    def up_to(f: C.FunDef, max_len: int, domain: Domain = Domain(), **kw) -> "SizeSpec":
        lengths = {p: tuple(range(max_len + 1)) for p in f.params if _is_list(f.param_type(p))}
        return SizeSpec(lengths, domain, **kw)

    @staticmethod
    def exact(sizes: dict, domain: Domain = Domain(), **kw) -> "SizeSpec":
        return SizeSpec({p: (n,) for p, n in sizes.items()}, domain, **kw)

    @staticmethod
    def parse(text: str, domain: Domain = Domain(), **kw) -> "SizeSpec":
        """``h=3,l=3``; a range ``h=0..3`` enumerates every length in it."""
        lengths = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            name, _, val = item.partition("=")
            if ".." in val:
                lo, hi = (int(x) for x in val.split(".."))
                lengths[name.strip()] = tuple(range(lo, hi + 1))
            else:
                lengths[name.strip()] = (int(val),)
        return SizeSpec(lengths, domain, **kw)


def _is_list(t: BaseType) -> bool:
    return isinstance(t, ListT)


class EnumerationCapExceeded(Exception):
    pass


def enumerate_params(f: C.FunDef, spec: SizeSpec) -> Iterator[dict]:
    """All parameter assignments allowed by ``spec``."""
    unknown = set(spec.lengths) - set(f.params)
    if unknown:
        raise ValueError(f"{f.name} has no parameter(s) {sorted(unknown)}")
    pools = []
    for p in f.params:
        t = f.param_type(p)
        if isinstance(t, ListT):
            lens = spec.lengths.get(p)
            if lens is None:
                raise ValueError(f"no length given for list parameter {p}")
            pool = [v for n in lens for v in values_of_length(t, n, spec.domain, spec.inner_max)]
        else:
            pool = list(values_of_length(t, None, spec.domain, spec.inner_max))
        pools.append(pool)
    total = 1
    for pool in pools:
        total *= len(pool)
    if total > spec.cap:
        raise EnumerationCapExceeded(f"{total} environments exceed the cap of {spec.cap}")
    for combo in itertools.product(*pools):
        yield dict(zip(f.params, combo))


def observe(prog: C.Program, fname: str, spec: SizeSpec, model: CostModel,
            skip_errors: bool = True) -> Iterator[tuple]:
    """Yield ``(params, outcome)`` for every enumerated environment.  Runs
    that fail (division by zero) are skipped unless ``skip_errors`` is off."""
    f = prog[fname]
    ev = Evaluator(prog, model)
    for params in enumerate_params(f, spec):
        try:
            out = ev.call(fname, build_arg(f, params))
        except StepLimitExceeded:
            raise
        except EvalError:
            if skip_errors:
                continue
            raise
        yield params, out


def shape_key(params: dict, names: Iterable) -> tuple:
    return tuple(shape(params[x]) for x in sorted(names))


@dataclass
class OracleResult:
    holds: bool
    witness: Optional[tuple] = None  # two (params, net) pairs that disagree
    checked: int = 0

    def __bool__(self) -> bool:
        return self.holds


def const_oracle(prog: C.Program, fname: str, wrt: Iterable, spec: SizeSpec, model: CostModel) -> OracleResult:
    """Brute-force constant-resource check: all enumerated environments
    that are size-equivalent on ``wrt`` and equal elsewhere must have the
    same net cost."""
    wrt = list(wrt)
    rest = [p for p in prog[fname].params if p not in wrt]
    seen: dict = {}
    count = 0
    for params, out in observe(prog, fname, spec, model):
        count += 1
        key = (shape_key(params, wrt), tuple(repr(params[p]) for p in rest))
        if key in seen:
            other = seen[key]
            if other[1] != out.net:
                return OracleResult(False, (other, (params, out.net)), count)
        else:
            seen[key] = (params, out.net)
    return OracleResult(True, None, count)
