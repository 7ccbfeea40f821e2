"""Exact rational linear programming.

A two-phase primal simplex over rationals with Bland's pivoting rule, so
every run terminates and the same input always yields the same vertex.
All variables are nonnegative.  Lexicographic objectives are solved in
sequence; after each phase the columns with a strictly positive reduced
cost are fixed at zero, which is the same as pinning that phase's
objective to its optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

try:  # gmpy2 makes exact pivots several times faster
    from gmpy2 import mpq as _num
except ImportError:  # pragma: no cover
    _num = Fraction

Number = Union[int, Fraction]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


class LPVar:
    """A nonnegative decision variable.  Ordered by creation index."""

    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __lt__(self, other: "LPVar") -> bool:
        return self.index < other.index

    def __hash__(self) -> int:
        return self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, LPVar) and other.index == self.index

    def __add__(self, other):
        return LinExpr.lift(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return LinExpr.lift(self) - other

    def __rsub__(self, other):
        return LinExpr.lift(other) - LinExpr.lift(self)

    def __neg__(self):
        return -LinExpr.lift(self)

    def __mul__(self, k):
        return LinExpr.lift(self) * k

    __rmul__ = __mul__


class LinExpr:
    """``sum(coef * var) + const`` with rational coefficients.  Zero
    coefficients are never stored."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[dict] = None, const: Number = 0):
        self.terms = {v: _frac(c) for v, c in (terms or {}).items() if c != 0}
        self.const = _frac(const)

    @staticmethod
    def lift(x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, LPVar):
            return LinExpr({x: 1})
        return LinExpr({}, x)

    def is_const(self) -> bool:
        return not self.terms

    def is_var(self) -> bool:
        return self.const == 0 and len(self.terms) == 1 and next(iter(self.terms.values())) == 1

    def variables(self) -> list:
        return sorted(self.terms)

    def __add__(self, other) -> "LinExpr":
        o = LinExpr.lift(other)
        terms = dict(self.terms)
        for v, c in o.terms.items():
            terms[v] = terms.get(v, 0) + c
        return LinExpr(terms, self.const + o.const)

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({v: -c for v, c in self.terms.items()}, -self.const)

    def __sub__(self, other) -> "LinExpr":
        return self + (-LinExpr.lift(other))

    def __rsub__(self, other) -> "LinExpr":
        return LinExpr.lift(other) - self

    def __mul__(self, k) -> "LinExpr":
        if isinstance(k, (LinExpr, LPVar)):
            raise TypeError("product of two linear expressions is not linear")
        k = _frac(k)
        return LinExpr({v: c * k for v, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def evaluate(self, values: dict) -> Fraction:
        total = self.const
        for v, c in self.terms.items():
            total += c * values.get(v, 0)
        return total

    def substitute(self, values: dict) -> "LinExpr":
        """Replace the variables that have a value, keep the others."""
        terms, const = {}, self.const
        for v, c in self.terms.items():
            if v in values:
                const += c * values[v]
            else:
                terms[v] = c
        return LinExpr(terms, const)

    def key(self) -> tuple:
        return (tuple(sorted((v.index, c) for v, c in self.terms.items())), self.const)

    def __repr__(self) -> str:
        return format_linexpr(self)


def _fmt_num(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_linexpr(e: LinExpr) -> str:
    parts = []
    for v in sorted(e.terms):
        c = e.terms[v]
        mag = abs(c)
        body = v.name if mag == 1 else f"{_fmt_num(mag)}*{v.name}"
        parts.append(("- " if c < 0 else "+ ") + body)
    if e.const != 0 or not parts:
        parts.append(("- " if e.const < 0 else "+ ") + _fmt_num(abs(e.const)))
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


LE, EQ, GE = "<=", "=", ">="


@dataclass
class Constraint:
    lhs: LinExpr
    rel: str
    rhs: LinExpr
    origin: str = ""

    def normal(self) -> tuple:
        """``(expr, rel)`` meaning ``expr rel 0``."""
        return self.lhs - self.rhs, self.rel

    def holds(self, values: dict) -> bool:
        d = self.lhs.evaluate(values) - self.rhs.evaluate(values)
        if self.rel == LE:
            return d <= 0
        if self.rel == GE:
            return d >= 0
        return d == 0

    def __str__(self) -> str:
        text = f"{format_linexpr(self.lhs)} {self.rel} {format_linexpr(self.rhs)}"
        return f"{text}    ({self.origin})" if self.origin else text


@dataclass
class ConstraintSystem:
    """A growing set of linear constraints over fresh nonnegative variables."""

    constraints: list = field(default_factory=list)
    variables: list = field(default_factory=list)

    def fresh(self, name: str = "a") -> LPVar:
        v = LPVar(len(self.variables), f"{name}{len(self.variables)}")
        self.variables.append(v)
        return v

    def fresh_expr(self, name: str = "a") -> LinExpr:
        return LinExpr({self.fresh(name): 1})

    def add(self, lhs, rel: str, rhs, origin: str = "") -> None:
        lhs, rhs = LinExpr.lift(lhs), LinExpr.lift(rhs)
        if rel not in (LE, EQ, GE):
            raise ValueError(f"unknown relation {rel!r}")
        self.constraints.append(Constraint(lhs, rel, rhs, origin))

    def le(self, a, b, origin: str = "") -> None:
        self.add(a, LE, b, origin)

    def ge(self, a, b, origin: str = "") -> None:
        self.add(a, GE, b, origin)

    def eq(self, a, b, origin: str = "") -> None:
        self.add(a, EQ, b, origin)

    def nonneg(self, a, origin: str = "") -> None:
        a = LinExpr.lift(a)
        if a.is_var() or (a.is_const() and a.const >= 0):
            return
        self.add(a, GE, 0, origin)

    def dump(self) -> str:
        return "\n".join(str(c) for c in self.constraints) + ("\n" if self.constraints else "")


@dataclass
class Objective:
    """One lexicographic phase."""

    expr: LinExpr
    sense: str = "min"  # "min" | "max"

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown objective sense {self.sense!r}")
        self.expr = LinExpr.lift(self.expr)


class Status:
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class Solution:
    status: str
    values: dict = field(default_factory=dict)  # LPVar -> Fraction
    objective_values: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL

    def __getitem__(self, e) -> Fraction:
        return LinExpr.lift(e).evaluate(self.values)

    def value(self, e) -> Fraction:
        return self[e]


# Every accepted solution is re-checked; the counters let the test suite
# report the overall pass rate.
CHECK_LOG = {"accepted": 0, "verified": 0}


def dual_check(constraints: Iterable, values: dict) -> bool:
    """Re-substitute ``values`` into every constraint and the implicit
    nonnegativity of all variables, using plain Fractions."""
    vals = {v: _frac(x) for v, x in values.items()}
    if any(x < 0 for x in vals.values()):
        return False
    cs = constraints.constraints if isinstance(constraints, ConstraintSystem) else constraints
    return all(c.holds(vals) for c in cs)


def solve(cs: Union[ConstraintSystem, Iterable], objectives: Union[Objective, list, None] = None) -> Solution:
    """Lexicographically optimise ``objectives`` subject to ``cs``.

    Returns a :class:`Solution` whose status is optimal, infeasible or
    unbounded.  Variables that appear nowhere get the value 0."""
    constraints = list(cs.constraints if isinstance(cs, ConstraintSystem) else cs)
    if objectives is None:
        objectives = []
    elif isinstance(objectives, Objective):
        objectives = [objectives]
    tab = _Tableau(constraints)
    if not tab.phase_one():
        return Solution(Status.INFEASIBLE)
    optima = []
    for obj in objectives:
        sign = 1 if obj.sense == "min" else -1
        cost = {tab._col(v): _num(sign * c) for v, c in sorted(obj.expr.terms.items())}
        res = tab.optimise(cost)
        if res is None:
            return Solution(Status.UNBOUNDED)
        optima.append(sign * _frac(res) + obj.expr.const)
    values = tab.primal()
    all_vars = set()
    for c in constraints:
        all_vars.update(c.lhs.terms)
        all_vars.update(c.rhs.terms)
    for obj in objectives:
        all_vars.update(obj.expr.terms)
    values = {v: values.get(v, Fraction(0)) for v in sorted(all_vars)}
    CHECK_LOG["accepted"] += 1
    if not dual_check(constraints, values):  # pragma: no cover - would be a solver bug
        raise ArithmeticError("simplex produced an assignment violating its constraints")
    CHECK_LOG["verified"] += 1
    return Solution(Status.OPTIMAL, values, optima)


class _Tableau:
    """Sparse tableau: each row is a dict column -> coefficient for the
    equation ``x_basis = rhs - sum(coef * x_col)`` in dictionary form,
    stored here as ``sum(coef * x_col) = rhs`` with the basic column
    carrying coefficient 1."""

    def __init__(self, constraints: list):
        self.col_of: dict = {}  # LPVar -> column index
        self.var_of_col: list = []  # column -> LPVar or None for slack/artificial
        self.artificial: set = set()
        self.fixed: set = set()  # columns pinned at zero
        rows, rhs, basis = [], [], []
        for c in constraints:
            expr, rel = c.normal()
            coeffs = {}
            for v in sorted(expr.terms):
                coeffs[self._col(v)] = _num(expr.terms[v])
            b = _num(-expr.const)
            if b < 0:
                coeffs = {k: -x for k, x in coeffs.items()}
                b = -b
                rel = {LE: GE, GE: LE, EQ: EQ}[rel]
            if not coeffs:
                if (rel == EQ and b != 0) or (rel == GE and b > 0):
                    self.trivially_infeasible = True
                continue
            if rel == LE:
                s = self._new_col()
                coeffs[s] = _num(1)
                basic = s
            else:
                if rel == GE:
                    coeffs[self._new_col()] = _num(-1)
                basic = self._new_col()
                coeffs[basic] = _num(1)
                self.artificial.add(basic)
            rows.append(coeffs)
            rhs.append(b)
            basis.append(basic)
        self.rows, self.rhs, self.basis = rows, rhs, basis

    trivially_infeasible = False

    def _col(self, v: LPVar) -> int:
        if v not in self.col_of:
            self.col_of[v] = len(self.var_of_col)
            self.var_of_col.append(v)
        return self.col_of[v]

    def _new_col(self) -> int:
        self.var_of_col.append(None)
        return len(self.var_of_col) - 1

    def _pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        if piv != 1:
            inv = 1 / piv
            for k in row:
                row[k] *= inv
            self.rhs[r] *= inv
        b = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(col)
            if f is None:
                continue
            for k, x in row.items():
                nv = other.get(k, 0) - f * x
                if nv == 0:
                    other.pop(k, None)
                else:
                    other[k] = nv
            self.rhs[i] -= f * b
        self.basis[r] = col

    def _reduced(self, cost: dict) -> tuple:
        """Reduced costs of all columns and the current objective value."""
        red = dict(cost)
        value = _num(0)
        for r, bcol in enumerate(self.basis):
            cb = cost.get(bcol)
            if not cb:
                continue
            value += cb * self.rhs[r]
            for k, x in self.rows[r].items():
                nv = red.get(k, 0) - cb * x
                if nv == 0:
                    red.pop(k, None)
                else:
                    red[k] = nv
        return red, value

    def _run(self, cost: dict, allowed) -> Optional[dict]:
        """Bland's rule simplex on ``cost``.  Returns the final reduced
        costs, or None when unbounded."""
        while True:
            red, _ = self._reduced(cost)
            entering = None
            for k in sorted(red):
                if red[k] < 0 and k not in self.fixed and allowed(k):
                    entering = k
                    break
            if entering is None:
                return red
            best_r, best_ratio = None, None
            for r, row in enumerate(self.rows):
                a = row.get(entering)
                if a is None or a <= 0:
                    continue
                ratio = self.rhs[r] / a
                if (
                    best_r is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[r] < self.basis[best_r])
                ):
                    best_r, best_ratio = r, ratio
            if best_r is None:
                return None
            self._pivot(best_r, entering)

    def phase_one(self) -> bool:
        if self.trivially_infeasible:
            return False
        if not self.artificial:
            return True
        cost = {a: _num(1) for a in self.artificial}
        self._run(cost, lambda k: True)
        _, value = self._reduced(cost)
        if value != 0:
            return False
        # Drive artificial columns out of the basis, dropping redundant rows.
        r = 0
        while r < len(self.rows):
            if self.basis[r] in self.artificial:
                row = self.rows[r]
                col = next((k for k in sorted(row) if k not in self.artificial and row[k] != 0), None)
                if col is None:
                    del self.rows[r], self.rhs[r], self.basis[r]
                    continue
                self._pivot(r, col)
            r += 1
        for row in self.rows:
            for a in self.artificial:
                row.pop(a, None)
        self.fixed |= self.artificial
        return True

    def optimise(self, cost: dict):
        red = self._run(cost, lambda k: True)
        if red is None:
            return None
        _, value = self._reduced(cost)
        basic = set(self.basis)
        for k, d in red.items():
            if d > 0 and k not in basic:
                self.fixed.add(k)
        return value

    def primal(self) -> dict:
        out = {}
        for r, col in enumerate(self.basis):
            v = self.var_of_col[col]
            if v is not None:
                out[v] = _frac(self.rhs[r])
        return out


def feasible(cs) -> bool:
    return solve(cs).ok

