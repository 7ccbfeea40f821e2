"""How much a function's resource use reveals about its inputs.

For a fixed input size, the attacker sees one net cost per run.  The number
of distinct observable costs, minus one, measures how many inputs the
attacker can tell apart.  Upper and lower bounds on the cost bound that
number from above whenever every run costs a whole number.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .infer import Mode, bound_terms, evaluate_bound, format_bound, infer_signature, size_variables
from .lang import core as C
from .potential import AnnSig
from .semantics import CostModel, SizeSpec, enumerate_params, observe


class LeakageError(Exception):
    pass


@dataclass
class CostObservations:
    """Net cost of every enumerated environment, in enumeration order."""

    nets: list = field(default_factory=list)
    skipped: int = 0  # runs that raised a runtime error

    @property
    def costs(self) -> frozenset:
        return frozenset(self.nets)

    def histogram(self) -> dict:
        return dict(sorted(Counter(self.nets).items()))

    def __len__(self) -> int:
        return len(self.costs)


def enumerate_costs(prog: C.Program, fname: str, spec: SizeSpec, model: CostModel) -> CostObservations:
    out = CostObservations()
    total = 0
    for _, outcome in observe(prog, fname, spec, model):
        out.nets.append(outcome.net)
        total += 1
    out.skipped = sum(1 for _ in enumerate_params(prog[fname], spec)) - total
    return out


def leakage_exact(obs: CostObservations) -> Fraction:
    """Distinct observations minus one."""
    if not obs.nets:
        raise LeakageError("no environment terminated")
    return Fraction(len(obs.costs) - 1)


def leakage_by_summation(nets: list) -> Fraction:
    """The same quantity from its definition as a sum over environments:
    each contributes the reciprocal of how many environments produce its
    cost.  Quadratic; meant as an independent check on small instances."""
    if not nets:
        raise LeakageError("no environment terminated")
    total = Fraction(0)
    for p in nets:
        same = sum(1 for r in nets if r == p)
        total += Fraction(1, same)
    return total - 1


def entropy_bound(q) -> float:
    """Upper bound in bits on the entropy of the observation distribution."""
    q = Fraction(q)
    if q < 0:
        raise LeakageError("leakage cannot be negative")
    return math.log2(q + 1)


@dataclass
class LeakageBound:
    fname: str
    upper: Optional[AnnSig]
    lower: Optional[AnnSig]
    coeffs: dict  # size variable -> coefficient of UB - LB
    const: Fraction
    applicable: bool  # all costs integral, so the bound is valid
    reason: str = ""

    def symbolic(self) -> str:
        return format_bound(self.coeffs, self.const)

    def at_sizes(self, sizes: dict) -> Fraction:
        """Value for concrete size-variable values, e.g. ``{"n": 3}``."""
        missing = [v for v, c in self.coeffs.items() if c != 0 and v not in sizes]
        if missing:
            raise LeakageError(f"no value for size variable(s) {missing}")
        return self.const + sum((c * sizes[v] for v, c in self.coeffs.items() if c != 0), Fraction(0))


def leakage_bound(prog: C.Program, fname: str, model: CostModel) -> LeakageBound:
    """``UB - LB`` from the inferred upper and lower signatures, as a
    linear expression in the argument sizes."""
    f = prog[fname]
    up = infer_signature(prog, fname, Mode.UPPER, model)
    lo = infer_signature(prog, fname, Mode.LOWER, model)
    if not up.ok or not lo.ok:
        failed = up if not up.ok else lo
        return LeakageBound(fname, up.sig, lo.sig, {}, Fraction(0), False,
                            f"{failed.analysis.mode.value} bound inference is {failed.status}")
    uc, ucon = bound_terms(f, up.sig)
    lc, lcon = bound_terms(f, lo.sig)
    coeffs = {v: uc[v] - lc[v] for v in uc}
    ok = model.integral(prog)
    why = "" if ok else "some run cost is not an integer, so distinct costs are not bounded by the difference"
    return LeakageBound(fname, up.sig, lo.sig, coeffs, ucon - lcon, ok, why)


def bound_for_spec(lb: LeakageBound, prog: C.Program, spec: SizeSpec) -> Fraction:
    """``max UB - min LB`` over the environments of ``spec``.  When every
    list parameter has a single length and none is nested, this follows
    from the sizes alone."""
    f = prog[lb.fname]
    names = size_variables(f)
    nested = any(depth > 0 for _, _, _, depth in names)
    if not nested and all(len(spec.lengths.get(p, ())) == 1 for _, p, _, _ in names):
        return lb.at_sizes({name: spec.lengths[p][0] for name, p, _, _ in names})
    hi = lo = None
    for params in enumerate_params(f, spec):
        u = evaluate_bound(f, lb.upper, params)
        l = evaluate_bound(f, lb.lower, params)
        hi = u if hi is None else max(hi, u)
        lo = l if lo is None else min(lo, l)
    if hi is None:
        raise LeakageError("the size specification admits no environment")
    return hi - lo


@dataclass
class Quantification:
    fname: str
    observations: Optional[CostObservations]
    exact: Optional[Fraction]
    bound: LeakageBound
    bound_value: Optional[Fraction]

    @property
    def entropy_bits(self) -> Optional[float]:
        if self.bound_value is None or not self.bound.applicable:
            return None
        return entropy_bound(self.bound_value)


def quantify(prog: C.Program, fname: str, spec: SizeSpec, model: CostModel, exact: bool = True) -> Quantification:
    lb = leakage_bound(prog, fname, model)
    value = bound_for_spec(lb, prog, spec) if lb.upper is not None and lb.lower is not None else None
    obs = enumerate_costs(prog, fname, spec, model) if exact else None
    q = leakage_exact(obs) if obs is not None and obs.nets else None
    return Quantification(fname, obs, q, lb, value)
