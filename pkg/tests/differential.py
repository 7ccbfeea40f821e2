"""Differential checks of inferred bounds against the evaluator, shared by
the unit tests and the acceptance suite."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from artifact.infer import check_constant, evaluate_bound, infer_signature
from artifact.lang.types import ListT
from artifact.semantics import Domain, SizeSpec, const_oracle, observe

# Each corpus program paired with its entry point and the metric it is studied under.
CORPUS_METRICS = [
    ("filter_succ", "filter_succ", "tick"),
    ("fs_twice", "fs_twice", "tick"),
    ("compare_tick", "compare_tick", "tick"),
    ("p_compare", "p_compare", "tick"),
    ("p_compare_unpadded", "p_compare", "tick"),
    ("compare", "compare", "steps"),
    ("rev", "rev", "calls"),
    ("f1", "f1", "calls"),
    ("f2", "f2", "calls"),
    ("cond_rev", "cond_rev", "calls"),
    ("rsa", "rsa", "mults"),
]


@dataclass
class DifferentialReport:
    runs: int = 0
    violations: list = field(default_factory=list)
    constant_sets: list = field(default_factory=list)  # parameter sets proven constant and oracle-checked

    @property
    def ok(self) -> bool:
        return not self.violations


def differential(prog, fname, model, max_len=4, domain=Domain((-1, 0, 1))) -> DifferentialReport:
    """Every run must satisfy lower <= net, net <= upper and
    highwater <= upper; every parameter set the Constant mode accepts must
    give equal nets on size-equivalent inputs."""
    f = prog[fname]
    spec = SizeSpec.up_to(f, max_len, domain)
    upper = infer_signature(prog, fname, "upper", model)
    lower = infer_signature(prog, fname, "lower", model)
    report = DifferentialReport()
    for params, out in observe(prog, fname, spec, model):
        report.runs += 1
        if upper.ok:
            ub = evaluate_bound(f, upper.sig, params)
            if out.net > ub or out.highwater > ub:
                report.violations.append(("upper", params, out.net, out.highwater, ub))
        if lower.ok:
            lb = evaluate_bound(f, lower.sig, params)
            if out.net < lb:
                report.violations.append(("lower", params, out.net, lb))
    lists = [p for p in f.params if isinstance(f.param_type(p), ListT)]
    for k in range(1, len(lists) + 1):
        for wrt in itertools.combinations(lists, k):
            if check_constant(prog, fname, wrt, model).ok:
                report.constant_sets.append(wrt)
                res = const_oracle(prog, fname, wrt, spec, model)
                if not res:
                    report.violations.append(("constant", wrt, res.witness))
    return report
