"""One test per acceptance criterion; each prints a PASS/FAIL line (also
collected in the terminal summary)."""

from __future__ import annotations

import subprocess
import sys

from artifact import CORPUS
from artifact.infer import admits_signature, bound_terms, check_constant, infer_signature
from artifact.leakage import enumerate_costs, leakage_bound, quantify
from artifact.lp import CHECK_LOG
from artifact.potential import format_anntype, format_sig, parse_sig
from artifact.repair import elaborate_consumes, verify_repair
from artifact.security import CONST, PLAIN, check_security, noninterference_oracle, parse_signatures
from artifact.semantics import Domain, SizeSpec, metric, run

from differential import CORPUS_METRICS, differential
from test_golden import GOLDEN, steps_report

BIT = Domain((0, 1))


def _sig(prog, fname, mode, m):
    res = infer_signature(prog, fname, mode, metric(m))
    return format_sig(res.sig, len(prog[fname].params)) if res.ok else res.status


def test_criterion_01_upper_bounds(load, criterion):
    got = (_sig(load("filter_succ"), "filter_succ", "upper", "tick"), _sig(load("fs_twice"), "fs_twice", "upper", "tick"))
    want = ("L^8(int) --1/0--> L^0(int)", "L^11(int) --2/0--> L^0(int)")
    assert criterion(1, got == want, f"Upper tick signatures {got[0]} and {got[1]}")


def test_criterion_02_lower_bounds(load, criterion):
    got = (_sig(load("filter_succ"), "filter_succ", "lower", "tick"), _sig(load("fs_twice"), "fs_twice", "lower", "tick"))
    want = ("L^3(int) --1/0--> L^0(int)", "L^6(int) --2/0--> L^0(int)")
    assert criterion(2, got == want, f"Lower tick signatures {got[0]} and {got[1]}")


def test_criterion_03_intermediate_signatures(load, tick, criterion):
    prog = load("filter_succ")
    up = admits_signature(prog, "filter_succ", "upper", tick, parse_sig("L^11(int) --2/1--> L^8(int)"))
    lo = admits_signature(prog, "filter_succ", "lower", tick, parse_sig("L^6(int) --2/1--> L^3(int)"))
    assert criterion(3, up and lo, f"admits Upper L^11 --2/1--> L^8: {up}; Lower L^6 --2/1--> L^3: {lo}")


def test_criterion_04_constant_mode(load, tick, criterion):
    padded = check_constant(load("p_compare"), "p_compare", ["h", "l"], tick)
    padded_sig = format_sig(padded.sig, 2) if padded.ok else padded.status
    unpadded = check_constant(load("p_compare_unpadded"), "p_compare", ["h"], tick)
    ok = padded_sig == "(L^5(int), L^0(int)) --1/0--> bool" and not unpadded.ok
    assert criterion(4, ok, f"padded p_compare w.r.t. {{h,l}}: {padded_sig}; unpadded w.r.t. {{h}}: {unpadded.status}")


def test_criterion_05_evaluation_ground_truth(load, tick, criterion):
    prog = load("p_compare_unpadded")
    a = run(prog, "p_compare", {"h": (1, 2, 3), "l": (0, 1, 2)}, tick).net
    b = run(prog, "p_compare", {"h": (1, 2, 1), "l": (0, 1)}, tick).net
    assert criterion(5, (a, b) == (16, 12), f"p_compare nets {a} and {b} (expected 16 and 12)")


def test_criterion_06_soundness_differential(load, criterion):
    runs, violations, constant = 0, [], []
    for name, fname, m in CORPUS_METRICS:
        rep = differential(load(name), fname, metric(m), max_len=4, domain=Domain((-1, 0, 1)))
        runs += rep.runs
        violations += [(name, v) for v in rep.violations]
        constant += [f"{name}{{{','.join(w)}}}" for w in rep.constant_sets]
    ok = runs > 0 and not violations and constant
    assert criterion(6, bool(ok), f"{runs} runs, {len(violations)} violations, constant sets checked: "
                                  f"{', '.join(constant)}"), violations[:3]


def test_criterion_07_f1_f2(load, criterion):
    calls = metric("calls")
    f1 = check_constant(load("f1"), "f1", ["x"], calls).ok
    f2 = check_constant(load("f2"), "f2", ["x", "y"], calls).ok
    assert criterion(7, not f1 and f2, f"calls metric: f1 constant {f1}, f2 constant {f2}")


def test_criterion_08_security_verdicts(load, criterion):
    cases = [("compare", "compare", "steps", PLAIN), ("p_compare", "p_compare", "tick", CONST),
             ("cond_rev", "cond_rev", "calls", CONST)]
    details, ok = [], True
    for name, fname, m, want in cases:
        prog = load(name)
        lat, sigs = parse_signatures((CORPUS / f"{name}.sig").read_text())
        verdicts = check_security(prog, sigs, lat, "l", metric(m))
        ok &= verdicts[fname].verdict == want
        details.append(f"{fname} {verdicts[fname].verdict}")
        for g, v in verdicts.items():
            if v.verdict == CONST:
                res = noninterference_oracle(prog, g, sigs, lat, "l", SizeSpec.up_to(prog[g], 3, BIT), metric(m))
                ok &= res.holds
                if not res.holds:
                    details.append(f"oracle counterexample for {g}")
        if fname == "cond_rev":
            rules = [(s.rule, s.where) for s in verdicts[fname].trace]
            via = ("C-Gen", "let r = if b2 then") in rules and rules[-1] == ("L-If", "if b1 then")
            ok &= via
            details.append(f"via C-Gen + L-If: {via}")
    assert criterion(8, ok, "; ".join(details) + "; Const verdicts oracle-checked at lengths <= 3")


def test_criterion_09_leakage(load, tick, criterion):
    fs = leakage_bound(load("filter_succ"), "filter_succ", tick).symbolic()
    q = quantify(load("compare_tick"), "compare_tick", SizeSpec.exact({"h": 3, "l": 3}, BIT), tick)
    const_cases = [("p_compare", "p_compare", "tick", {"h": 2, "l": 2}), ("rev", "rev", "calls", {"l": 3}),
                   ("f2", "f2", "calls", {"x": 2, "y": 1})]
    const_ok, costs = True, []
    for name, fname, m, sizes in const_cases:
        lb = leakage_bound(load(name), fname, metric(m))
        obs = enumerate_costs(load(name), fname, SizeSpec.exact(sizes, BIT), metric(m))
        const_ok &= lb.applicable and lb.symbolic() == "0" and len(obs.costs) == 1
        costs.append(f"{fname} {sorted(int(c) for c in obs.costs)}")
    ok = fs == "5*n" and q.exact <= q.bound_value and const_ok
    assert criterion(9, ok, f"filter_succ bound {fs}; unpadded compare at (3,3) exact {q.exact} <= bound "
                            f"{q.bound_value}; constant cost sets {', '.join(costs)}")


def test_criterion_10_repair(load, tick, criterion):
    res = elaborate_consumes(load("c_compare"), "c_compare", ["h", "l"], tick)
    typings = [f"{res.consume_sig(u)} (line {res.lines.get(u)})" for u in sorted(res.consumes)]
    overall = format_sig(res.sig, 2)
    check = verify_repair(load("compare_tick"), res.program, "c_compare", ["h", "l"],
                          SizeSpec.up_to(res.program["c_compare"], 3, BIT), tick, original_fname="compare_tick")
    ok = (typings == ["L^5(int) --5/0--> unit (line 6)", "L^5(int) --1/0--> unit (line 9)"]
          and overall == "(L^5(int), L^0(int)) --1/0--> bool" and check.ok)
    assert criterion(10, ok, f"{'; '.join(typings)}; overall {overall}; verify_repair "
                             f"{'ok' if check.ok else check.problem} on {check.checked} runs")


def test_criterion_11_rsa(load, criterion):
    prog = load("rsa")
    f = prog["rsa"]
    mults = metric("mults")
    up, _ = bound_terms(f, infer_signature(prog, "rsa", "upper", mults).sig)
    lo, _ = bound_terms(f, infer_signature(prog, "rsa", "lower", mults).sig)
    assert criterion(11, up == {"n": 2} and lo == {"n": 1}, f"mults per exponent bit: Upper {up['n']}, Lower {lo['n']}")


def test_criterion_12_steps_bounds(load, criterion):
    golden = steps_report() == GOLDEN.read_text(encoding="utf-8")
    steps = metric("steps")
    violations, runs = [], 0
    for name, fname, _ in CORPUS_METRICS:
        rep = differential(load(name), fname, steps, max_len=4, domain=Domain((-1, 0, 1)))
        runs += rep.runs
        violations += rep.violations
    ok = golden and not violations
    assert criterion(12, ok, f"steps golden file {'matches' if golden else 'differs'}; steps differential "
                             f"{runs} runs, {len(violations)} violations")


def test_criterion_13_lp_exactness(criterion):
    argv_list = [
        ["analyze", "fs_twice", "--show-constraints"],
        ["analyze", "p_compare", "--mode", "constant", "--json"],
        ["repair", "c_compare", "--json"],
        ["quantify", "compare_tick", "--sizes", "h=2,l=2", "--json"],
    ]
    identical = True
    for cmd, name, *rest in argv_list:
        argv = [sys.executable, "-m", "artifact.cli", cmd, str(CORPUS / f"{name}.rml"), *rest]
        outs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
        identical &= outs[0] == outs[1]
    ok = CHECK_LOG["accepted"] > 0 and CHECK_LOG["accepted"] == CHECK_LOG["verified"] and identical
    assert criterion(13, ok, f"dual_check verified {CHECK_LOG['verified']} of {CHECK_LOG['accepted']} accepted "
                             f"solutions so far; repeated CLI runs byte-identical: {identical}")
