"""Command-line front end.

Exit status: 0 on success, 1 when the analysis rejects the program (no
bound, not constant, insecure, no repair), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import infer, leakage, repair, security
from .lang import NormalizeError, ParseError, TypeCheckError, load_program
from .lang.types import ListT, format_value, to_json_value
from .potential import format_sig
from .report import ValueSyntaxError, check_params, dumps, parse_value, plot_costs, q_json, sig_json
from .semantics import (
    METRICS, Domain, EnumerationCapExceeded, EvalError, SizeSpec, build_arg, Evaluator, metric, observe,
)


class UsageError(Exception):
    pass


def _wrt(text: Optional[str], f) -> list:
    if not text:
        return list(f.params)
    names = [x.strip() for x in text.split(",") if x.strip()]
    unknown = [x for x in names if x not in f.params]
    if unknown:
        raise UsageError(f"{f.name} has no parameter(s) {', '.join(unknown)}")
    return names


def _domain(text: str) -> Domain:
    try:
        return Domain.parse(text)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _spec(args, f) -> SizeSpec:
    dom = _domain(args.domain)
    if getattr(args, "sizes", None):
        try:
            spec = SizeSpec.parse(args.sizes, dom)
        except ValueError:
            raise UsageError(f"bad --sizes {args.sizes!r}; expected e.g. h=3,l=0..3") from None
        missing = [p for p in f.params if p not in spec.lengths and isinstance(f.param_type(p), ListT)]
        if missing:
            raise UsageError(f"--sizes gives no length for {', '.join(missing)}")
        return spec
    return SizeSpec.up_to(f, args.max_len, dom)


def _emit(args, text: str, obj) -> None:
    print(dumps(obj) if args.json else text)


# Subcommands -------------------------------------------------------------------

def cmd_eval(args, prog, fname) -> int:
    f = prog[fname]
    if len(args.values) != len(f.params):
        raise UsageError(f"{fname} takes {len(f.params)} argument(s), got {len(args.values)}")
    params = {p: parse_value(v) for p, v in zip(f.params, args.values)}
    check_params(f, params)
    out = Evaluator(prog, metric(args.metric)).call(fname, build_arg(f, params))
    text = f"value: {format_value(out.value)}\nnet: {_num(out.net)}\nhighwater: {_num(out.highwater)}"
    _emit(args, text, {"value": format_value(out.value), "json_value": to_json_value(out.value),
                       "net": q_json(out.net), "highwater": q_json(out.highwater)})
    return 0


def _num(q) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def cmd_analyze(args, prog, fname) -> int:
    f = prog[fname]
    model = metric(args.metric)
    mode = infer.Mode.parse(args.mode)
    if mode is infer.Mode.CONSTANT:
        res = infer.check_constant(prog, fname, _wrt(args.const_wrt, f), model, trace=args.trace)
    else:
        if args.const_wrt:
            raise UsageError("--const-wrt only applies to --mode constant")
        res = infer.infer_signature(prog, fname, mode, model, trace=args.trace)
    extra = []
    if args.show_constraints:
        extra.append(res.analysis.cs.dump())
    if not res.ok:
        _emit(args, "\n".join(extra + [f"{fname} : {res.status} in {mode.value} mode"]),
              {"function": fname, "status": res.status, "mode": mode.value, "metric": model.name})
        return 1
    n = len(f.params)
    lines = extra + [f"{fname} : {format_sig(res.sig, n)}", f"bound: {res.bound_string()}"]
    if args.trace and res.analysis.derivation is not None:
        lines.append(res.analysis.derivation.render(res.solution.values))
    obj = {"function": fname, "status": res.status, "mode": mode.value, "metric": model.name,
           **sig_json(res.sig, n), "bound": res.bound_string()}
    if mode is infer.Mode.CONSTANT:
        obj["const_wrt"] = _wrt(args.const_wrt, f)
    if args.plot:
        up = res.sig if mode is not infer.Mode.LOWER else None
        lo = res.sig if mode is not infer.Mode.UPPER else None
        _plot(args, prog, fname, model, up, lo)
        obj["plot"] = args.plot
    _emit(args, "\n".join(lines), obj)
    return 0


def _plot(args, prog, fname, model, upper, lower) -> None:
    f = prog[fname]
    points = [(p, out.net) for p, out in observe(prog, fname, _spec(args, f), model)]
    plot_costs(args.plot, f, points, upper, lower, title=f"{fname} ({model.name})")


def cmd_check_security(args, prog, fname) -> int:
    sig_path = Path(args.sigs) if args.sigs else Path(args.source).with_suffix(".sig")
    if not sig_path.exists():
        raise UsageError(f"no signature file {sig_path}")
    lat, sigs = security.parse_signatures(sig_path.read_text(encoding="utf-8"))
    model = metric(args.metric)
    names = [args.entry] if args.entry else [n for n in prog.funs if n in sigs]
    verdicts = security.check_security(prog, sigs, lat, args.level, model, names)
    oracle = {}
    if args.oracle:
        for n, v in verdicts.items():
            if v.verdict != security.REJECT:
                spec = SizeSpec.up_to(prog[n], args.max_len, _domain(args.domain))
                oracle[n] = security.noninterference_oracle(prog, n, sigs, lat, args.level, spec, model,
                                                            resource=v.verdict == security.CONST)
    lines, items = [], []
    for n, v in verdicts.items():
        line = f"{n} : {v.verdict}" + (f" ({v.reason})" if v.reason else "")
        lines.append(line)
        if args.trace:
            lines += [f"  {s}" for s in v.trace]
        item = {"function": n, "verdict": v.verdict, "type": str(v.type) if v.type else None,
                "reason": v.reason, "trace": [str(s) for s in v.trace]}
        if n in oracle:
            o = oracle[n]
            lines.append(f"  oracle: {'holds' if o.holds else 'violated'} on {o.checked} runs")
            item["oracle"] = {"holds": o.holds, "checked": o.checked}
        items.append(item)
    _emit(args, "\n".join(lines), {"level": args.level, "metric": model.name, "functions": items})
    bad = any(v.verdict == security.REJECT for v in verdicts.values()) or any(not o.holds for o in oracle.values())
    return 1 if bad else 0


def cmd_quantify(args, prog, fname) -> int:
    f = prog[fname]
    model = metric(args.metric)
    spec = _spec(args, f)
    q = leakage.quantify(prog, fname, spec, model, exact=not args.no_exact)
    b = q.bound
    lines = [f"function: {fname}"]
    obj = {"function": fname, "metric": model.name}
    if q.exact is not None:
        lines.append(f"observations: {', '.join(_num(c) for c in sorted(q.observations.costs))}")
        lines.append(f"exact_Q: {_num(q.exact)}")
        obj["observations"] = [q_json(c) for c in sorted(q.observations.costs)]
        obj["exact_Q"] = q_json(q.exact)
    if b.upper is not None and b.lower is not None:
        lines.append(f"bound_Q: {b.symbolic()} = {_num(q.bound_value)}")
        obj["bound_Q_symbolic"] = b.symbolic()
        obj["bound_Q"] = q_json(q.bound_value)
    else:
        lines.append(f"bound_Q: unavailable ({b.reason})")
        obj["bound_Q"] = None
    obj["bound_applicable"] = b.applicable
    if not b.applicable and b.reason:
        lines.append(f"note: {b.reason}")
    bits = q.entropy_bits
    if bits is not None:
        lines.append(f"entropy_bits: {bits:.4f}")
    obj["entropy_bits"] = None if bits is None else round(bits, 4)
    if args.plot:
        points = [(p, o.net) for p, o in observe(prog, fname, spec, model)]
        plot_costs(args.plot, f, points, b.upper, b.lower, title=f"{fname} ({model.name})")
        obj["plot"] = args.plot
    _emit(args, "\n".join(lines), obj)
    return 0


def cmd_repair(args, prog, fname) -> int:
    f = prog[fname]
    model = metric(args.metric)
    wrt = _wrt(args.const_wrt, f)
    source = repair.insert_consumes(prog) if args.auto else prog
    try:
        res = repair.elaborate_consumes(source, fname, wrt, model)
    except repair.RepairInfeasible as err:
        _emit(args, f"{fname} : infeasible ({err})", {"function": fname, "status": "infeasible", "message": str(err)})
        return 1
    n = len(f.params)
    lines = [res.source().rstrip(), "", f"{fname} : {format_sig(res.sig, n)}"]
    consumes = []
    for uid in sorted(res.consumes):
        where = f" (line {res.lines[uid]})" if uid in res.lines else ""
        lines.append(f"consume #{uid} : {res.consume_sig(uid)}{where}")
        a, p = res.consumes[uid]
        consumes.append({"id": uid, "line": res.lines.get(uid), "signature": res.consume_sig(uid), "p": q_json(p)})
    obj = {"function": fname, "status": "optimal", "const_wrt": wrt, **sig_json(res.sig, n), "consumes": consumes,
           "source": res.source()}
    code = 0
    if args.verify:
        chk = repair.verify_repair(prog, res.program, fname, wrt, SizeSpec.up_to(f, args.max_len, _domain(args.domain)), model)
        lines.append(f"verify: {'ok' if chk.ok else 'failed: ' + chk.problem} on {chk.checked} runs")
        obj["verify"] = {"ok": chk.ok, "checked": chk.checked, "problem": chk.problem}
        code = 0 if chk.ok else 1
    _emit(args, "\n".join(lines), obj)
    return code


# Argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description="Resource bound, constant-resource and "
                                 "resource-aware information-flow analysis for a small ML-like language.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, metric_default="tick"):
        p.add_argument("source", help="program file (.rml)")
        p.add_argument("--entry", help="function to analyse (default: last definition)")
        p.add_argument("--metric", default=metric_default, choices=METRICS)
        p.add_argument("--json", action="store_true", help="print a JSON report")

    def enum_opts(p):
        p.add_argument("--max-len", type=int, default=4, help="longest list to enumerate (default 4)")
        p.add_argument("--domain", default="int:0..1", help="integer domain, int:LO..HI or int:a,b,c")

    p = sub.add_parser("eval", help="run a function and report its value and cost")
    common(p)
    p.add_argument("values", nargs="*", help="argument literals, e.g. '[1;2;3]' true")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("analyze", help="infer a resource-annotated signature")
    common(p)
    p.add_argument("--mode", default="upper", choices=[m.value for m in infer.Mode])
    p.add_argument("--const-wrt", help="comma-separated parameters for constant mode (default: all)")
    p.add_argument("--show-constraints", action="store_true", help="print the linear constraints")
    p.add_argument("--trace", action="store_true", help="print the typing derivation")
    p.add_argument("--plot", help="write a cost-versus-size figure to this file")
    p.add_argument("--sizes", help="lengths to enumerate for --plot, e.g. h=0..3,l=2")
    enum_opts(p)
    p.set_defaults(run=cmd_analyze)

    p = sub.add_parser("check-security", help="check information flow and resource-aware noninterference")
    common(p)
    p.add_argument("--sigs", help="signature file (default: source with .sig suffix)")
    p.add_argument("--level", default="l", help="attacker level (default l)")
    p.add_argument("--trace", action="store_true", help="print the rules used")
    p.add_argument("--oracle", action="store_true", help="cross-check verdicts by enumeration")
    enum_opts(p)
    p.set_defaults(run=cmd_check_security)

    p = sub.add_parser("quantify", help="bound and measure resource side-channel leakage")
    common(p)
    p.add_argument("--sizes", help="list lengths, e.g. h=3,l=3 (default: all up to --max-len)")
    p.add_argument("--no-exact", action="store_true", help="skip the enumeration of observed costs")
    p.add_argument("--plot", help="write a cost-versus-size figure to this file")
    enum_opts(p)
    p.set_defaults(run=cmd_quantify)

    p = sub.add_parser("repair", help="elaborate consume sinks to make a function constant resource")
    common(p)
    p.add_argument("--const-wrt", help="comma-separated parameters (default: all)")
    p.add_argument("--auto", action="store_true", help="insert sinks at the end of every branch first")
    p.add_argument("--verify", action="store_true", help="check the repair exhaustively by enumeration")
    enum_opts(p)
    p.set_defaults(run=cmd_repair)
    return ap


_ERROR_CODES = [
    (ParseError, "parse_error"), (NormalizeError, "parse_error"), (TypeCheckError, "type_error"),
    (security.SecurityError, "signature_error"), (EnumerationCapExceeded, "cap_exceeded"), (EvalError, "runtime_error"),
]


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        prog = load_program(Path(args.source))
        if args.entry is not None and args.entry not in prog:
            raise UsageError(f"no function named {args.entry!r}")
        return args.run(args, prog, prog.entry_name(args.entry))
    except (UsageError, ValueSyntaxError, FileNotFoundError, ParseError, NormalizeError,
            TypeCheckError, security.SecurityError, EnumerationCapExceeded, EvalError) as err:
        code = next((c for cls, c in _ERROR_CODES if isinstance(err, cls)), "usage_error")
        msg = str(err)
        print(f"error: {msg}", file=sys.stderr)
        if getattr(args, "json", False):
            print(dumps({"error": {"code": code, "message": msg}}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
