"""Stable text and JSON renderings of analysis results, and the
cost-versus-size plot."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional

from .lang import core as C
from .lang import surface as S
from .lang.parser import parse_expr
from .lang.types import PairV, Value, format_value, value_wellformed
from .potential import AAtom, AList, AnnSig, AnnType, format_sig, split_params


def q_json(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def ann_json(a: AnnType):
    """Nested arrays mirroring the type: ``[]`` for an atom, ``[p]`` or
    ``[p, inner]`` for a list, ``[left, right]`` for a pair."""
    if isinstance(a, AAtom):
        return []
    if isinstance(a, AList):
        head = [q_json(a.ann.const)]
        return head if isinstance(a.elem, AAtom) else head + [ann_json(a.elem)]
    return [ann_json(a.left), ann_json(a.right)]


def sig_json(sig: AnnSig, nparams: int) -> dict:
    args = split_params(sig.arg, nparams) if nparams > 1 else [sig.arg]
    return {
        "q": q_json(sig.q.const),
        "q_out": q_json(sig.q_out.const),
        "arg": [ann_json(a) for a in args],
        "result": ann_json(sig.result),
        "signature": format_sig(sig, nparams),
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False)


# Values -----------------------------------------------------------------------

class ValueSyntaxError(ValueError):
    pass


def parse_value(text: str) -> Value:
    """``[1;2;3]``, ``true``, ``(1, [true])`` and so on."""
    try:
        e = parse_expr(text)
    except Exception as err:  # the parser reports positions in its message
        raise ValueSyntaxError(f"cannot read value {text!r}: {err}") from None
    return _literal(e, text)


def _literal(e, text: str) -> Value:
    if isinstance(e, S.SUnit):
        return None
    if isinstance(e, (S.SBool, S.SInt)):
        return e.value
    if isinstance(e, S.SNil):
        return ()
    if isinstance(e, S.SCons):
        return (_literal(e.head, text),) + _literal(e.tail, text)
    if isinstance(e, S.STuple):
        items = [_literal(x, text) for x in e.items]
        out = items[-1]
        for x in reversed(items[:-1]):
            out = PairV(x, out)
        return out
    raise ValueSyntaxError(f"{text!r} is not a literal value")


def check_params(f: C.FunDef, params: dict) -> None:
    for p, v in params.items():
        if not value_wellformed(v, f.param_type(p)):
            raise ValueSyntaxError(f"argument {p} = {format_value(v)} is not of type {f.param_type(p)}")


# Plot -------------------------------------------------------------------------

def total_size(f: C.FunDef, params: dict) -> int:
    """Sum of the outer lengths of the list parameters."""
    return sum(len(params[p]) for p in f.params if isinstance(params[p], tuple))


def plot_costs(path: str, f: C.FunDef, points: list, upper: Optional[AnnSig] = None,
               lower: Optional[AnnSig] = None, title: str = "") -> None:
    """Scatter of net cost against input size with the largest upper bound
    and smallest lower bound at each size.  ``points`` holds
    ``(params, net)`` pairs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .infer import evaluate_bound

    xs = [total_size(f, p) for p, _ in points]
    ys = [float(n) for _, n in points]
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.scatter(xs, ys, s=12, alpha=0.5, color="tab:gray", label="observed net cost", zorder=3)
    sizes = sorted(set(xs))
    for sig, pick, style, label in ((upper, max, "tab:red", "upper bound"), (lower, min, "tab:blue", "lower bound")):
        if sig is None:
            continue
        by_size = {}
        for (params, _), x in zip(points, xs):
            b = evaluate_bound(f, sig, params)
            by_size[x] = b if x not in by_size else pick(by_size[x], b)
        ax.plot(sizes, [float(by_size[x]) for x in sizes], color=style, marker="o", ms=3, label=label)
    ax.set_xlabel("total list length")
    ax.set_ylabel("net cost")
    ax.set_title(title or f.name)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
