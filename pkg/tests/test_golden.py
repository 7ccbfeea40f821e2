"""Regression of the steps-metric bounds our analysis derives for the
corpus.  Set ARTIFACT_UPDATE_GOLDEN=1 to rewrite the file after an
intended change."""

from __future__ import annotations

import os
from pathlib import Path

from artifact import CORPUS
from artifact.infer import infer_signature
from artifact.lang import load_program
from artifact.potential import format_sig
from artifact.semantics import metric

GOLDEN = Path(__file__).parent / "golden" / "steps_bounds.txt"


def steps_report() -> str:
    steps = metric("steps")
    lines = []
    for path in sorted(CORPUS.glob("*.rml")):
        prog = load_program(path)
        if prog.consume_lines:
            continue  # bare sinks are elaborated per mode, so the two bounds describe different programs
        for fname, f in prog.funs.items():
            for mode in ("upper", "lower"):
                res = infer_signature(prog, fname, mode, steps)
                shown = f"{format_sig(res.sig, len(f.params))} | {res.bound_string()}" if res.ok else res.status
                lines.append(f"{path.stem}:{fname} {mode}: {shown}")
    return "\n".join(lines) + "\n"


def test_steps_bounds_match_golden_file():
    report = steps_report()
    if os.environ.get("ARTIFACT_UPDATE_GOLDEN"):
        GOLDEN.write_text(report, encoding="utf-8")
    assert report == GOLDEN.read_text(encoding="utf-8")
