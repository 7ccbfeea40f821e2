from __future__ import annotations

import functools

import pytest

from artifact import CORPUS
from artifact.lang import load_program
from artifact.semantics import metric


@functools.lru_cache(maxsize=None)
def _load(name: str):
    return load_program(CORPUS / f"{name}.rml")


@pytest.fixture
def load():
    """Load a corpus program by file stem (cached; treat as read-only)."""
    return _load


@pytest.fixture
def tick():
    return metric("tick")


# Acceptance report ---------------------------------------------------------------

_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one acceptance verdict and
    prints its PASS/FAIL line."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
        _CRITERIA[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    from artifact.lp import CHECK_LOG

    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
    terminalreporter.write_line(
        f"LP solutions re-verified: {CHECK_LOG['verified']} of {CHECK_LOG['accepted']} accepted")
