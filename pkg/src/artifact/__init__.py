"""Resource analysis toolkit for a small first-order functional language."""

from __future__ import annotations

from pathlib import Path

CORPUS = Path(__file__).parent / "corpus"


def corpus_path(name: str) -> Path:
    """Path of a shipped example, with or without the ``.rml`` suffix."""
    p = CORPUS / name
    if not p.suffix:
        p = p.with_suffix(".rml")
    if not p.exists():
        raise FileNotFoundError(f"no example named {name!r} in {CORPUS}")
    return p


def load_example(name: str, entry: str | None = None):
    from .lang import load_program

    return load_program(corpus_path(name), entry)
