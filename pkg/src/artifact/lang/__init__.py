"""Language front end: parsing, normal form, base types and values."""

from __future__ import annotations

from pathlib import Path
from typing import Union

from . import core
from .core import Program
from .normalize import NormalizeError, normalize
from .parser import ParseError, parse
from .typecheck import TypeCheckError, typecheck_base
from .types import (
    BOOL,
    INT,
    UNIT,
    Atom,
    BaseType,
    FunType,
    ListT,
    PairT,
    PairV,
    format_value,
    shape,
    size_equivalent,
    value_wellformed,
)


def load_program(source: Union[str, Path], entry: str | None = None) -> Program:
    """Parse, normalise and type a program given as text or a path."""
    if isinstance(source, Path) or (isinstance(source, str) and source.endswith(".rml") and "\n" not in source):
        source = Path(source).read_text(encoding="utf-8")
    prog = typecheck_base(normalize(parse(source)))
    if entry is not None:
        prog.entry = prog.entry_name(entry)
    return prog


__all__ = [
    "BOOL", "INT", "UNIT", "Atom", "BaseType", "FunType", "ListT", "PairT", "PairV",
    "NormalizeError", "ParseError", "Program", "TypeCheckError", "core", "format_value",
    "load_program", "normalize", "parse", "shape", "size_equivalent", "typecheck_base",
    "value_wellformed",
]
