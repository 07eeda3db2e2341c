"""Deterministic JSON emission for reports.

Floats are written with 17 significant digits (full float64 round-trip)
and a plain decimal point regardless of locale; dict insertion order is
preserved, so a fixed-seed run always produces byte-identical output.
"""

from __future__ import annotations

import math
from typing import Any


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite float {value}")
    if value == int(value) and abs(value) < 1e16:
        # keep integral floats readable but unambiguous as numbers
        return f"{value:.1f}"
    return format(value, ".17g")


def emit_json(obj: Any, indent: int = 0) -> str:
    """Serialize dicts / lists / scalars with deterministic float formatting."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return f'"{_escape(obj)}"'
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f'{pad}  "{_escape(str(key))}": {emit_json(val, indent + 1)}'
            for key, val in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(f"{pad}  {emit_json(val, indent + 1)}" for val in obj)
        return "[\n" + inner + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
