"""Deterministic CSV and JSON writers.

Floats are written with 17 significant digits so that values round-trip
exactly; line endings are LF and nothing depends on the locale.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def fmt_float(v: float) -> str:
    # Signed zero would make otherwise identical runs differ textually.
    return "0" if v == 0.0 else "%.17g" % v


def _json_value(v, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return fmt_float(v) if math.isfinite(v) else "null"
    if isinstance(v, str):
        return _json_string(v)
    if isinstance(v, Mapping):
        if not v:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {_json_value(x, indent, level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        seq = list(v)
        if not seq:
            return "[]"
        if all(not isinstance(x, (Mapping, list, tuple, np.ndarray)) for x in seq):
            return "[" + ", ".join(_json_value(x, indent, level + 1) for x in seq) + "]"
        items = [pad + _json_value(x, indent, level + 1) for x in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _json_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps_json(obj, indent: int = 2) -> str:
    """Serialise ``obj`` with fixed float formatting and insertion key order."""
    return _json_value(obj, indent, 0) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v)) if math.isfinite(v) else ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def orbit_rows(orbit) -> tuple[list[str], list[tuple]]:
    """Rows ``x, v_y, v_z, xi`` of the reporting grid (``xi`` blank if absent)."""
    header = ["x", "v_y", "v_z", "xi"]
    ok = np.isfinite(orbit.vy) & np.isfinite(orbit.vz)
    xi = orbit.xi
    rows = [(float(orbit.xs[i]), float(orbit.vy[i]), float(orbit.vz[i]),
             None if xi is None else float(xi[i])) for i in np.flatnonzero(ok)]
    return header, rows


def profile_rows(orbit) -> tuple[list[str], list[tuple]]:
    """Rows ``xi, x_breve, z_breve`` with ``x̆ = 1 - x`` and ``z̆ = v_z``, by increasing ``ξ``."""
    if orbit.xi is None:
        raise ValueError("profile requires a reconstructed coordinate")
    ok = np.isfinite(orbit.xi) & orbit.reached
    idx = np.flatnonzero(ok)
    idx = idx[np.argsort(orbit.xi[idx])]
    rows = [(float(orbit.xi[i]), float(1.0 - orbit.xs[i]), float(orbit.vz[i])) for i in idx]
    return ["xi", "x_breve", "z_breve"], rows


def cascade_filename(n: int, ext: str = "csv") -> str:
    return f"cascade_{'+' if n > 0 else '-'}{abs(n)}.{ext}"
