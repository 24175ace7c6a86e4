"""Flat ``key = value`` run configuration.

One assignment per line; ``#`` starts a comment; dotted keys group related
settings (``reaction.A``, ``tolerances.rel_tol``).  String values may be
quoted.  Every error carries the 1-based line it refers to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import ConfigError
from .orbit import IntegratorOptions

COMMANDS = ("solve", "orbit", "classify", "verify", "cascade", "cutoff", "profile")
FORMATS = ("csv", "json")
NEEDS_LAMBDA = ("orbit", "classify", "verify", "cascade", "profile")


@dataclass(frozen=True)
class RunConfig:
    """A fully populated run description.

    ``tolerances`` holds only the :class:`IntegratorOptions` fields that were
    set explicitly, as sorted ``(name, value)`` pairs.  ``format`` of ``None``
    selects the natural format of the command (JSON for reports, CSV for
    tables).
    """

    A: float
    m: int
    k: int
    D: float
    command: str
    family: str = "power"
    lam: Optional[float] = None
    cutoff_X: Optional[float] = None
    anchor_x: float = 0.5
    epsilon: Optional[float] = None
    depth: int = 6
    xi: bool = False
    tol: Optional[float] = None
    tolerances: tuple[tuple[str, object], ...] = field(default=())
    output_dir: str = "."
    format: Optional[str] = None

    def options(self) -> IntegratorOptions:
        return IntegratorOptions(**dict(self.tolerances))


def _to_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(s)
    return v


def _to_int(s: str) -> int:
    return int(s, 10)


def _to_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(s)


def _to_str(s: str) -> str:
    return s


# key -> (RunConfig field, type name, converter)
_KEYS: dict[str, tuple[str, str, Callable[[str], object]]] = {
    "reaction.family": ("family", "string", _to_str),
    "reaction.A": ("A", "real", _to_float),
    "reaction.m": ("m", "integer", _to_int),
    "reaction.k": ("k", "integer", _to_int),
    "diffusivity": ("D", "real", _to_float),
    "command": ("command", "string", _to_str),
    "lambda": ("lam", "real", _to_float),
    "cutoff_X": ("cutoff_X", "real", _to_float),
    "anchor_x": ("anchor_x", "real", _to_float),
    "epsilon": ("epsilon", "real", _to_float),
    "depth": ("depth", "integer", _to_int),
    "xi": ("xi", "boolean", _to_bool),
    "tol": ("tol", "real", _to_float),
    "output_dir": ("output_dir", "string", _to_str),
    "format": ("format", "string", _to_str),
}

_TOLERANCES: dict[str, tuple[str, Callable[[str], object]]] = {
    "rel_tol": ("real", _to_float),
    "abs_tol": ("real", _to_float),
    "delta_start": ("real", _to_float),
    "delta_end": ("real", _to_float),
    "max_steps": ("integer", _to_int),
    "singular_stop": ("real", _to_float),
    "stop_window": ("real", _to_float),
    "grid_n": ("integer", _to_int),
    "reg_tol": ("real", _to_float),
    "degeneracy_tol": ("real", _to_float),
    "reduced": ("boolean", _to_bool),
}

_REQUIRED = ("reaction.A", "reaction.m", "reaction.k", "diffusivity", "command")


def _unquote(raw: str) -> str:
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    return raw


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document.

    Raises
    ------
    ConfigError
        On syntax errors, unknown or repeated keys, type mismatches, missing
        required keys and violated command-specific requirements.
    """
    values: dict[str, object] = {}
    where: dict[str, int] = {}
    tols: dict[str, object] = {}
    lines = text.splitlines()
    for no, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", no)
        key, _, val = line.partition("=")
        key, val = key.strip(), _unquote(val.strip())
        if not key:
            raise ConfigError("empty key", no)
        if key in where:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key]})", no)
        if key.startswith("tolerances."):
            name = key[len("tolerances."):]
            if name not in _TOLERANCES:
                raise ConfigError(f"unknown key {key!r}", no)
            tname, conv = _TOLERANCES[name]
            try:
                tols[name] = conv(val)
            except ValueError:
                raise ConfigError(f"{key} expects a {tname}, got {val!r}", no) from None
        elif key in _KEYS:
            fname, tname, conv = _KEYS[key]
            try:
                values[fname] = conv(val)
            except ValueError:
                raise ConfigError(f"{key} expects a {tname}, got {val!r}", no) from None
        else:
            raise ConfigError(f"unknown key {key!r}", no)
        where[key] = no
    end = len(lines) + 1
    # Command requirements come first so that "command=orbit" alone
    # reports the missing lambda rather than the missing environment.
    cmd = values.get("command")
    if cmd is not None and cmd in NEEDS_LAMBDA and "lam" not in values:
        raise ConfigError(f"lambda required for {cmd}", where["command"])
    if cmd == "cutoff" and "cutoff_X" not in values:
        raise ConfigError("cutoff_X required for cutoff", where["command"])
    if "D" in values and not values["D"] > 0:
        raise ConfigError("D must be positive", where["diffusivity"])
    for key in _REQUIRED:
        if key not in where:
            raise ConfigError(f"missing required key {key!r}", end)
    values["tolerances"] = tuple(sorted(tols.items()))
    cfg = RunConfig(**values)
    line_of = {f: where[k] for k, (f, _, _) in _KEYS.items() if k in where}
    check_config(cfg, line_of, {n: where["tolerances." + n] for n in tols})
    return cfg


def check_config(cfg: RunConfig, line_of: Optional[dict] = None, tol_lines: Optional[dict] = None) -> RunConfig:
    """Semantic validation; ``line_of`` maps field names to source lines."""
    line_of = line_of or {}
    tol_lines = tol_lines or {}

    def fail(msg, fname):
        raise ConfigError(msg, line_of.get(fname))

    if cfg.family != "power":
        fail(f"unsupported reaction family {cfg.family!r} (only 'power')", "family")
    if cfg.command not in COMMANDS:
        fail(f"unknown command {cfg.command!r}; expected one of {', '.join(COMMANDS)}", "command")
    if not cfg.D > 0:
        fail("D must be positive", "D")
    if not cfg.A > 0:
        fail("reaction.A must be positive", "A")
    if cfg.m < 1:
        fail("reaction.m must be at least 1", "m")
    if cfg.k < 1:
        fail("reaction.k must be at least 1 (k = 0 leaves the terminus without a kernel point)", "k")
    if cfg.command in NEEDS_LAMBDA and cfg.lam is None:
        fail(f"lambda required for {cfg.command}", "command")
    if cfg.lam is not None and not cfg.lam > 0:
        fail("lambda must be positive", "lam")
    if cfg.command == "cutoff" and cfg.cutoff_X is None:
        fail("cutoff_X required for cutoff", "command")
    if cfg.cutoff_X is not None and not 0.0 < cfg.cutoff_X < 1.0:
        fail("cutoff_X must lie in (0, 1)", "cutoff_X")
    if not 0.0 < cfg.anchor_x < 1.0:
        fail("anchor_x must lie in (0, 1)", "anchor_x")
    if cfg.epsilon is not None and not cfg.epsilon > 0:
        fail("epsilon must be positive", "epsilon")
    if cfg.depth < 1:
        fail("depth must be at least 1", "depth")
    if cfg.tol is not None and not 0.0 < cfg.tol < 1.0:
        fail("tol must lie in (0, 1)", "tol")
    if cfg.format is not None and cfg.format not in FORMATS:
        fail(f"format must be one of {', '.join(FORMATS)}", "format")
    if not cfg.output_dir:
        fail("output_dir must not be empty", "output_dir")
    try:
        cfg.options()
    except (TypeError, ValueError) as exc:
        line = min(tol_lines.values()) if tol_lines else None
        raise ConfigError(f"invalid tolerances: {exc}", line) from None
    return cfg


def with_overrides(cfg: RunConfig, lam: Optional[float] = None, command: Optional[str] = None,
                   output_dir: Optional[str] = None) -> RunConfig:
    """Apply command-line overrides and re-validate."""
    changes = {}
    if lam is not None:
        changes["lam"] = lam
    if command is not None:
        changes["command"] = command
    if output_dir is not None:
        changes["output_dir"] = output_dir
    return check_config(replace(cfg, **changes))


def _emit_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v + '"'
    return str(v)


def emit_config(cfg: RunConfig) -> str:
    """Render ``cfg`` so that ``parse_config(emit_config(cfg)) == cfg``."""
    out = []
    for key, (fname, _, _) in _KEYS.items():
        v = getattr(cfg, fname)
        if v is None:
            continue
        out.append(f"{key} = {_emit_value(v)}")
    for name, v in cfg.tolerances:
        out.append(f"tolerances.{name} = {_emit_value(v)}")
    return "\n".join(out) + "\n"
