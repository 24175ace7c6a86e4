"""Command-line front end: ``planewave <config> [--lambda L] [--command C] [--out DIR]``.

Exit status is 0 on success, 2 for configuration errors, 3 for numerical
failures and 4 when a verification bound fails.  Every artifact is rendered
in memory before anything is written, and files written by a failing run are
removed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import RunConfig, parse_config, with_overrides
from .contrast import (BoundReport, cascade_indicators, check_contrast_bounds, check_phase_space,
                       check_vz_envelope, contrast_w)
from .critical import find_lambda_dagger, find_lambda_star
from .environment import Environment, make_power_reaction, validate
from .errors import ConfigError, EnvironmentError_, NotAPlaneWaveError, NumericalError
from .orbit import integrate_distillate, reconstruct_xi
from .serialize import cascade_filename, dumps_csv, dumps_json, orbit_rows, profile_rows, write_text

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4

TABULAR = ("orbit", "cascade", "profile")


def build_environment(cfg: RunConfig) -> Environment:
    env = make_power_reaction(cfg.A, cfg.m, cfg.k, cfg.D)
    report = validate(env)
    if not report.ok:
        first = report.violations[0]
        raise EnvironmentError_(f"environment is not admissible: {first.condition} at {first.point}")
    return env


def _table(header, rows, fmt: str) -> str:
    if fmt == "csv":
        return dumps_csv(header, rows)
    cols = {h: [r[i] for r in rows] for i, h in enumerate(header)}
    return dumps_json(cols)


def _record(d: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps_json(d)
    flat = {}
    for k, v in d.items():
        if isinstance(v, (list, tuple)) and len(v) == 2 and k == "bracket":
            flat["bracket_lo"], flat["bracket_hi"] = v
        else:
            flat[k] = v
    return dumps_csv(list(flat), [list(flat.values())])


def _bound_dict(b: BoundReport) -> dict:
    d = b.to_dict()
    if b.parts:
        d["parts"] = [p.to_dict() for p in b.parts]
    return d


def render(cfg: RunConfig) -> tuple[dict[str, str], bool]:
    """Compute the artifacts of ``cfg``.

    Returns
    -------
    files : dict
        File name to content.
    ok : bool
        False when a verification bound failed.
    """
    env = build_environment(cfg)
    opts = cfg.options()
    fmt = cfg.format or ("csv" if cfg.command in TABULAR else "json")
    ext = fmt
    cmd = cfg.command
    if cmd == "solve":
        rep = find_lambda_star(env, tol=cfg.tol or 1e-6, opts=opts)
        return {f"solve.{ext}": _record(rep.to_dict(), fmt)}, True
    if cmd == "cutoff":
        rep = find_lambda_dagger(env, cfg.cutoff_X, tol=cfg.tol or 1e-8, opts=opts)
        if not rep.monotone:
            raise NumericalError("cutoff root search was not monotone")
        return {f"cutoff.{ext}": _record(rep.to_dict(), fmt)}, True
    orbit = integrate_distillate(env, cfg.lam, opts)
    if cmd == "orbit":
        if cfg.xi:
            orbit = reconstruct_xi(orbit, cfg.anchor_x)
        return {f"orbit.{ext}": _table(*orbit_rows(orbit), fmt)}, True
    if cmd == "profile":
        orbit = reconstruct_xi(orbit, cfg.anchor_x)
        return {f"profile.{ext}": _table(*profile_rows(orbit), fmt)}, True
    if cmd == "classify":
        d = {"lambda": cfg.lam}
        d.update(orbit.terminal.to_dict())
        return {f"classify.{ext}": _record(d, fmt)}, True
    if cmd == "verify":
        series = contrast_w(env, cfg.lam, cfg.epsilon, opts)
        reports = [check_phase_space(orbit), check_vz_envelope(orbit),
                   check_contrast_bounds(series, env)]
        ok = all(r.passed for r in reports)
        if fmt == "json":
            text = dumps_json({"lambda": cfg.lam, "pass": ok, "reports": [_bound_dict(r) for r in reports]})
        else:
            rows = []
            for r in reports:
                rows.append((r.bound_id, r.worst_margin, r.worst_x, r.passed))
                rows.extend((p.bound_id, p.worst_margin, p.worst_x, p.passed) for p in r.parts)
            text = dumps_csv(["bound_id", "worst_margin", "worst_x", "pass"], rows)
        return {f"verify.{ext}": text}, ok
    if cmd == "cascade":
        if orbit.regular:
            raise NotAPlaneWaveError("cascades require a sub-critical lentor")
        rep = cascade_indicators(env, cfg.lam, cfg.epsilon, depth=cfg.depth, opts=opts)
        files = {}
        for n in sorted(rep.delta, key=lambda n: (abs(n), n)):
            rows = list(zip(rep.xs.tolist(), rep.delta[n].tolist()))
            files[cascade_filename(n, ext)] = _table(["x", "delta_n"], rows, fmt)
        return files, True
    raise ConfigError(f"unknown command {cmd!r}")


def run(cfg: RunConfig, stderr=None) -> int:
    """Execute ``cfg``, writing its artifacts into ``cfg.output_dir``."""
    stderr = sys.stderr if stderr is None else stderr
    try:
        files, ok = render(cfg)
    except (ConfigError, EnvironmentError_) as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (NumericalError, NotAPlaneWaveError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    out = Path(cfg.output_dir)
    created_dir = not out.exists()
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            written.append(write_text(out / name, text))
    except OSError as exc:
        for p in written:
            p.unlink(missing_ok=True)
        if created_dir and out.exists() and not any(out.iterdir()):
            out.rmdir()
        print(f"cannot write output: {exc}", file=stderr)
        return EXIT_NUMERICAL
    if not ok:
        print("verification failed: at least one bound reports pass=false", file=stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planewave", description="Plane-wave solver for two-species fronts.")
    p.add_argument("config", help="path to a key = value configuration file")
    p.add_argument("--lambda", dest="lam", type=float, help="override the lentor")
    p.add_argument("--command", help="override the command")
    p.add_argument("--out", help="override the output directory")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = with_overrides(parse_config(text), args.lam, args.command, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
