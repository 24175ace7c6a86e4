"""Contrast of interior orbit properties between neighbouring lentors.

Writing ``w_y = (v_y - x)**2`` and ``w_z = v_z - x``, the right-sided
contrast ``Λ (w(Λ + ε) - w(Λ)) / ε`` approximates ``W = Λ ∂Λ w``, which obeys

    -W_y + 𝔏_z W_z = 0
    𝔏_y W_y - W_z = r / ∂z r

with ``𝔏_y f = (f + e ∂x f) / (2 e Λ ∂z r)`` and
``𝔏_z f = (2 e² / g)(f + e ∂x f / D)`` along the orbit.  The same operators
drive the indicator cascades used to certify the interior bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .environment import Environment
from .errors import NotAPlaneWaveError
from .orbit import IntegratorOptions, Orbit, _sup_r, integrate_distillate

EDGE = 0.02
DEFAULT_DEPTH = 6
BLOWUP = 1e12


class ClassStraddleWarning(UserWarning):
    """The two orbits of a contrast terminate differently."""


@dataclass(frozen=True)
class ContrastSeries:
    lam: float
    epsilon: float
    xs: np.ndarray
    dw_y: np.ndarray
    dw_z: np.ndarray
    w_y: np.ndarray
    w_z: np.ndarray
    base: Orbit
    shifted: Orbit
    straddle: bool = False


@dataclass(frozen=True)
class BoundReport:
    bound_id: str
    worst_margin: float
    worst_x: Optional[float]
    passed: bool
    parts: tuple["BoundReport", ...] = ()

    def to_dict(self) -> dict:
        return {"bound_id": self.bound_id, "worst_margin": self.worst_margin,
                "worst_x": self.worst_x, "pass": self.passed}


@dataclass(frozen=True)
class CascadeReport:
    depth: int
    indices: tuple[tuple[int, ...], tuple[int, ...]]
    xs: np.ndarray
    delta: dict
    beta: dict
    first_nonpositive: dict
    notices: tuple[str, ...] = field(default=())


def bound_constant(D: float) -> float:
    """``c(D) = 2 + sgn(D - 1) + sgn(D - 1)**2``."""
    s = float(np.sign(D - 1.0))
    return 2.0 + s + s * s


def contrast_w(env: Environment, lam: float, eps: Optional[float] = None,
               opts: Optional[IntegratorOptions] = None) -> ContrastSeries:
    """Right-sided contrast of ``w`` between ``lam`` and ``lam + eps``.

    ``eps`` defaults to ``1e-4 * lam``.  A :class:`ClassStraddleWarning` is
    issued when one orbit is regular and the other singular.
    """
    eps = 1e-4 * lam if eps is None else eps
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    o0 = integrate_distillate(env, lam, opts)
    o1 = integrate_distillate(env, lam + eps, opts)
    straddle = o0.terminal.kind != o1.terminal.kind
    if straddle:
        warnings.warn("contrast straddles the critical lentor", ClassStraddleWarning, stacklevel=2)
    wy0, wy1 = o0.elevation ** 2, o1.elevation ** 2
    scale = lam / eps
    return ContrastSeries(lam=lam, epsilon=eps, xs=o0.xs, dw_y=scale * (wy1 - wy0),
                          dw_z=scale * (o1.gap - o0.gap), w_y=wy0, w_z=o0.gap.copy(),
                          base=o0, shifted=o1, straddle=straddle)


def _interior(xs: np.ndarray, lo: float = EDGE, hi: float = 1.0 - EDGE) -> np.ndarray:
    return (xs >= lo) & (xs <= hi)


def _ratio(env: Environment, xs: np.ndarray, vz: np.ndarray) -> np.ndarray:
    """``r / ∂z r`` along the orbit."""
    return np.asarray(env.reaction(xs, vz), dtype=float) / np.asarray(env.reaction_dz(xs, vz), dtype=float)


class Operators:
    """The contrast operators ``𝔏_y`` and ``𝔏_z`` sampled on a grid.

    ``∂x`` is taken from a cubic spline through the samples.
    """

    def __init__(self, env: Environment, lam: float, xs: np.ndarray, e: np.ndarray, g: np.ndarray):
        self.env, self.lam, self.xs, self.e, self.g = env, lam, xs, e, g
        vz = xs + g
        self.lz = lam * np.asarray(env.reaction_dz(xs, vz), dtype=float)
        self.ratio = _ratio(env, xs, vz)

    def dx(self, f: np.ndarray) -> np.ndarray:
        return CubicSpline(self.xs, f)(self.xs, 1)

    def L_y(self, f: np.ndarray) -> np.ndarray:
        return (f + self.e * self.dx(f)) / (2.0 * self.e * self.lz)

    def L_z(self, f: np.ndarray) -> np.ndarray:
        return (2.0 * self.e ** 2 / self.g) * (f + self.e * self.dx(f) / self.env.D)


def contrast_residual(series: ContrastSeries, lo: float = 0.1, hi: float = 0.9):
    """Residuals of the contrast equation on ``lo <= x <= hi``.

    Coefficients are taken halfway between the two orbits, which makes the
    residual second order in ``ε``.

    Returns
    -------
    xs, res_y, res_z : ndarray
        ``res_y = -W_y + 𝔏_z W_z`` (``None`` when ``D = 1``) and
        ``res_z = 𝔏_y W_y - W_z - r/∂z r``.
    """
    env = series.base.env
    lam_mid = series.lam + 0.5 * series.epsilon
    sel = _interior(series.xs, lo, hi)
    xs = series.xs[sel]
    e = 0.5 * (series.base.elevation + series.shifted.elevation)[sel]
    g = 0.5 * (series.base.gap + series.shifted.gap)[sel]
    W_y = series.dw_y[sel] * lam_mid / series.lam
    W_z = series.dw_z[sel] * lam_mid / series.lam
    ops = Operators(env, lam_mid, xs, e, g)
    res_z = ops.L_y(W_y) - W_z - ops.ratio
    res_y = None if env.D == 1.0 else -W_y + ops.L_z(W_z)
    return xs, res_y, res_z


def _report(bound_id: str, margin: np.ndarray, xs: np.ndarray, slack: float) -> BoundReport:
    i = int(np.argmin(margin))
    worst = float(margin[i])
    return BoundReport(bound_id, worst, float(xs[i]), bool(worst > -slack))


def check_contrast_bounds(series: ContrastSeries, env: Environment) -> BoundReport:
    """Interior bounds on the contrast.

    Checks ``0 < W_y / c < ‖Λr‖²`` and, for ``D != 1``, ``|W_z| < r / ∂z r``
    at every grid point with ``0.02 <= x <= 0.98``.  The slack is the
    one-sided difference error ``ε / Λ`` times the bound's scale.
    """
    sel = _interior(series.xs)
    xs = series.xs[sel]
    c = bound_constant(env.D)
    norm2 = (series.lam * _sup_r(env)) ** 2
    rel = series.epsilon / series.lam
    wy = series.dw_y[sel] / c
    parts = [
        _report("contrast_y_lower", wy, xs, 0.0),
        _report("contrast_y_upper", norm2 - wy, xs, rel * norm2),
    ]
    if env.D != 1.0:
        ratio = _ratio(env, xs, series.base.vz[sel])
        parts.append(_report("contrast_z", ratio - np.abs(series.dw_z[sel]), xs,
                             rel * float(np.max(ratio))))
    worst = min(parts, key=lambda p: p.worst_margin)
    return BoundReport("contrast", worst.worst_margin, worst.worst_x,
                       all(p.passed for p in parts), tuple(parts))


def check_vz_envelope(orbit: Orbit, env: Optional[Environment] = None, slack: float = 1e-8) -> BoundReport:
    """Plane-wave envelope ``1 - (1-x)^min(D,1) <= v_z <= 1 - (1-x)^max(D,1)``.

    Checked at every grid sample and every accepted integrator step.

    Raises
    ------
    NotAPlaneWaveError
        If the orbit terminates regularly.
    """
    env = orbit.env if env is None else env
    if orbit.regular:
        raise NotAPlaneWaveError("the envelope applies to plane waves; this orbit terminates regularly")
    lo_p, hi_p = min(env.D, 1.0), max(env.D, 1.0)
    grid_t = 1.0 - orbit.xs
    ts = np.concatenate([grid_t[orbit.reached], orbit.nat_t])
    gs = np.concatenate([orbit.gap[orbit.reached], orbit.nat_g])
    xs = np.concatenate([orbit.xs[orbit.reached], orbit.nat_x])
    # v_z = 1 - t + g, written to avoid forming 1 - t.
    lower = ts ** lo_p - ts + gs
    upper = ts - ts ** hi_p - gs
    parts = (_report("vz_envelope_lower", lower, xs, slack),
             _report("vz_envelope_upper", upper, xs, slack))
    worst = min(parts, key=lambda p: p.worst_margin)
    return BoundReport("vz_envelope", worst.worst_margin, worst.worst_x,
                       all(p.passed for p in parts), parts)


def predecessor(n: int, D: float) -> int:
    """Index map ``n -> (n + sgn n) L_n`` of the breach cascades."""
    s = 1 if n > 0 else -1
    L = 1 if n % 2 == 0 else int(np.sign(D - 1.0))
    return (n + s) * L


def cascade_sequence(start: int, depth: int, D: float) -> tuple[int, ...]:
    """The first ``depth`` indices of the cascade beginning at ``start``."""
    seq = [start]
    while len(seq) < depth:
        seq.append(predecessor(seq[-1], D))
    return tuple(seq)


def _L(n: int, D: float) -> float:
    return 1.0 if n % 2 == 0 else float(np.sign(D - 1.0))


def cascade_indicators(env: Environment, lam: float, eps: Optional[float] = None,
                       depth: int = DEFAULT_DEPTH, opts: Optional[IntegratorOptions] = None,
                       series: Optional[ContrastSeries] = None) -> CascadeReport:
    """Breach-indicator cascades ``δ_n`` on the interior grid.

    ``δ_{±1} = r/∂z r ∓ W_z`` and ``δ_{≺n} = L_n 𝔏_n δ_n`` with ``𝔏_n = 𝔏_z``
    for odd ``n`` and ``𝔏_y`` for even ``n``.  The bounds ``β_n`` follow the
    same recurrence (with ``- r/∂z r`` on even steps).  Levels whose values
    blow up under repeated spline differentiation are dropped with a notice.

    Raises
    ------
    ValueError
        For equidiffusive environments, where the cascades are vacuous.
    """
    if env.D == 1.0:
        raise ValueError("cascades are vacuous for D = 1")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    series = contrast_w(env, lam, eps, opts) if series is None else series
    sel = _interior(series.xs)
    xs = series.xs[sel]
    ops = Operators(env, lam, xs, series.base.elevation[sel], series.base.gap[sel])
    W = {"y": series.dw_y[sel], "z": series.dw_z[sel]}
    notices = []
    delta: dict[int, np.ndarray] = {}
    beta: dict[int, np.ndarray] = {}
    seqs = (cascade_sequence(-1, depth, env.D), cascade_sequence(1, depth, env.D))
    for seq in seqs:
        s0 = seq[0]
        b = s0 * ops.ratio
        d = ops.ratio - s0 * W["z"]
        for k, n in enumerate(seq):
            if not (np.all(np.isfinite(d)) and np.max(np.abs(d)) < BLOWUP * max(1.0, np.max(np.abs(ops.ratio)))):
                notices.append(f"cascade from {s0:+d} truncated before index {n:+d}")
                break
            delta[n], beta[n] = d, b
            if k + 1 == len(seq):
                break
            if n % 2:
                b_next = ops.L_z(b)
                d = _L(n, env.D) * ops.L_z(d)
            else:
                b_next = ops.L_y(b) - ops.ratio
                d = _L(n, env.D) * ops.L_y(d)
            b = b_next
    first = {}
    for n, d in delta.items():
        bad = np.flatnonzero(d <= 0.0)
        first[n] = float(xs[bad[0]]) if bad.size else None
    return CascadeReport(depth=depth, indices=seqs, xs=xs, delta=delta, beta=beta,
                         first_nonpositive=first, notices=tuple(notices))


def direct_indicator(report: CascadeReport, series: ContrastSeries, n: int) -> np.ndarray:
    """``δ_n = sgn(n)(β_n - W_n)`` evaluated from the stored bound ``β_n``."""
    sel = _interior(series.xs)
    comp = series.dw_z[sel] if n % 2 else series.dw_y[sel]
    return math.copysign(1.0, n) * (report.beta[n] - comp)


def check_phase_space(orbit: Orbit, tol: Optional[float] = None) -> BoundReport:
    """Phase-space box containment as a bound report (one part per face)."""
    tol = orbit.opts.abs_tol if tol is None else tol
    D = orbit.env.D
    bound = orbit.lam * _sup_r(orbit.env)
    ok = orbit.reached & np.isfinite(orbit.vy) & np.isfinite(orbit.vz)
    x, y, z = orbit.xs[ok], orbit.vy[ok], orbit.vz[ok]
    faces = (
        ("y_lower", y - np.maximum(x, z)),
        ("y_upper", x + bound - y),
        ("z_lower", z - x * min(D, 1.0)),
        ("z_upper", x * max(D, 1.0) - z),
    )
    parts = tuple(_report(name, m, x, tol) for name, m in faces)
    worst = min(parts, key=lambda p: p.worst_margin)
    return BoundReport("phase_space", worst.worst_margin, worst.worst_x,
                       all(p.passed for p in parts), parts)
