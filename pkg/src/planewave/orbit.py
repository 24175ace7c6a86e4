"""Compact orbits: integration of the distillate from the origin to the terminus.

With ``x`` as independent variable the orbit is described by the elevation
``e = v_y - x`` and the fuel gap ``g = v_z - x``::

    de/dx = Λ r(x, x + g) / e - 1
    dg/dx = (D - 1) - D g / e
    dξ/dx = 1 / e

The first leg runs in ``x`` from the launch point to ``x = 1/2``.  The second
runs in ``t = 1 - x`` from ``1/2`` down to ``t = δ_end`` so that distances to
the terminus are carried without cancellation.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .environment import Environment, reaction_sup
from .errors import NumericalError, UnboundedCoordinateError
from .kernel import (PhasePoint, TerminalReport, TerminalTail, classify_terminal, launch_offsets,
                     terminal_spectrum, REG_TOL, DEGENERACY_TOL)
from .stepper import Leg, Problem, integrate_leg

HALF = 0.5
XI_LIMIT = 1e7


@dataclass(frozen=True)
class IntegratorOptions:
    """Tolerances and termination settings.

    ``abs_tol`` is scaled by the distance to the nearer kernel point, so it
    acts as a tolerance relative to ``min(x, 1 - x)``.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    delta_start: Optional[float] = None
    delta_end: float = 2.0 ** -40
    max_steps: int = 200_000
    singular_stop: float = 1e-3
    stop_window: float = 0.05
    grid_n: int = 512
    reg_tol: float = REG_TOL
    degeneracy_tol: float = DEGENERACY_TOL
    reduced: bool = False

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "singular_stop", "reg_tol", "degeneracy_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive real, got {v!r}")
        if not 0.0 < self.delta_end < 0.25:
            raise ValueError("delta_end must lie in (0, 1/4)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.grid_n < 4 or self.grid_n % 2:
            raise ValueError("grid_n must be an even integer >= 4")


@dataclass(frozen=True)
class Orbit:
    """A sampled compact orbit.

    ``xs``, ``vy``, ``vz`` (and ``xi`` once reconstructed) live on the fixed
    reporting grid.  The ``nat_*`` arrays hold every accepted integrator step,
    with ``nat_t = 1 - nat_x`` carried exactly on the terminal leg.
    """

    lam: float
    env: Environment
    opts: IntegratorOptions
    xs: np.ndarray
    vy: np.ndarray
    vz: np.ndarray
    elevation: np.ndarray
    gap: np.ndarray
    xi_raw: np.ndarray
    terminal: TerminalReport
    launch: PhasePoint
    tail: TerminalTail
    nat_x: np.ndarray
    nat_t: np.ndarray
    nat_e: np.ndarray
    nat_g: np.ndarray
    nat_xi: np.ndarray
    reached: np.ndarray
    xi: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)

    @property
    def regular(self) -> bool:
        return self.terminal.regular

    def vy_at(self, x: float) -> float:
        """``v_y`` at an arbitrary ``x`` by Hermite interpolation of the steps."""
        return x + float(_elevation_spline(self)(x))


def report_grid(n: int = 512) -> np.ndarray:
    """Midpoints ``(2i + 1)/(2n)`` of ``n`` equal cells on ``[0, 1]``."""
    return (2.0 * np.arange(n) + 1.0) / (2.0 * n)


@functools.lru_cache(maxsize=64)
def _sup_r(env: Environment) -> float:
    return reaction_sup(env)


def _tail_stops(delta_end: float) -> list[float]:
    out = []
    t = delta_end
    while t < 0.25 * (1 + 1e-12):
        out.append(t)
        t *= 2.0
    return sorted(out, reverse=True)


class _System:
    """Right-hand sides and box checks for both legs."""

    def __init__(self, env: Environment, lam: float, opts: IntegratorOptions):
        self.env, self.lam, self.opts = env, lam, opts
        self.D = env.D
        self.reduced = opts.reduced and env.D == 1.0
        self.bound = lam * _sup_r(env)

    # state: [e, g, xi] (full) or [e, xi] (reduced)
    def _split(self, y):
        if self.reduced:
            return y[0], 0.0, y[1]
        return y[0], y[1], y[2]

    def _pack(self, de, dg, dxi):
        if self.reduced:
            return np.array([de, dxi])
        return np.array([de, dg, dxi])

    def rate_x(self, x: float, t: float, y) -> np.ndarray:
        e, g, _ = self._split(y)
        if not (e > 0.0):
            return self._pack(math.nan, math.nan, math.nan)
        if t < HALF:
            lr = self.lam * float(self.env.reaction_c(t, 1.0 - (t - g)))
        else:
            lr = self.lam * float(self.env.reaction(x, x + g))
        D = self.D
        return self._pack(lr / e - 1.0, (D - 1.0) - D * g / e, 1.0 / e)

    def jac_x(self, x: float, t: float, y) -> np.ndarray:
        e, g, _ = self._split(y)
        e = max(e, 1e-300)
        z = (1.0 - (t - g)) if t < HALF else x + g
        lr = self.lam * float(self.env.reaction(x, z)) if t >= HALF else \
            self.lam * float(self.env.reaction_c(t, z))
        lz = self.lam * float(self.env.reaction_dz(x, z))
        D = self.D
        if self.reduced:
            return np.array([[-lr / e**2, 0.0], [-1.0 / e**2, 0.0]])
        return np.array([[-lr / e**2, lz / e, 0.0],
                         [D * g / e**2, -D / e, 0.0],
                         [-1.0 / e**2, 0.0, 0.0]])

    def admissible(self, x: float, t: float, y) -> bool:
        e, g, _ = self._split(y)
        if not (e > 0.0) or not math.isfinite(e) or not math.isfinite(g):
            return False
        d = min(x, t)
        slack = 10.0 * (self.opts.abs_tol * d + self.opts.rel_tol * abs(e)) + 1e-15 * d
        if e > self.bound + slack:
            return False
        if self.reduced:
            return True
        gs = 10.0 * (self.opts.abs_tol * d + self.opts.rel_tol * abs(g)) + 1e-15 * d
        if g > e + gs:
            return False
        reach = (self.D - 1.0) * x
        if self.D >= 1.0:
            return -gs <= g <= reach + gs
        return reach - gs <= g <= gs

    def phase_one(self) -> Problem:
        return Problem(
            f=lambda x, y: self.rate_x(x, 1.0 - x, y),
            jac=lambda x, y: self.jac_x(x, 1.0 - x, y),
            n_ctrl=1 if self.reduced else 2,
            scale=lambda x: x,
            admissible=lambda x, y: self.admissible(x, 1.0 - x, y),
            h_floor=lambda x: 1e-14 * x,
        )

    def phase_two(self) -> Problem:
        opts = self.opts

        def stop(t, y):
            if t > opts.stop_window:
                return False
            e, g, _ = self._split(y)
            q = e / t
            if q >= opts.singular_stop:
                return False
            lr = self.lam * float(self.env.reaction_c(t, 1.0 - (t - g)))
            # Only a falling elevation ratio is committed to the lower asymptote.
            return q - 1.0 + lr / e <= 0.0

        return Problem(
            f=lambda t, y: -self.rate_x(1.0 - t, t, y),
            jac=lambda t, y: -self.jac_x(1.0 - t, t, y),
            n_ctrl=1 if self.reduced else 2,
            scale=lambda t: t,
            admissible=lambda t, y: self.admissible(1.0 - t, t, y),
            h_floor=lambda t: 1e-14 * t,
            stop=stop,
        )


def integrate_distillate(env: Environment, lam: float, opts: Optional[IntegratorOptions] = None) -> Orbit:
    """Integrate the compact orbit for lentor ``lam``.

    Parameters
    ----------
    env : Environment
    lam : float
        Lentor, strictly positive.
    opts : IntegratorOptions, optional

    Returns
    -------
    Orbit
        Grid samples, all accepted steps and the terminal classification.

    Raises
    ------
    StiffnessError
        Step budget exhausted.
    PhaseSpaceEjection
        The orbit could not be kept inside the phase-space box.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError("lambda must be a positive real")
    opts = opts or IntegratorOptions()
    sysm = _System(env, lam, opts)
    x0, e0, g0 = launch_offsets(env, lam, opts.delta_start)
    y0 = np.array([e0, 0.0]) if sysm.reduced else np.array([e0, g0, 0.0])
    grid = report_grid(opts.grid_n)

    stops1 = [float(v) for v in grid if x0 < v < HALF] + [HALF]
    leg1 = integrate_leg(sysm.phase_one(), x0, y0, stops1, h0=0.01 * x0,
                         rtol=opts.rel_tol, atol=opts.abs_tol, max_steps=opts.max_steps)
    if leg1.reason != "end":
        raise NumericalError(f"first leg stopped early ({leg1.reason})")

    grid_t = [float(1.0 - v) for v in grid if v > HALF]
    stops2 = sorted(set(grid_t) | set(_tail_stops(opts.delta_end)), reverse=True)
    stops2 = [t for t in stops2 if t < HALF]
    budget = opts.max_steps - leg1.n_steps - leg1.n_rejected
    leg2 = integrate_leg(sysm.phase_two(), HALF, leg1.y[-1], stops2, h0=max(leg1.h_last, 1e-6),
                         rtol=opts.rel_tol, atol=opts.abs_tol, max_steps=max(budget, 1))
    return _assemble(env, lam, opts, sysm, grid, (x0, e0, g0), leg1, leg2)


def _states(sysm: _System, leg: Leg):
    ys = np.array(leg.y)
    if sysm.reduced:
        return ys[:, 0], np.zeros(len(ys)), ys[:, 1]
    return ys[:, 0], ys[:, 1], ys[:, 2]


def _assemble(env, lam, opts, sysm, grid, launch, leg1: Leg, leg2: Leg) -> Orbit:
    x0, e0, g0 = launch
    s1 = np.array(leg1.s)
    e1, g1, xi1 = _states(sysm, leg1)
    t2 = np.array(leg2.s[1:])
    e2, g2, xi2 = _states(sysm, leg2)
    e2, g2, xi2 = e2[1:], g2[1:], xi2[1:]
    nat_x = np.concatenate([s1, 1.0 - t2])
    nat_t = np.concatenate([1.0 - s1, t2])
    nat_e = np.concatenate([e1, e2])
    nat_g = np.concatenate([g1, g2])
    nat_xi = np.concatenate([xi1, xi2])

    # Grid samples are landed on exactly; look them up.
    lookup1 = {float(s): i for i, s in enumerate(s1)}
    lookup2 = {float(t): i for i, t in enumerate(t2)}
    n = grid.size
    e_g = np.full(n, np.nan)
    g_g = np.full(n, np.nan)
    xi_g = np.full(n, np.nan)
    reached = np.zeros(n, dtype=bool)
    for i, xv in enumerate(grid):
        if xv < HALF:
            j = lookup1.get(float(xv))
            if j is not None:
                e_g[i], g_g[i], xi_g[i], reached[i] = e1[j], g1[j], xi1[j], True
        else:
            j = lookup2.get(float(1.0 - xv))
            if j is not None:
                e_g[i], g_g[i], xi_g[i], reached[i] = e2[j], g2[j], xi2[j], True
    if leg2.reason == "singular" and not reached.all():
        # Beyond a singular stop the orbit follows the lower asymptote: e ∝ t.
        tl, el, gl = float(t2[-1]), float(e2[-1]), float(g2[-1])
        for i in np.flatnonzero(~reached):
            tt = 1.0 - grid[i]
            if tt < tl:
                e_g[i] = el * tt / tl
                g_g[i] = gl * tt / tl
    xs = grid.copy()

    tail_stops = set(_tail_stops(opts.delta_end))
    sel = [i for i, t in enumerate(t2) if float(t) in tail_stops]
    ts = t2[sel]
    qs = e2[sel] / ts
    last_t, last_e, last_g = float(t2[-1]), float(e2[-1]), float(g2[-1])
    if qs.size == 0 or ts[-1] != last_t:
        ts = np.append(ts, last_t)
        qs = np.append(qs, last_e / last_t)
    lr = lam * float(env.reaction_c(last_t, 1.0 - (last_t - last_g)))
    tail = TerminalTail(ts=ts, qs=qs, stop=leg2.reason, last_t=last_t, last_e=last_e,
                        last_dvy=lr / last_e)
    spec = terminal_spectrum(env, lam, opts.degeneracy_tol)
    report = classify_terminal(tail, spec, env, lam, opts.reg_tol, opts.degeneracy_tol)
    stats = {
        "steps": leg1.n_steps + leg2.n_steps,
        "rejected": leg1.n_rejected + leg2.n_rejected,
        "implicit": leg1.n_implicit + leg2.n_implicit,
        "stop": leg2.reason,
    }
    return Orbit(lam=lam, env=env, opts=opts, xs=xs, vy=xs + e_g, vz=xs + g_g, elevation=e_g,
                 gap=g_g, xi_raw=xi_g, terminal=report, launch=PhasePoint(x0, x0 + e0, x0 + g0),
                 tail=tail, nat_x=nat_x, nat_t=nat_t, nat_e=nat_e, nat_g=nat_g, nat_xi=nat_xi,
                 reached=reached, stats=stats)


def _rates(orbit: Orbit, x: np.ndarray, t: np.ndarray, e: np.ndarray, g: np.ndarray):
    """``de/dx`` and ``dg/dx`` at stored states."""
    env, lam, D = orbit.env, orbit.lam, orbit.env.D
    lr = np.where(t < HALF, lam * np.asarray(orbit.env.reaction_c(t, 1.0 - (t - g)), dtype=float),
                  lam * np.asarray(env.reaction(x, x + g), dtype=float))
    return lr / e - 1.0, (D - 1.0) - D * g / e, lr


def _elevation_spline(orbit: Orbit) -> CubicHermiteSpline:
    x, t, e, g = orbit.nat_x, orbit.nat_t, orbit.nat_e, orbit.nat_g
    de, _, _ = _rates(orbit, x, t, e, g)
    keep = np.concatenate([[True], np.diff(x) > 0])
    return CubicHermiteSpline(x[keep], e[keep], de[keep])


def reconstruct_xi(orbit: Orbit, anchor_x: float = 0.5) -> Orbit:
    """Fill ``xi`` on the reporting grid with ``ξ(anchor_x) = 0``.

    Raises
    ------
    ValueError
        If ``anchor_x`` lies outside the sampled range.
    UnboundedCoordinateError
        If ``|ξ|`` exceeds ``1e7`` anywhere on the grid, which happens as the
        orbit collapses onto the spurious limit ``v = x``.
    """
    x = orbit.nat_x
    if not (x[0] <= anchor_x <= x[-1]) or not (0.0 < anchor_x < 1.0):
        raise ValueError(f"anchor {anchor_x!r} outside sampled range [{x[0]!r}, {x[-1]!r}]")
    keep = np.concatenate([[True], np.diff(x) > 0])
    spl = CubicHermiteSpline(x[keep], orbit.nat_xi[keep], 1.0 / orbit.nat_e[keep])
    xi0 = float(spl(anchor_x))
    xi = orbit.xi_raw - xi0
    finite = xi[np.isfinite(xi)]
    if finite.size == 0 or np.max(np.abs(finite)) > XI_LIMIT or abs(xi0) > XI_LIMIT:
        raise UnboundedCoordinateError(
            "travelling-wave coordinate diverges (the orbit is near the spurious limit v = x)")
    if np.any(np.diff(finite) <= 0):
        raise NumericalError("reconstructed coordinate is not strictly increasing")
    return replace(orbit, xi=xi)


def phase_space_check(orbit: Orbit, tol: Optional[float] = None) -> list[dict]:
    """Samples outside the phase-space box.

    The box is ``0 <= x <= 1``, ``max(x, z) <= y <= x + ‖Λr‖`` and
    ``x min(D,1) <= z <= x max(D,1)``; ``‖Λr‖`` is the supremum of ``Λr``
    over the same region.
    """
    tol = orbit.opts.abs_tol if tol is None else tol
    D = orbit.env.D
    bound = orbit.lam * _sup_r(orbit.env)
    out = []
    for x, y, z in zip(orbit.xs, orbit.vy, orbit.vz):
        out.extend(point_violations(float(x), float(y), float(z), D, bound, tol))
    return out


def point_violations(x: float, y: float, z: float, D: float, bound: float, tol: float) -> list[dict]:
    out = []
    checks = (
        ("x_range", min(x, 1.0 - x)),
        ("y_lower", y - max(x, z)),
        ("y_upper", x + bound - y),
        ("z_lower", z - x * min(D, 1.0)),
        ("z_upper", x * max(D, 1.0) - z),
    )
    for name, margin in checks:
        if not (margin >= -tol):
            out.append({"condition": name, "x": x, "margin": margin})
    return out


def spurious_orbit(env: Environment, lam: float, xs: Optional[np.ndarray] = None):
    """First-order small-``Λ`` expansion about the spurious limit ``v = x``.

    Returns ``(xs, vy, vz)`` with ``v_y ≈ x + Λ r(x, x)`` and
    ``v_z ≈ x + (1 - 1/D) Λ r(x, x)``.
    """
    xs = report_grid() if xs is None else np.asarray(xs, dtype=float)
    lr = lam * np.asarray(env.reaction(xs, xs), dtype=float)
    return xs, xs + lr, xs + (1.0 - 1.0 / env.D) * lr


def autonomous_rate(env: Environment, lam: float, u: np.ndarray) -> np.ndarray:
    """Vector field ``a_Λ(u) = (y - x, Λ r(x, z), D (y - z))`` (rows of ``u``)."""
    u = np.atleast_2d(u)
    x, y, z = u[:, 0], u[:, 1], u[:, 2]
    return np.column_stack([y - x, lam * np.asarray(env.reaction(x, z), dtype=float) * np.ones_like(x),
                            env.D * (y - z)])


class Profile:
    """The travelling wave ``u(ξ)`` as a piecewise-cubic Hermite interpolant.

    Built from every accepted step of an orbit with ``ξ`` reconstructed; the
    derivatives of the interpolant at the nodes are the exact vector field.
    """

    def __init__(self, orbit: Orbit, anchor_x: float = 0.5):
        x = orbit.nat_x
        keep = np.concatenate([[True], np.diff(x) > 0])
        spl = CubicHermiteSpline(x[keep], orbit.nat_xi[keep], 1.0 / orbit.nat_e[keep])
        xi = orbit.nat_xi[keep] - float(spl(anchor_x))
        if np.any(np.diff(xi) <= 0):
            raise NumericalError("travelling-wave coordinate is not increasing along the steps")
        xk = x[keep]
        u = np.column_stack([xk, xk + orbit.nat_e[keep], xk + orbit.nat_g[keep]])
        du = autonomous_rate(orbit.env, orbit.lam, u)
        self.xi = xi
        self._spl = CubicHermiteSpline(xi, u, du, axis=0)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.xi[0]), float(self.xi[-1])

    def __call__(self, xi) -> np.ndarray:
        return self._spl(np.asarray(xi, dtype=float))
