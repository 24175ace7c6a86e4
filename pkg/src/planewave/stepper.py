"""Adaptive one-step integration with exact stop points and state rejection.

The driver advances an explicit Dormand-Prince 5(4) pair.  Accepted steps
must also satisfy a caller-supplied admissibility test; a failing step is
discarded and retried with half the step.  When the classical stiffness
estimate fires repeatedly the driver hands over to scipy's Radau IIA
implementation segment by segment, and returns to the explicit pair once the
problem relaxes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import Radau

from .errors import PhaseSpaceEjection, StiffnessError

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

MAX_HALVINGS = 40
STIFF_HRHO = 1.2
STIFF_COUNT = 15
RELAX_HRHO = 0.5
RELAX_COUNT = 10


@dataclass
class Problem:
    """Everything the driver needs to know about one integration leg.

    Attributes
    ----------
    f : callable
        ``f(s, y) -> dy/ds``; must return non-finite values where undefined.
    jac : callable
        ``jac(s, y) -> ∂f/∂y`` used by the implicit fallback.
    n_ctrl : int
        Leading components under error control; the rest ride along.
    scale : callable
        ``scale(s)`` multiplies ``abs_tol`` (distance to the nearest kernel point).
    admissible : callable
        ``admissible(s, y) -> bool`` for accepted states.
    stop : callable, optional
        ``stop(s, y) -> bool`` ends the leg early after an accepted step.
    h_floor : callable
        Smallest permitted ``|h|`` at ``s``.
    """

    f: Callable[[float, np.ndarray], np.ndarray]
    jac: Callable[[float, np.ndarray], np.ndarray]
    n_ctrl: int
    scale: Callable[[float], float]
    admissible: Callable[[float, np.ndarray], bool]
    h_floor: Callable[[float], float]
    stop: Optional[Callable[[float, np.ndarray], bool]] = None


@dataclass
class Leg:
    """Accepted states of one integration leg, including every stop point."""

    s: list = field(default_factory=list)
    y: list = field(default_factory=list)
    reason: str = "end"
    h_last: float = 0.0
    n_steps: int = 0
    n_rejected: int = 0
    n_implicit: int = 0


class _Budget:
    def __init__(self, max_steps: int):
        self.left = max_steps

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise StiffnessError("maximum number of integration steps exceeded")


def _err_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, n: int, atol: float, rtol: float) -> float:
    sc = atol + rtol * np.maximum(np.abs(y0[:n]), np.abs(y1[:n]))
    return float(np.sqrt(np.mean((err[:n] / sc) ** 2)))


def _dp_step(f, s, y, h, k1, n):
    ks = [k1]
    for i in range(1, 7):
        a = _A[i]
        yi = y + h * sum(a[j] * ks[j] for j in range(i) if a[j] != 0.0)
        ki = f(s + _C[i] * h, yi)
        if not np.all(np.isfinite(ki)):
            return None
        ks.append(ki)
    y_new = y + h * sum(_B[j] * ks[j] for j in range(6) if _B[j] != 0.0)
    err = h * sum(_E[j] * ks[j] for j in range(7) if _E[j] != 0.0)
    # Stage 7 is evaluated at y_new, stage 6 at the penultimate point.
    y6 = y + h * sum(_A[5][j] * ks[j] for j in range(5))
    dk = np.linalg.norm((ks[6] - ks[5])[:n])
    dy = np.linalg.norm((y_new - y6)[:n])
    rho = float(dk / dy) if dy > 0 else 0.0
    return y_new, err, ks[6], rho


def _spectral_radius(J: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(J))))


def integrate_leg(prob: Problem, s0: float, y0: np.ndarray, stops: Sequence[float], h0: float,
                  rtol: float, atol: float, max_steps: int) -> Leg:
    """Integrate from ``s0`` through every value in ``stops`` (monotone).

    The last stop is the end of the leg.  Returns the accepted states; the
    driver lands exactly on each stop.
    """
    stops = list(stops)
    if not stops:
        return Leg(s=[s0], y=[np.array(y0, dtype=float)])
    direction = 1.0 if stops[-1] > s0 else -1.0
    budget = _Budget(max_steps)
    leg = Leg(s=[s0], y=[np.array(y0, dtype=float)])
    s, y = s0, np.array(y0, dtype=float)
    h = abs(h0)
    k1 = prob.f(s, y)
    if not np.all(np.isfinite(k1)):
        raise PhaseSpaceEjection("right-hand side undefined at the initial state")
    stiff_hits = 0
    idx = 0
    while idx < len(stops):
        target = stops[idx]
        # Explicit phase.
        halvings = 0
        while True:
            budget.spend()
            remaining = abs(target - s)
            floor = prob.h_floor(s)
            if h < floor:
                if remaining <= floor:
                    h = remaining
                else:
                    leg.reason = "floor"
                    leg.h_last = h
                    return leg
            land = h >= remaining * (1.0 - 1e-12) or remaining - h < 0.1 * h
            step = remaining if land else h
            res = _dp_step(prob.f, s, y, direction * step, k1, prob.n_ctrl)
            if res is None:
                h = 0.5 * step
                halvings += 1
                leg.n_rejected += 1
                if halvings > MAX_HALVINGS:
                    raise PhaseSpaceEjection("right-hand side undefined after repeated step halving")
                continue
            y_new, err, k_last, rho = res
            s_new = target if land else s + direction * step
            en = _err_norm(err, y, y_new, prob.n_ctrl, atol * prob.scale(s_new), rtol)
            if not math.isfinite(en) or en > 1.0:
                fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
                h = step * fac
                leg.n_rejected += 1
                continue
            if not prob.admissible(s_new, y_new):
                h = 0.5 * step
                halvings += 1
                leg.n_rejected += 1
                if halvings > MAX_HALVINGS:
                    raise PhaseSpaceEjection(f"orbit left the phase-space box near s = {s!r}")
                continue
            halvings = 0
            s, y, k1 = s_new, y_new, k_last
            leg.s.append(s)
            leg.y.append(y)
            leg.n_steps += 1
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            h_next = step * fac
            if not land:
                h = h_next
            else:
                h = max(h, h_next) if step < h else h_next
            if prob.stop is not None and prob.stop(s, y):
                leg.reason = "singular"
                leg.h_last = step
                return leg
            stiff_hits = stiff_hits + 1 if step * rho > STIFF_HRHO else max(0, stiff_hits - 1)
            if land:
                idx += 1
                if idx >= len(stops):
                    break
                target = stops[idx]
            if stiff_hits >= STIFF_COUNT:
                break
        if idx >= len(stops):
            break
        # Implicit phase: run until the problem relaxes or the leg ends.
        stiff_hits = 0
        s, y, h, idx, done = _implicit(prob, leg, s, y, h, stops, idx, rtol, atol, budget)
        if done:
            return leg
        k1 = prob.f(s, y)
    leg.h_last = h
    return leg


def _implicit(prob: Problem, leg: Leg, s, y, h, stops, idx, rtol, atol, budget):
    n = y.size
    relax = 0
    max_step = np.inf
    while idx < len(stops):
        target = stops[idx]
        atol_vec = np.full(n, 1e300)
        atol_vec[:prob.n_ctrl] = atol * min(prob.scale(s), prob.scale(target))
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore")
            solver = Radau(prob.f, s, y, target, first_step=min(h, abs(target - s), max_step),
                           max_step=max_step, rtol=rtol, atol=atol_vec, jac=prob.jac)
            restarted = False
            while solver.status == "running":
                budget.spend()
                s_prev, y_prev = solver.t, solver.y.copy()
                msg = solver.step()
                if solver.status == "failed":
                    raise StiffnessError(f"implicit integrator failed near s = {s_prev!r}: {msg}")
                s_new, y_new = solver.t, solver.y.copy()
                if solver.status == "finished":
                    s_new = target
                if not np.all(np.isfinite(y_new)) or not prob.admissible(s_new, y_new):
                    leg.n_rejected += 1
                    step = abs(s_new - s_prev)
                    max_step = 0.5 * step
                    if max_step < prob.h_floor(s_prev) * 1e-3:
                        raise PhaseSpaceEjection(f"orbit left the phase-space box near s = {s_prev!r}")
                    s, y, h = s_prev, y_prev, max_step
                    restarted = True
                    break
                max_step = np.inf
                s, y = s_new, y_new
                leg.s.append(s)
                leg.y.append(y)
                leg.n_steps += 1
                leg.n_implicit += 1
                h = solver.step_size if solver.step_size is not None else h
                if prob.stop is not None and prob.stop(s, y):
                    leg.reason = "singular"
                    leg.h_last = h
                    return s, y, h, idx, True
                hr = h * _spectral_radius(prob.jac(s, y))
                relax = relax + 1 if hr < RELAX_HRHO else 0
            if restarted:
                continue
        idx += 1
        if relax >= RELAX_COUNT:
            return s, y, h, idx, False
    leg.h_last = h
    return s, y, h, idx, True
