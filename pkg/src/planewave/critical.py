"""Critical lentor, wavespeed conversion and cutoff reactions.

Plane waves exist for every lentor up to a critical value ``Λ*`` and for no
larger one, so ``Λ*`` is bracketed by bisection on the terminal kind.  A
cutoff reaction (zero below an ignition threshold) supports exactly one wave,
found by a monotone root search on the terminal elevation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environment import Environment, enorm
from .errors import InconsistencyError, NumericalError
from .kernel import ClassLabel, DEGENERACY_TOL, _extrapolate, nearest_class, terminal_spectrum
from .orbit import IntegratorOptions, Orbit, integrate_distillate

PROBE_FACTOR = 1e-6
SEPARATION_TOL = 1e-2
MAX_EXPANSIONS = 60


@dataclass(frozen=True)
class CriticalReport:
    lambda_star: float
    bracket_lo: float
    bracket_hi: float
    enorm: float
    class_at_star: ClassLabel
    v_star: float
    iterations: int
    orbit_at_star: Orbit
    slope_at_star: float
    history: tuple[tuple[float, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "v_star": self.v_star,
            "enorm": self.enorm,
            "class_at_star": self.class_at_star.value,
            "bracket": [self.bracket_lo, self.bracket_hi],
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class CutoffReport:
    """Solution of the cutoff problem.

    Beyond the cutoff the wave is ``u = Ȳ + (1 - Ȳ) e^(Ξ - ξ) 1_x +
    (Z̄ - Ȳ) e^(D(Ξ - ξ)) 1_z``; ``Z_bar`` and ``Xi`` are its coefficients
    (``Xi`` is measured with the orbit anchored at ``x = 1/2``).
    """

    cutoff_X: float
    Y_bar: float
    lambda_dagger: float
    v_dagger: float
    orbit: Orbit
    Z_bar: float
    Xi: float
    iterations: int
    monotone: bool
    history: tuple[tuple[float, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "cutoff_X": self.cutoff_X,
            "Y_bar": self.Y_bar,
            "lambda_dagger": self.lambda_dagger,
            "v_dagger": self.v_dagger,
        }


def lambda_to_speed(lam: float) -> float:
    """Wavespeed ``V = Λ**(-1/2)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return lam ** -0.5


def _class_from_bracket(env: Environment, lo: Orbit, hi: Orbit) -> tuple[ClassLabel, float]:
    """Class of the critical orbit from the tails bracketing it.

    The two tails agree until the instability at the terminus pulls them
    apart; the shared value just before they separate is the critical slope.
    When they never separate the lower tail's own extrapolated slope is used.
    """
    band = max(DEGENERACY_TOL, 4.0 * abs(env.dx_terminus) * (hi.lam - lo.lam))
    spec = terminal_spectrum(env, lo.lam)
    t_hi = {float(t): q for t, q in zip(hi.tail.ts, hi.tail.qs)}
    common = [(float(t), float(q), t_hi[float(t)]) for t, q in zip(lo.tail.ts, lo.tail.qs)
              if float(t) in t_hi]
    slope = None
    for i, (_, q_lo, q_hi) in enumerate(common):
        if abs(q_hi - q_lo) > SEPARATION_TOL * max(1.0, abs(q_lo)):
            if i >= 3:
                qs = [c[1] for c in common[i - 3:i]]
                slope = _extrapolate(*qs, harmonic=abs(spec.discriminant) < band)
            else:
                slope = common[i - 1][1] if i else q_lo
            break
    if slope is None:
        qs = [float(q) for q in lo.tail.qs[-3:]]
        if len(qs) == 3 and lo.tail.stop != "singular":
            slope = _extrapolate(*qs, harmonic=abs(spec.discriminant) < band)
        else:
            slope = lo.terminal.slope
    label, _ = nearest_class(slope, env, spec, band)
    return label, slope


def find_lambda_star(env: Environment, tol: float = 1e-6, opts: Optional[IntegratorOptions] = None,
                     probe: Optional[float] = None) -> CriticalReport:
    """Locate the critical lentor by bisection on the terminal kind.

    Parameters
    ----------
    env : Environment
    tol : float
        Relative bracket width at termination.
    opts : IntegratorOptions, optional
    probe : float, optional
        Sub-critical starting point; defaults to ``1e-6 / E``.

    Returns
    -------
    CriticalReport
        ``lambda_star`` is the lower (singular) end of the final bracket.

    Raises
    ------
    NumericalError
        If the probe is not singular.
    InconsistencyError
        If the upper end ``1/E`` is not regular.
    """
    opts = opts or IntegratorOptions()
    E = enorm(env)
    lo_lam = PROBE_FACTOR / E if probe is None else probe
    hi_lam = 1.0 / E
    lo = integrate_distillate(env, lo_lam, opts)
    if lo.regular:
        raise NumericalError(f"sub-critical probe {lo_lam!r} is not singular; shrink the probe")
    hi = integrate_distillate(env, hi_lam, opts)
    if not hi.regular:
        raise InconsistencyError("both bracket ends terminate singularly; the environment violates "
                                 "the existence bound")
    history = [(lo.lam, hi.lam)]
    it = 0
    while hi.lam - lo.lam >= tol * lo.lam:
        mid = 0.5 * (lo.lam + hi.lam)
        if mid <= lo.lam or mid >= hi.lam:
            break
        o = integrate_distillate(env, mid, opts)
        if o.regular:
            hi = o
        else:
            lo = o
        it += 1
        history.append((lo.lam, hi.lam))
    label, slope = _class_from_bracket(env, lo, hi)
    return CriticalReport(lambda_star=lo.lam, bracket_lo=lo.lam, bracket_hi=hi.lam, enorm=E,
                          class_at_star=label, v_star=lambda_to_speed(lo.lam), iterations=it,
                          orbit_at_star=lo, slope_at_star=slope, history=tuple(history))


def kind_sweep(env: Environment, lams: Sequence[float], opts: Optional[IntegratorOptions] = None) -> list[str]:
    """Terminal kind at each lentor of ``lams``."""
    return [integrate_distillate(env, float(l), opts).terminal.kind for l in lams]


def count_transitions(kinds: Sequence[str]) -> int:
    return sum(1 for a, b in zip(kinds, kinds[1:]) if a != b)


def cutoff_environment(env: Environment, cutoff_X: float) -> Environment:
    """Rescaled environment of the cutoff problem.

    With ``Ȳ = 1/(1 - X̆)`` the scaled reaction is ``Ȳ r(x/Ȳ, z/Ȳ)`` for
    ``x < 1`` and zero beyond.
    """
    if not 0.0 < cutoff_X < 1.0:
        raise ValueError("cutoff_X must lie in (0, 1)")
    Y = 1.0 / (1.0 - cutoff_X)
    r, rx, rz = env.reaction, env.reaction_dx, env.reaction_dz

    def active(x):
        return np.asarray(x) < 1.0

    def r_cut(x, z):
        return np.where(active(x), Y * np.asarray(r(x / Y, z / Y)), 0.0) if np.ndim(x) or np.ndim(z) \
            else (Y * r(x / Y, z / Y) if x < 1.0 else 0.0)

    def r_cut_c(t, z):
        return r_cut(1.0 - t, z)

    def rx_cut(x, z):
        return np.where(active(x), np.asarray(rx(x / Y, z / Y)), 0.0) if np.ndim(x) or np.ndim(z) \
            else (rx(x / Y, z / Y) if x < 1.0 else 0.0)

    def rz_cut(x, z):
        return np.where(active(x), np.asarray(rz(x / Y, z / Y)), 0.0) if np.ndim(x) or np.ndim(z) \
            else (rz(x / Y, z / Y) if x < 1.0 else 0.0)

    return Environment(D=env.D, reaction=r_cut, reaction_dx=rx_cut, reaction_dz=rz_cut,
                       reaction_c=r_cut_c)


def _terminal_elevation(cut: Environment, lam: float, opts: IntegratorOptions) -> tuple[float, Orbit]:
    o = integrate_distillate(cut, lam, opts)
    tail = o.tail
    return 1.0 - tail.last_t + tail.last_e + tail.last_t * tail.last_dvy, o


def find_lambda_dagger(env: Environment, cutoff_X: float, tol: float = 1e-8,
                       opts: Optional[IntegratorOptions] = None) -> CutoffReport:
    """Solve the cutoff problem for its unique lentor ``Λ†``.

    The terminal elevation ``v_y(Λ; 1)`` of the rescaled problem increases
    with ``Λ``; bisection on ``v_y(Λ; 1) = Ȳ`` keeps every iterate inside a
    shrinking bracket.

    Raises
    ------
    NumericalError
        If no bracket is found within the expansion cap (cutoff too deep for
        the environment).
    """
    opts = opts or IntegratorOptions()
    cut = cutoff_environment(env, cutoff_X)
    Y = 1.0 / (1.0 - cutoff_X)
    E = enorm(env)
    lo, hi = PROBE_FACTOR / E, 1.0 / E
    f_lo, _ = _terminal_elevation(cut, lo, opts)
    expansions = 0
    while f_lo - Y >= 0.0:
        lo *= 0.125
        expansions += 1
        if expansions > MAX_EXPANSIONS:
            raise NumericalError("could not find a lentor below the cutoff connection")
        f_lo, _ = _terminal_elevation(cut, lo, opts)
    f_hi, _ = _terminal_elevation(cut, hi, opts)
    expansions = 0
    while f_hi - Y <= 0.0:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        expansions += 1
        if expansions > MAX_EXPANSIONS:
            raise NumericalError("target elevation not reached; cutoff too deep for the environment box")
        f_hi, _ = _terminal_elevation(cut, hi, opts)
    samples = [(lo, f_lo), (hi, f_hi)]
    history = [(lo, hi)]
    it = 0
    while hi - lo >= tol * lo:
        mid = 0.5 * (lo + hi)
        f_mid, _ = _terminal_elevation(cut, mid, opts)
        samples.append((mid, f_mid))
        if f_mid > Y:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
        it += 1
        history.append((lo, hi))
    lam = lo + (Y - f_lo) * (hi - lo) / (f_hi - f_lo) if f_hi > f_lo else 0.5 * (lo + hi)
    samples.sort()
    vals = [s[1] for s in samples]
    monotone = all(b > a for a, b in zip(vals, vals[1:])) and all(
        a[0] <= b[0] and a[1] >= b[1] for a, b in zip(history, history[1:]))
    orbit = integrate_distillate(cut, lam, opts)
    i_half = int(np.searchsorted(orbit.nat_x, 0.5))
    xi_end = float(orbit.nat_xi[-1] - orbit.nat_xi[i_half])
    z_bar = 1.0 - float(orbit.nat_t[-1]) + float(orbit.nat_g[-1])
    return CutoffReport(cutoff_X=cutoff_X, Y_bar=Y, lambda_dagger=lam, v_dagger=lambda_to_speed(lam),
                        orbit=orbit, Z_bar=z_bar, Xi=xi_end, iterations=it, monotone=monotone,
                        history=tuple(history))
