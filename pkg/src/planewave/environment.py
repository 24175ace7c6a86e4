"""Reaction environments: the reaction function, its partials and the diffusivity.

An environment couples a reaction ``r(x, z)`` (independent of the
intermediate ``y``) with the relative fuel diffusivity ``D``.  The power
family ``r = A z**m (1 - x)**k`` is built in; arbitrary smooth reactions can
be plugged in through :func:`make_environment`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import EnvironmentError_, NumericalError

Evaluator = Callable[[float, float], float]

# Derivatives below this magnitude count as zero when deciding hyperbolicity.
HYPERBOLIC_CUTOFF = 1e-12


@dataclass(frozen=True)
class PowerFamily:
    """Parameters of ``r = A z**m (1 - x)**k``."""

    A: float
    m: int
    k: int


@dataclass(frozen=True)
class Violation:
    """A single failed admissibility condition."""

    condition: str
    point: tuple[float, float]
    value: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Environment:
    """An immutable reaction environment ``(r; D)``.

    Parameters
    ----------
    D : float
        Relative diffusivity of the fuel, strictly positive.
    reaction, reaction_dx, reaction_dz : callable
        ``r(x, z)`` and its partial derivatives.  They must accept floats and
        should accept numpy arrays.
    reaction_c : callable, optional
        ``r`` written in terms of the distance ``t = 1 - x`` from the terminus,
        ``reaction_c(t, z) == reaction(1 - t, z)``.  Supplying it keeps the
        terminal tail free of the cancellation in ``1 - x``.
    family : PowerFamily, optional
        Set when the environment belongs to the power family.
    """

    D: float
    reaction: Evaluator
    reaction_dx: Evaluator
    reaction_dz: Evaluator
    reaction_c: Optional[Evaluator] = None
    family: Optional[PowerFamily] = None
    origin_hyperbolic: bool = field(init=False)
    terminal_hyperbolic: bool = field(init=False)

    def __post_init__(self):
        if not (isinstance(self.D, (int, float)) and math.isfinite(self.D) and self.D > 0):
            raise EnvironmentError_("D must be positive")
        object.__setattr__(self, "D", float(self.D))
        if self.reaction_c is None:
            r = self.reaction
            object.__setattr__(self, "reaction_c", lambda t, z: r(1.0 - t, z))
        dz0 = float(self.reaction_dz(0.0, 0.0))
        dx1 = float(self.reaction_dx(1.0, 1.0))
        object.__setattr__(self, "origin_hyperbolic", abs(dz0) >= HYPERBOLIC_CUTOFF and dz0 > 0)
        object.__setattr__(self, "terminal_hyperbolic", abs(dx1) >= HYPERBOLIC_CUTOFF and dx1 < 0)

    @property
    def dz_origin(self) -> float:
        """``∂z r`` at the origin, snapped to zero below the cutoff."""
        v = float(self.reaction_dz(0.0, 0.0))
        return v if self.origin_hyperbolic else 0.0

    @property
    def dx_terminus(self) -> float:
        """``∂x r`` at the terminus ``(1, 1)``, snapped to zero below the cutoff."""
        v = float(self.reaction_dx(1.0, 1.0))
        return v if self.terminal_hyperbolic else 0.0

    def describe(self) -> str:
        if self.family is not None:
            f = self.family
            return f"power(A={f.A!r}, m={f.m}, k={f.k}), D={self.D!r}"
        return f"custom, D={self.D!r}"


def _check_int(name: str, value, lo: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise EnvironmentError_(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < lo:
        raise EnvironmentError_(f"{name} must be >= {lo}, got {value}")
    return value


def make_power_reaction(A: float, m: int, k: int, D: float) -> Environment:
    """Build the power-family environment ``r = A z**m (1 - x)**k``.

    Parameters
    ----------
    A : float
        Amplitude, strictly positive.
    m : int
        Fuel exponent.  ``m = 0`` is rejected because ``r`` would not vanish
        with the fuel.
    k : int
        Product exponent, ``k >= 0``.  ``k = 0`` is constructible but fails
        :func:`validate` (the reaction does not vanish at ``x = 1``).
    D : float
        Relative diffusivity.

    Examples
    --------
    >>> env = make_power_reaction(1.0, 1, 1, 1.0)
    >>> env.origin_hyperbolic, env.terminal_hyperbolic
    (True, True)
    """
    m = _check_int("m", m, 0)
    if m == 0:
        raise EnvironmentError_("m = 0 violates the kernel condition: r must vanish at z = 0")
    k = _check_int("k", k, 0)
    if not (isinstance(A, (int, float)) and not isinstance(A, bool) and math.isfinite(A)):
        raise EnvironmentError_(f"A must be a real number, got {A!r}")
    if A <= 0:
        raise EnvironmentError_("A must be positive")
    A = float(A)

    def r(x, z):
        return A * z**m * (1.0 - x) ** k

    def r_c(t, z):
        return A * z**m * t**k

    def r_dx(x, z):
        if k == 0:
            return 0.0 * x * z
        return -A * k * z**m * (1.0 - x) ** (k - 1)

    def r_dz(x, z):
        if m == 1:
            return A * (1.0 - x) ** k + 0.0 * z
        return A * m * z ** (m - 1) * (1.0 - x) ** k

    return Environment(D=D, reaction=r, reaction_dx=r_dx, reaction_dz=r_dz,
                       reaction_c=r_c, family=PowerFamily(A, m, k))


def make_environment(reaction: Evaluator, reaction_dx: Evaluator, reaction_dz: Evaluator,
                     D: float, reaction_c: Optional[Evaluator] = None) -> Environment:
    """Wrap a caller-supplied evaluator triple as an :class:`Environment`."""
    return Environment(D=D, reaction=reaction, reaction_dx=reaction_dx,
                       reaction_dz=reaction_dz, reaction_c=reaction_c)


def validate(env: Environment, grid_n: int = 64, tol: float = 1e-14) -> ValidationReport:
    """Check the admissibility conditions on a ``grid_n x grid_n`` lattice.

    Checks nonnegativity of ``r``, the kernel condition (``r`` vanishes
    exactly where ``z (1 - x) = 0``), and that ``r / ∂z r`` stays finite and
    shrinks as ``z -> 0``.  Violations are returned, never raised.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    out: list[Violation] = []
    nodes = np.linspace(0.0, 1.0, grid_n)
    for x in nodes:
        for z in nodes:
            val = float(env.reaction(float(x), float(z)))
            pt = (float(x), float(z))
            if not math.isfinite(val):
                out.append(Violation("finite", pt, val))
                continue
            if val < -tol:
                out.append(Violation("nonnegativity", pt, val))
            on_kernel = z == 0.0 or x == 1.0
            if on_kernel and abs(val) > tol:
                out.append(Violation("kernel", pt, val))
            elif not on_kernel and val <= 0.0:
                out.append(Violation("kernel", pt, val))

    zs = 2.0 ** -np.arange(4, 41, 4)
    for x in nodes[1:-1]:
        ratios = []
        for z in zs:
            dz = float(env.reaction_dz(float(x), float(z)))
            rv = float(env.reaction(float(x), float(z)))
            ratios.append(rv / dz if dz != 0.0 else math.inf)
        bad = [q for q in ratios if not math.isfinite(q) or q < -tol]
        if bad:
            out.append(Violation("ratio_finite", (float(x), float(zs[-1])), float(bad[0])))
        elif abs(ratios[-1]) > abs(ratios[0]) + tol:
            out.append(Violation("ratio_limit", (float(x), float(zs[-1])), float(ratios[-1])))
    return ValidationReport(tuple(out))


def enorm(env: Environment, quad_tol: float = 1e-12, limit: int = 10_000) -> float:
    """Environment norm ``E = 2 ∫_0^1 r(x, 1 - (1 - x)**max(D, 1)) dx``.

    Raises
    ------
    NumericalError
        If the adaptive quadrature cannot reach ``quad_tol`` within ``limit``
        subdivisions.
    """
    p = max(env.D, 1.0)

    def integrand(x):
        t = 1.0 - x
        return float(env.reaction_c(t, 1.0 - t**p))

    val, err, info = integrate.quad(integrand, 0.0, 1.0, epsabs=quad_tol, epsrel=0.0,
                                    limit=limit, full_output=True)[:3]
    if err > quad_tol or not math.isfinite(val):
        raise NumericalError(f"environment norm quadrature did not converge (error estimate {err:.3g}); "
                             "the reaction may be ill-conditioned")
    return 2.0 * val


def reaction_sup(env: Environment, grid_n: int = 257) -> float:
    """Supremum of ``r`` over the phase-space projection.

    The region is ``0 <= x <= 1`` with ``x min(D,1) <= z <= x max(D,1)``.  A
    lattice search is polished by a bounded local maximisation.
    """
    lo, hi = min(env.D, 1.0), max(env.D, 1.0)
    xs = np.linspace(0.0, 1.0, grid_n)
    ss = np.linspace(0.0, 1.0, grid_n if hi > lo else 1)
    X, S = np.meshgrid(xs, ss, indexing="ij")
    Z = X * (lo + S * (hi - lo))
    R = np.asarray(env.reaction(X, Z), dtype=float) * np.ones_like(X)
    i, j = np.unravel_index(int(np.argmax(R)), R.shape)
    best = float(R[i, j])

    def neg(p):
        x, s = p
        return -float(env.reaction(x, x * (lo + s * (hi - lo))))

    res = optimize.minimize(neg, x0=[xs[i], ss[j]], bounds=[(0.0, 1.0), (0.0, 1.0)],
                            method="L-BFGS-B", options={"ftol": 1e-15, "gtol": 1e-12})
    if res.success or res.status == 2:
        best = max(best, -float(res.fun))
    return best
