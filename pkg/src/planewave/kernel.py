"""Kernel-point analysis: Jacobian, spectra, origin launch and terminal classification.

The autonomous system is ``x' = y - x``, ``y' = Λ r(x, z)``, ``z' = D (y - z)``.
Its two kernel points on the diagonal are the origin ``0`` and the terminus
``1``.  Orbits leave the origin along the slowest unstable direction and are
classified by how they arrive at ``x = 1``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .environment import Environment
from .errors import InconsistencyError

DEGENERACY_TOL = 1e-8
REG_TOL = 1e-7
DELTA_HYPERBOLIC = 1e-6
DELTA_CENTRE = 1e-4
DELTA_MAX = 0.01


class ClassLabel(str, enum.Enum):
    """Terminal-elevation classes of compact orbits."""

    STRICT_U = "StrictU"
    UM = "UM"
    M = "M"
    LM = "LM"
    L = "L"
    SPURIOUS = "Spurious"

    def __str__(self) -> str:
        return self.value

    @property
    def middle(self) -> bool:
        return self in (ClassLabel.UM, ClassLabel.M, ClassLabel.LM)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class EigenTriple:
    """Eigen-decomposition of the Jacobian at a kernel point.

    ``omega_minus`` and ``omega_plus`` are Python complex numbers when
    ``complex_pair`` is set and floats otherwise.
    """

    omega_minus: complex | float
    omega_plus: complex | float
    omega_z: float
    vec_minus: np.ndarray
    vec_plus: np.ndarray
    vec_z: np.ndarray
    location: str
    degenerate: bool
    complex_pair: bool
    discriminant: float

    def pairs(self):
        return ((self.omega_minus, self.vec_minus), (self.omega_plus, self.vec_plus),
                (self.omega_z, self.vec_z))


@dataclass(frozen=True)
class TerminalTail:
    """Samples of ``q = (v_y - x) / (1 - x)`` approaching ``x = 1``.

    ``ts`` decreases; the last three entries are dyadically spaced unless the
    integration stopped early.  ``stop`` is one of ``"end"`` (reached the
    final sample), ``"singular"`` (the singular-stop predicate fired) or
    ``"floor"`` (the step-size floor was hit).
    """

    ts: np.ndarray
    qs: np.ndarray
    stop: str
    last_t: float
    last_e: float
    last_dvy: float


@dataclass(frozen=True)
class TerminalReport:
    kind: str
    v_y_terminal: float
    slope: float
    matched_eigenvalue: Optional[float]
    label: ClassLabel
    residual: float
    notes: tuple[str, ...] = field(default=())

    @property
    def regular(self) -> bool:
        return self.kind == "regular"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "v_y_terminal": self.v_y_terminal,
            "slope": self.slope,
            "matched_eigenvalue": self.matched_eigenvalue,
            "class": self.label.value,
            "residual": self.residual,
        }


def jacobian(env: Environment, lam: float, p: PhasePoint) -> np.ndarray:
    """Jacobian of the autonomous system at ``p``."""
    ax = lam * float(env.reaction_dx(p.x, p.z))
    az = lam * float(env.reaction_dz(p.x, p.z))
    return np.array([[-1.0, 1.0, 0.0], [ax, 0.0, az], [0.0, env.D, -env.D]])


def _eigvec(J: np.ndarray, omega, D: float) -> np.ndarray:
    """Eigenvector ``(1, 1+Ω, D(1+Ω)/(D+Ω))`` with fallbacks near ``Ω = -D``."""
    if abs(D + omega) > 1e-12 * max(1.0, abs(D)):
        v = np.array([1.0, 1.0 + omega, D * (1.0 + omega) / (D + omega)])
        return v.astype(complex) if isinstance(omega, complex) else v.astype(float)
    ez = np.array([0.0, 0.0, 1.0])
    if np.linalg.norm(J @ ez - omega * ez) <= 1e-12 * max(1.0, np.abs(J).max()):
        return ez
    _, _, vh = np.linalg.svd(J - omega * np.eye(3))
    v = vh[-1].conj()
    i = int(np.argmax(np.abs(v)))
    v = v / v[i]
    return np.real_if_close(v)


def origin_spectrum(env: Environment, lam: float) -> EigenTriple:
    """Spectrum at the origin.

    ``Ω∓ = -(D ∓ sqrt(D² + 4 D Λ ∂z r(0)))/2`` and ``Ω_z = -1``; the
    discriminant is at least ``D²`` so the triple is always real.
    """
    D = env.D
    disc = D * D + 4.0 * D * lam * env.dz_origin
    root = math.sqrt(disc)
    om_minus = 0.5 * (root - D)
    om_plus = -0.5 * (D + root)
    J = jacobian(env, lam, PhasePoint(0.0, 0.0, 0.0))
    return EigenTriple(om_minus, om_plus, -1.0, _eigvec(J, om_minus, D), _eigvec(J, om_plus, D),
                       _eigvec(J, -1.0, D), "origin", False, False, disc)


def terminal_spectrum(env: Environment, lam: float, deg_tol: float = DEGENERACY_TOL) -> EigenTriple:
    """Spectrum at the terminus.

    ``Ω∓ = -(1 ∓ sqrt(1 + 4 Λ ∂x r(1)))/2`` and ``Ω_z = -D``.  A negative
    discriminant produces a conjugate pair; ``|disc| < deg_tol`` marks the
    spectrum degenerate.
    """
    D = env.D
    disc = 1.0 + 4.0 * lam * env.dx_terminus
    complex_pair = disc < 0.0
    root = cmath.sqrt(disc) if complex_pair else math.sqrt(disc)
    om_minus = -0.5 * (1.0 - root)
    om_plus = -0.5 * (1.0 + root)
    J = jacobian(env, lam, PhasePoint(1.0, 1.0, 1.0))
    return EigenTriple(om_minus, om_plus, -D, _eigvec(J, om_minus, D), _eigvec(J, om_plus, D),
                       _eigvec(J, -D, D), "terminus", abs(disc) < deg_tol, complex_pair, disc)


def check_delta(delta: float) -> float:
    if not (isinstance(delta, (int, float)) and 0.0 < delta <= DELTA_MAX):
        raise ValueError(f"launch offset must lie in (0, {DELTA_MAX}], got {delta!r}")
    return float(delta)


def default_delta(env: Environment) -> float:
    return DELTA_HYPERBOLIC if env.origin_hyperbolic else DELTA_CENTRE


def launch_offsets(env: Environment, lam: float, delta: Optional[float] = None) -> tuple[float, float, float]:
    """Launch point as ``(x, y - x, z - x)``.

    Returning offsets rather than absolute coordinates avoids cancellation
    when ``y - x`` is many orders smaller than ``x``.
    """
    delta = check_delta(default_delta(env) if delta is None else delta)
    D = env.D
    if env.origin_hyperbolic:
        om = origin_spectrum(env, lam).omega_minus
        return delta, om * delta, om * (D - 1.0) / (D + om) * delta
    lr = lam * float(env.reaction(delta, delta))
    return delta, lr, (1.0 - 1.0 / D) * lr


def origin_launch(env: Environment, lam: float, delta: Optional[float] = None) -> PhasePoint:
    """Departure point near the origin.

    Hyperbolic origins launch along the unstable eigenvector; non-hyperbolic
    origins use the centre-manifold point with its nonlinear supplement.
    """
    x, e, g = launch_offsets(env, lam, delta)
    return PhasePoint(x, x + e, x + g)


def _extrapolate(q0: float, q1: float, q2: float, harmonic: bool) -> float:
    """Limit of a dyadic sequence ``q(4h), q(2h), q(h)``.

    The geometric form removes one power-law correction; the harmonic form
    suits the logarithmic approach of a degenerate node.
    """
    den = q0 + q2 - 2.0 * q1
    if abs(den) <= 1e-14 * max(1.0, abs(q2)):
        return q2
    if harmonic:
        s = (2.0 * q0 * q2 - q1 * (q0 + q2)) / den
    else:
        s = (q0 * q2 - q1 * q1) / den
    # A harmonic tail sits roughly k/2 sample gaps from its limit at t = 2^-k.
    reach = 64.0 if harmonic else 8.0
    if not math.isfinite(s) or abs(s - q2) > max(abs(q2 - q0), 1e-12) * reach:
        return q2
    return s


def nearest_class(s: float, env: Environment, spec: EigenTriple, deg_band: float) -> tuple[ClassLabel, float]:
    """Match a terminal slope against the terminal eigenvalues.

    Returns the class label and the matched eigenvalue.
    """
    if not env.terminal_hyperbolic:
        if abs(s - 1.0) < abs(s):
            return ClassLabel.UM, -1.0
        return ClassLabel.L, 0.0
    if abs(spec.discriminant) < deg_band:
        return ClassLabel.LM, -0.5
    om_m, om_p = float(np.real(spec.omega_minus)), float(np.real(spec.omega_plus))
    if abs(s + om_p) < abs(s + om_m):
        return ClassLabel.M, om_p
    return ClassLabel.L, om_m


def classify_terminal(tail: TerminalTail, spec: EigenTriple, env: Environment, lam: float,
                      reg_tol: float = REG_TOL, deg_band: Optional[float] = None) -> TerminalReport:
    """Classify how an orbit arrives at ``x = 1``.

    Parameters
    ----------
    tail : TerminalTail
        Tail samples from the integrator.
    spec : EigenTriple
        Output of :func:`terminal_spectrum` at the same ``lam``.
    env, lam
        Environment and lentor of the orbit.
    reg_tol : float
        Elevation above 1 that counts as regular termination.
    deg_band : float, optional
        Discriminant band treated as degenerate; defaults to the degeneracy
        flag of ``spec``.

    Returns
    -------
    TerminalReport

    Raises
    ------
    InconsistencyError
        If the spectrum is a conjugate pair but the tail approaches ``x = 1``
        singularly.
    """
    band = DEGENERACY_TOL if deg_band is None else deg_band
    degenerate = env.terminal_hyperbolic and abs(spec.discriminant) < band
    t, e = tail.last_t, tail.last_e
    vy1 = 1.0 - t + e + t * tail.last_dvy
    qs = np.asarray(tail.qs, dtype=float)
    increasing = qs.size >= 2 and qs[-1] > qs[-2]
    if env.terminal_hyperbolic and not spec.complex_pair:
        q_upper = -float(spec.omega_plus)
    elif env.terminal_hyperbolic:
        q_upper = 0.5
    else:
        q_upper = 1.0

    if tail.stop == "singular":
        if spec.complex_pair:
            raise InconsistencyError("conjugate terminal pair but the orbit approached x = 1 singularly")
        om = float(spec.omega_minus) if env.terminal_hyperbolic else 0.0
        return TerminalReport("singular", 1.0, -om, om, ClassLabel.L, abs(float(qs[-1]) + om),
                              ("singular stop",))

    escaped = increasing and float(qs[-1]) > q_upper
    if vy1 - 1.0 > reg_tol or (spec.complex_pair and (increasing or qs.size < 2)) or escaped:
        return TerminalReport("regular", vy1, 1.0 - tail.last_dvy, None, ClassLabel.STRICT_U,
                              abs(t * (tail.last_dvy - 1.0)))
    if spec.complex_pair:
        raise InconsistencyError("conjugate terminal pair but the tail elevation is decreasing")

    if qs.size >= 3:
        s = _extrapolate(float(qs[-3]), float(qs[-2]), float(qs[-1]), harmonic=degenerate)
    else:
        s = float(qs[-1])
    label, om = nearest_class(s, env, spec, band)
    return TerminalReport("singular", 1.0, s, om, label, abs(s + om))
