"""Exception hierarchy shared by the solver modules and the CLI."""

from __future__ import annotations


class PlanewaveError(Exception):
    """Base class for all errors raised by this package."""


class EnvironmentError_(PlanewaveError, ValueError):
    """An environment could not be constructed or is not admissible."""


class NumericalError(PlanewaveError):
    """A numerical procedure failed to produce a trustworthy result."""


class StiffnessError(NumericalError):
    """The integrator exhausted its step budget."""


class InconsistencyError(NumericalError):
    """Computed data contradicts a structural property of the problem."""


class PhaseSpaceEjection(InconsistencyError):
    """An orbit left the admissible box even after repeated step halving."""


class UnboundedCoordinateError(NumericalError):
    """The reconstructed travelling-wave coordinate diverged."""


class NotAPlaneWaveError(PlanewaveError, ValueError):
    """A plane-wave-only check was handed a regular (non-connecting) orbit."""


class ConfigError(PlanewaveError, ValueError):
    """Malformed run configuration.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int, optional
        1-based line number in the configuration text, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        text = message if line is None else f"line {line}: {message}"
        super().__init__(text)
