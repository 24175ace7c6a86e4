"""Plane-wave solutions of a two-species reaction-diffusion system."""

from .config import RunConfig, emit_config, parse_config
from .contrast import (BoundReport, CascadeReport, ContrastSeries, bound_constant, cascade_indicators,
                       cascade_sequence, check_contrast_bounds, check_phase_space, check_vz_envelope,
                       contrast_residual, contrast_w)
from .critical import (CriticalReport, CutoffReport, cutoff_environment, find_lambda_dagger,
                       find_lambda_star, lambda_to_speed)
from .environment import (Environment, PowerFamily, ValidationReport, Violation, enorm,
                          make_environment, make_power_reaction, reaction_sup, validate)
from .kernel import (ClassLabel, EigenTriple, PhasePoint, TerminalReport, classify_terminal,
                     jacobian, origin_launch, origin_spectrum, terminal_spectrum)
from .orbit import (IntegratorOptions, Orbit, Profile, autonomous_rate, integrate_distillate,
                    phase_space_check, reconstruct_xi, report_grid, spurious_orbit)

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "emit_config", "parse_config",
    "BoundReport", "CascadeReport", "ContrastSeries", "bound_constant", "cascade_indicators",
    "cascade_sequence", "check_contrast_bounds", "check_phase_space", "check_vz_envelope",
    "contrast_residual", "contrast_w",
    "CriticalReport", "CutoffReport", "cutoff_environment", "find_lambda_dagger", "find_lambda_star",
    "lambda_to_speed",
    "Environment", "PowerFamily", "ValidationReport", "Violation", "enorm", "make_environment",
    "make_power_reaction", "reaction_sup", "validate",
    "ClassLabel", "EigenTriple", "PhasePoint", "TerminalReport", "classify_terminal", "jacobian",
    "origin_launch", "origin_spectrum", "terminal_spectrum",
    "IntegratorOptions", "Orbit", "Profile", "autonomous_rate", "integrate_distillate",
    "phase_space_check", "reconstruct_xi", "report_grid", "spurious_orbit",
]
