import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from conftest import critical, env_named
from planewave import (ClassLabel, cutoff_environment, enorm, find_lambda_dagger, find_lambda_star,
                       lambda_to_speed, origin_launch)
from planewave.critical import count_transitions, kind_sweep
from planewave.errors import NumericalError


@pytest.mark.parametrize("lam, speed", [(0.25, 2.0), (1.0, 1.0), (1e-4, 100.0)])
def test_lambda_to_speed(lam, speed):
    assert lambda_to_speed(lam) == pytest.approx(speed, rel=1e-15)


def test_lambda_to_speed_rejects_nonpositive():
    with pytest.raises(ValueError):
        lambda_to_speed(0.0)


def test_fisher_critical_lentor():
    rep = critical("fisher")
    assert rep.lambda_star == pytest.approx(0.25, abs=1e-3)
    assert rep.v_star == pytest.approx(2.0, abs=4e-3)
    assert rep.class_at_star is ClassLabel.LM
    assert rep.slope_at_star == pytest.approx(0.5, abs=1e-2)
    assert rep.bracket_lo <= rep.lambda_star < rep.bracket_hi
    assert (rep.bracket_hi - rep.bracket_lo) < 1e-6 * rep.bracket_lo
    assert rep.lambda_star < 1.0 / rep.enorm


@pytest.mark.parametrize("name", ["half", "two"])
def test_flat_terminus_is_upper_middle_at_criticality(name):
    rep = critical(name)
    assert rep.class_at_star is ClassLabel.UM
    assert rep.slope_at_star == pytest.approx(1.0, abs=1e-2)
    assert rep.lambda_star < 1.0 / enorm(env_named(name))


def test_two_environment_critical_value():
    # Independently bracketed with LSODA: singular at 5.1, regular at 5.12.
    rep = critical("two")
    assert 5.1 < rep.lambda_star < 5.12


def test_report_dict_keys():
    d = critical("fisher").to_dict()
    assert list(d) == ["lambda_star", "v_star", "enorm", "class_at_star", "bracket", "iterations"]


def test_bracket_history_shrinks():
    hist = critical("half").history
    widths = [hi - lo for lo, hi in hist]
    assert all(b <= a for a, b in zip(widths, widths[1:]))


def test_probe_must_be_singular(fisher):
    with pytest.raises(NumericalError, match="shrink"):
        find_lambda_star(fisher, probe=1.0)


def test_kind_sweep_single_transition(fisher):
    kinds = kind_sweep(fisher, [0.05, 0.15, 0.24, 0.26, 0.35, 1.0])
    assert kinds == ["singular"] * 3 + ["regular"] * 3
    assert count_transitions(kinds) == 1


def test_cutoff_environment_vanishes_beyond_one(fisher):
    cut = cutoff_environment(fisher, 0.5)
    assert cut.reaction(1.2, 1.2) == 0.0
    assert cut.reaction(0.5, 0.5) == pytest.approx(2 * 0.25 * 0.75)
    np.testing.assert_allclose(cut.reaction(np.array([0.5, 1.5]), np.array([0.5, 1.5])), [0.375, 0.0])
    with pytest.raises(ValueError):
        cutoff_environment(fisher, 1.0)


def _cutoff_oracle(env, X):
    """Unscaled formulation: the orbit must reach ``v_y = 1`` exactly at ``x = 1 - X``."""
    x_end = 1.0 - X

    def gap(lam):
        p = origin_launch(env, lam)

        def f(x, y):
            return [lam * env.reaction(x, x + y[1]) / y[0] - 1.0, (env.D - 1.0) - env.D * y[1] / y[0]]

        sol = solve_ivp(f, (p.x, x_end), [p.y - p.x, p.z - p.x], method="LSODA", rtol=1e-12, atol=1e-15)
        return x_end + sol.y[0, -1] - 1.0

    return brentq(gap, 0.5, 10.0, xtol=1e-12)


@pytest.fixture(scope="module")
def fisher_cutoff():
    return find_lambda_dagger(env_named("fisher"), 0.5)


def test_cutoff_matches_independent_root(fisher_cutoff):
    oracle = _cutoff_oracle(env_named("fisher"), 0.5)
    assert oracle == pytest.approx(3.18861971, abs=1e-7)
    assert fisher_cutoff.lambda_dagger == pytest.approx(oracle, rel=1e-7)


def test_cutoff_inequalities(fisher_cutoff):
    rep = fisher_cutoff
    assert rep.monotone
    assert rep.lambda_dagger > 0.25
    assert rep.v_dagger < 2.0 * math.sqrt(2.0)
    assert rep.Y_bar == 2.0
    assert list(rep.to_dict()) == ["cutoff_X", "Y_bar", "lambda_dagger", "v_dagger"]


def test_cutoff_orbit_hits_target_elevation(fisher_cutoff):
    o = fisher_cutoff.orbit
    assert o.vy_at(0.999) == pytest.approx(2.0, abs=1e-2)
    # Equidiffusive: v_z = x, so the z coefficient sits at the cutoff itself.
    assert fisher_cutoff.Z_bar == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("X", [0.1, 0.05, 0.025])
def test_shallow_cutoffs_obey_speed_bound(X):
    rep = find_lambda_dagger(env_named("fisher"), X, tol=1e-6)
    assert rep.monotone
    assert rep.v_dagger < 2.0 / math.sqrt(1.0 - X)
