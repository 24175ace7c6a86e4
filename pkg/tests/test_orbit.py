import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from planewave import (ClassLabel, IntegratorOptions, Profile, integrate_distillate, origin_launch,
                       phase_space_check, reconstruct_xi, spurious_orbit, terminal_spectrum)
from planewave.errors import UnboundedCoordinateError
from planewave.orbit import autonomous_rate, point_violations


def reference_elevation(env, lam, x_end=0.5, delta=None):
    """v_y and v_z at ``x_end`` from an independent LSODA run of the distillate."""
    p = origin_launch(env, lam, delta)
    D = env.D

    def f(x, y):
        e, g = y
        lr = lam * env.reaction(x, x + g)
        return [lr / e - 1.0, (D - 1.0) - D * g / e]

    sol = solve_ivp(f, (p.x, x_end), [p.y - p.x, p.z - p.x], method="LSODA", rtol=1e-12, atol=1e-15)
    e, g = sol.y[:, -1]
    return x_end + e, x_end + g


@pytest.mark.parametrize("name, lam", [("fisher", 0.1), ("fisher", 0.2), ("half", 1.0), ("two", 1.0),
                                       ("two", 6.0)])
def test_midpoint_matches_independent_reference(name, lam):
    from conftest import env_named
    env = env_named(name)
    o = integrate_distillate(env, lam)
    vy, vz = reference_elevation(env, lam)
    assert o.vy_at(0.5) == pytest.approx(vy, abs=1e-8)
    i = int(np.argmin(np.abs(o.nat_x - 0.5)))
    assert o.nat_x[i] == 0.5
    assert 0.5 + o.nat_g[i] == pytest.approx(vz, abs=1e-8)


def test_fisher_subcritical_slope(fisher):
    o = integrate_distillate(fisher, 0.1)
    assert o.terminal.kind == "singular" and o.terminal.label is ClassLabel.L
    expected = -terminal_spectrum(fisher, 0.1).omega_minus
    assert o.terminal.slope == pytest.approx(expected, abs=1e-5)
    assert expected == pytest.approx(0.112702, abs=1e-6)


def test_slope_stable_under_tolerance_halving(fisher):
    a = integrate_distillate(fisher, 0.1)
    b = integrate_distillate(fisher, 0.1, IntegratorOptions(rel_tol=5e-11, abs_tol=5e-13))
    assert abs(a.terminal.slope - b.terminal.slope) < 1e-6
    assert np.nanmax(np.abs(a.vy - b.vy)) < 1e-8


def test_vanishing_lentor_approaches_spurious_limit(fisher):
    lam = 1e-9
    o = integrate_distillate(fisher, lam)
    ok = o.reached
    assert np.max(np.abs(o.vy[ok] - o.xs[ok])) < 1e-8
    np.testing.assert_array_equal(o.vz, o.xs)
    assert not o.regular


def test_first_order_spurious_expansion(half):
    lam = 1e-3
    o = integrate_distillate(half, lam)
    xs, vy, vz = spurious_orbit(half, lam, o.xs)
    sel = (o.xs > 0.1) & (o.xs < 0.9)
    assert np.max(np.abs(o.vy[sel] - vy[sel])) < 50 * lam ** 2
    assert np.max(np.abs(o.vz[sel] - vz[sel])) < 50 * lam ** 2


def test_regular_orbit_above_critical(two):
    # The lentor must lie above the critical value (about 5.11 for this environment).
    o = integrate_distillate(two, 6.0)
    assert o.regular and o.terminal.v_y_terminal > 1.0
    assert o.terminal.label is ClassLabel.STRICT_U


def test_fisher_supercritical_is_regular(fisher):
    o = integrate_distillate(fisher, 0.4)
    assert o.regular and o.terminal.v_y_terminal > 1.0


def test_orbits_stay_in_phase_space(any_env):
    _, env = any_env
    for lam in (0.05, 0.5, 3.0):
        assert phase_space_check(integrate_distillate(env, lam)) == []


def test_constructed_violation_is_reported():
    v = point_violations(0.5, 1.2, 1.0 + 1e-6, 2.0, 1.0, 1e-9)
    assert [d["condition"] for d in v] == ["z_upper"]


def test_equidiffusive_reduction(fisher):
    for lam in (0.05, 0.2, 0.3):
        a = integrate_distillate(fisher, lam)
        b = integrate_distillate(fisher, lam, IntegratorOptions(reduced=True))
        ok = a.reached & b.reached
        assert np.max(np.abs(a.vy[ok] - b.vy[ok])) < 1e-8
        assert a.terminal.kind == b.terminal.kind


@settings(max_examples=8, deadline=None)
@given(lam=st.floats(0.02, 0.24), factor=st.floats(1.05, 1.5))
def test_elevation_increases_with_lentor(lam, factor):
    from conftest import env_named
    env = env_named("fisher")
    a = integrate_distillate(env, lam).vy_at(0.5)
    b = integrate_distillate(env, lam * factor).vy_at(0.5)
    assert b > a


def test_xi_anchor_and_monotonicity(fisher):
    o = reconstruct_xi(integrate_distillate(fisher, 0.1), 0.5)
    assert np.all(np.diff(o.xi) > 0)
    p = Profile(o, 0.5)
    assert p(0.0)[0] == pytest.approx(0.5, abs=1e-9)


def test_xi_log_slope_near_origin(fisher):
    lam = 0.1
    o = integrate_distillate(fisher, lam)
    om = (math.sqrt(1 + 4 * lam) - 1) / 2
    sel = (o.nat_x >= 1e-6) & (o.nat_x <= 1e-5)
    slope = np.polyfit(np.log(o.nat_x[sel]), o.nat_xi[sel], 1)[0]
    assert slope == pytest.approx(1.0 / om, rel=1e-3)


def test_spurious_limit_coordinate_is_unbounded(fisher):
    with pytest.raises(UnboundedCoordinateError):
        reconstruct_xi(integrate_distillate(fisher, 1e-9))


def test_anchor_outside_range(fisher):
    with pytest.raises(ValueError):
        reconstruct_xi(integrate_distillate(fisher, 0.1), 1.5)


def test_profile_solves_autonomous_system(two):
    lam = 1.0
    p = Profile(reconstruct_xi(integrate_distillate(two, lam)))
    xi = np.linspace(-3.0, 3.0, 13)
    h = 1e-3
    fd = (p(xi + h) - p(xi - h)) / (2 * h)
    np.testing.assert_allclose(fd, autonomous_rate(two, lam, p(xi)), atol=1e-6)


@pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"abs_tol": -1.0}, {"delta_end": 0.5}, {"max_steps": 0},
                                {"grid_n": 7}])
def test_invalid_options(kw):
    with pytest.raises(ValueError):
        IntegratorOptions(**kw)


def test_invalid_lentor(fisher):
    with pytest.raises(ValueError):
        integrate_distillate(fisher, -1.0)


def test_grid_is_fixed_and_reproducible(fisher):
    a = integrate_distillate(fisher, 0.15)
    b = integrate_distillate(fisher, 0.15)
    assert a.xs.size == 512
    np.testing.assert_array_equal(a.xs, (2 * np.arange(512) + 1) / 1024)
    np.testing.assert_array_equal(a.vy, b.vy)
