import warnings

import numpy as np
import pytest

from conftest import env_named
from planewave import (bound_constant, cascade_indicators, cascade_sequence, check_contrast_bounds,
                       check_phase_space, check_vz_envelope, contrast_residual, contrast_w, integrate_distillate)
from planewave.contrast import ClassStraddleWarning, direct_indicator, predecessor
from planewave.errors import NotAPlaneWaveError


@pytest.mark.parametrize("D, c", [(0.5, 2.0), (1.0, 2.0), (2.0, 4.0)])
def test_bound_constant(D, c):
    assert bound_constant(D) == c


def test_equidiffusive_z_contrast_vanishes(fisher):
    s = contrast_w(fisher, 0.1, 1e-4)
    assert np.all(s.dw_z == 0.0)


def test_fisher_contrast_positive_and_bounded(fisher):
    s = contrast_w(fisher, 0.1, 1e-5)
    interior = (s.xs >= 0.02) & (s.xs <= 0.98)
    assert np.all(s.dw_y[interior] > 0)
    assert np.all(s.dw_y[interior] < 2 * (0.1 * 0.25) ** 2)
    rep = check_contrast_bounds(s, fisher)
    assert rep.passed and rep.worst_margin > 0
    assert [p.bound_id for p in rep.parts] == ["contrast_y_lower", "contrast_y_upper"]


def test_contrast_is_right_sided_derivative(half):
    lam, eps = 1.0, 1e-3
    interior = slice(60, 450)
    right = contrast_w(half, lam, eps).dw_y[interior]
    left = contrast_w(half, lam - eps, eps).dw_y[interior]
    right2 = contrast_w(half, lam, eps / 2).dw_y[interior]
    left2 = contrast_w(half, lam - eps / 2, eps / 2).dw_y[interior]
    d1 = np.max(np.abs(right - left))
    d2 = np.max(np.abs(right2 - left2))
    assert d1 < 1e-2 * np.max(np.abs(right))
    assert d2 < 0.7 * d1


def test_straddle_warning(fisher):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        s = contrast_w(fisher, 0.245, 0.02)
    assert s.straddle
    assert any(issubclass(w.category, ClassStraddleWarning) for w in rec)


@pytest.mark.parametrize("name", ["half", "two"])
def test_contrast_bounds_pass_at_subcritical_lentor(name):
    env = env_named(name)
    s = contrast_w(env, 1.0, 1e-4)
    rep = check_contrast_bounds(s, env)
    assert rep.passed, rep
    assert {p.bound_id for p in rep.parts} == {"contrast_y_lower", "contrast_y_upper", "contrast_z"}


def test_envelope_degenerates_when_equidiffusive(fisher):
    rep = check_vz_envelope(integrate_distillate(fisher, 0.1))
    assert rep.passed and abs(rep.worst_margin) < 1e-12


@pytest.mark.parametrize("name", ["half", "two"])
def test_envelope_holds(name):
    env = env_named(name)
    rep = check_vz_envelope(integrate_distillate(env, 1.0), env, slack=1e-8)
    assert rep.passed


def test_envelope_rejects_regular_orbit(two):
    with pytest.raises(NotAPlaneWaveError):
        check_vz_envelope(integrate_distillate(two, 6.0))


def test_phase_space_report(two):
    rep = check_phase_space(integrate_distillate(two, 0.1))
    assert rep.passed and rep.bound_id == "phase_space"
    assert rep.to_dict()["pass"] is True


@pytest.mark.parametrize("D, start, seq", [
    (0.5, -1, (-1, 2, 3, -4, -5, 6)),
    (0.5, 1, (1, -2, -3, 4, 5, -6)),
    (2.0, -1, (-1, -2, -3, -4, -5, -6)),
    (2.0, 1, (1, 2, 3, 4, 5, 6)),
])
def test_cascade_index_sequences(D, start, seq):
    assert cascade_sequence(start, 6, D) == seq


def test_predecessor_map():
    assert predecessor(-1, 0.5) == 2
    assert predecessor(2, 0.5) == 3
    assert predecessor(3, 0.5) == -4
    assert predecessor(-2, 2.0) == -3


@pytest.fixture(scope="module", params=["half", "two"])
def cascade(request):
    env = env_named(request.param)
    s = contrast_w(env, 1.0, 1e-4)
    return env, s, cascade_indicators(env, 1.0, depth=4, series=s)


def test_first_indicators_positive(cascade):
    _, _, rep = cascade
    for n in (-1, 1):
        assert np.all(rep.delta[n] > 0)
        assert rep.first_nonpositive[n] is None


def test_indicators_agree_with_direct_evaluation(cascade):
    _, s, rep = cascade
    for n in rep.indices[0][:2] + rep.indices[1][:2]:
        direct = direct_indicator(rep, s, n)
        scale = max(1.0, float(np.max(np.abs(direct))))
        assert np.max(np.abs(direct - rep.delta[n])) < 1e-4 * scale


def test_cascade_vacuous_when_equidiffusive(fisher):
    with pytest.raises(ValueError):
        cascade_indicators(fisher, 0.1)


def test_cascade_depth_must_be_positive(two):
    with pytest.raises(ValueError):
        cascade_indicators(two, 1.0, depth=0)


def test_residual_is_small(half):
    s = contrast_w(half, 1.0, 1e-3)
    xs, ry, rz = contrast_residual(s)
    assert xs.min() >= 0.1 and xs.max() <= 0.9
    assert np.max(np.abs(ry)) < 1e-4 and np.max(np.abs(rz)) < 1e-4
