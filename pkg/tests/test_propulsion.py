import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadftc.errors import Unachievable
from quadftc.params import QuadParams
from quadftc.propulsion import (
    AxesMode, forces_moments, moments_from_thrusts, rotor_thrust, solve_trim, total_thrust,
    trim_control,
)

REST = (0.0, 0.0, 0.0)


def test_rotor_at_rest_gives_zero(params):
    assert rotor_thrust(0.0, REST, params) == 0.0


def test_hover_term_matches_exact_evaluation(params, frozen):
    assert rotor_thrust(400.0, REST, params) == pytest.approx(frozen["hover_thrust_400"], abs=1e-12)


def test_thrust_monotone_in_speed(params):
    f = [rotor_thrust(w, REST, params) for w in (300.0, 400.0, 500.0)]
    assert f[0] < f[1] < f[2]


def test_translation_term_variants():
    literal = QuadParams()
    squares = QuadParams(thrust_translation_sum_of_squares=True)
    s = (2.0, -2.0, 0.0)
    # (u + v)^2 vanishes for u = -v while u^2 + v^2 does not.
    assert rotor_thrust(400.0, s, literal) == rotor_thrust(400.0, REST, literal)
    assert rotor_thrust(400.0, s, squares) > rotor_thrust(400.0, REST, squares)


def test_thrust_clamped_in_fast_descent(params):
    assert rotor_thrust(400.0, (0.0, 0.0, -200.0), params) == 0.0


def test_total_thrust_examples():
    assert total_thrust(1, 1, 1, 1) == 4
    assert total_thrust(0, 0, 0, 0) == 0
    assert total_thrust(3.68, 3.68, 3.68, 0) == pytest.approx(11.04, abs=1e-12)


def test_equal_thrusts_cancel(params):
    fm = moments_from_thrusts((2.0, 2.0, 2.0, 2.0), AxesMode.TRANSFORMED, params)
    assert fm.fz == -8.0
    assert fm.l_moment == pytest.approx(0.0, abs=1e-15)
    assert fm.m_moment == pytest.approx(0.0, abs=1e-15)
    assert fm.n_moment == 0.0


def test_transformed_negative_pitch_example(params):
    fm = moments_from_thrusts((1.0, 4.0, 1.0, 0.0), AxesMode.TRANSFORMED, params)
    assert fm.m_moment == pytest.approx(-2.0 * params.Lx, abs=1e-15)


def test_literal_yaw_formula_does_not_cancel():
    p = QuadParams(yaw_moment_literal=True)
    fm = moments_from_thrusts((1.0, 1.0, 1.0, 1.0), AxesMode.STANDARD, p)
    assert fm.n_moment == pytest.approx(4.0 * p.c_torque)


def test_forces_moments_rejects_bad_fault(params):
    with pytest.raises(ValueError):
        forces_moments(np.zeros(4), np.zeros(12), 5, AxesMode.STANDARD, params)


def test_trim_values(params, frozen):
    omega, f = solve_trim(params)
    assert f == pytest.approx(3.67875, abs=1e-12)
    assert omega == pytest.approx(frozen["omega_trim"], rel=1e-12)
    assert rotor_thrust(omega, REST, params) == pytest.approx(f, rel=1e-9)
    # default ceiling puts trim near 55 % of full speed
    assert 0.5 < omega / params.omega_max < 0.6
    assert trim_control(params).tolist() == [omega] * 4


def test_trim_scales_with_sqrt_mass():
    w1, _ = solve_trim(QuadParams(mass=1.0))
    w2, _ = solve_trim(QuadParams(mass=2.0))
    assert w2 / w1 == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_trim_unachievable():
    with pytest.raises(Unachievable):
        solve_trim(QuadParams(omega_max=300.0))


GRID = np.linspace(0.0, 5.0, 11)


def _reachable_signs(mode, params):
    signs = set()
    for f1, f2, f3 in itertools.product(GRID, repeat=3):
        fm = moments_from_thrusts((f1, f2, f3, 0.0), mode, params)
        signs.add((np.sign(round(fm.l_moment, 12)), np.sign(round(fm.m_moment, 12))))
    return signs


def test_standard_mode_cannot_pitch_down(params):
    ms = [moments_from_thrusts((a, b, c, 0.0), AxesMode.STANDARD, params).m_moment
          for a, b, c in itertools.product(GRID, repeat=3)]
    assert min(ms) >= 0.0


def test_transformed_mode_reachable_quadrants(params):
    signs = _reachable_signs(AxesMode.TRANSFORMED, params)
    for quadrant in [(1, 1), (1, -1), (-1, 1)]:
        assert quadrant in signs
    assert any(m < 0 for _, m in signs)
    # With rotor 4 gone, L/Ly + M/Lx = 2 F3 >= 0, so both negative at once is impossible.
    assert (-1, -1) not in signs


nonneg = st.floats(0.0, 10.0)
speed = st.floats(0.0, 965.0)
vel = st.floats(-10.0, 10.0)


@settings(max_examples=200, deadline=None)
@given(om=st.tuples(speed, speed, speed, speed), other=speed, failed=st.sampled_from([1, 2, 3, 4]),
       v=st.tuples(vel, vel, vel), transformed=st.booleans())
def test_failed_rotor_speed_is_irrelevant(om, other, failed, v, transformed):
    params = QuadParams()
    mode = AxesMode.TRANSFORMED if transformed else AxesMode.STANDARD
    s = np.array([*v] + [0.0] * 9)
    changed = list(om)
    changed[failed - 1] = other
    assert forces_moments(om, s, failed, mode, params) == forces_moments(changed, s, failed, mode, params)


@settings(max_examples=200, deadline=None)
@given(f=nonneg, transformed=st.booleans())
def test_equal_thrusts_balance_in_both_modes(f, transformed):
    mode = AxesMode.TRANSFORMED if transformed else AxesMode.STANDARD
    fm = moments_from_thrusts((f, f, f, f), mode, QuadParams())
    assert abs(fm.l_moment) < 1e-12 and abs(fm.m_moment) < 1e-12


@settings(max_examples=200, deadline=None)
@given(a=nonneg, b=nonneg, c=nonneg)
def test_yaw_cancellation(a, b, c):
    # pick F4 so that F1 + F2 = F3 + F4
    d = a + b - c
    if d < 0:
        return
    fm = moments_from_thrusts((a, b, c, d), AxesMode.TRANSFORMED, QuadParams())
    assert abs(fm.n_moment) < 1e-12


@settings(max_examples=300, deadline=None)
@given(om=speed, v=st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50)))
def test_thrust_nonnegative(om, v):
    assert rotor_thrust(om, v, QuadParams()) >= 0.0
