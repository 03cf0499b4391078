"""Rotor thrust, force/moment aggregation and hover trim."""

from __future__ import annotations

import enum
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import Unachievable
from .params import QuadParams


class AxesMode(enum.Enum):
    STANDARD = "standard"
    TRANSFORMED = "transformed"


class BodyForcesMoments(NamedTuple):
    fz: float
    l_moment: float
    m_moment: float
    n_moment: float


# Rotor spin directions seen from above: 1 and 2 clockwise, 3 and 4 counter-clockwise.
YAW_SIGNS = (-1.0, -1.0, 1.0, 1.0)


def check_fault(failed: Optional[int]) -> Optional[int]:
    if failed is None:
        return None
    if failed not in (1, 2, 3, 4):
        raise ValueError(f"failed rotor must be 1..4 or None, got {failed!r}")
    return failed


def rotor_thrust(omega: float, state: Sequence[float], params: QuadParams) -> float:
    """Blade-element thrust of one rotor, clamped at zero.

    ``state`` only contributes its body velocities u, v, w (indices 0..2).
    """
    u, v, w = state[0], state[1], state[2]
    wr = omega * params.R_rotor
    if params.thrust_translation_sum_of_squares:
        trans = u * u + v * v
    else:
        trans = (u + v) ** 2
    f = params.thrust_coeff * (
        w * wr
        + (2.0 / 3.0) * wr * wr * (params.theta0 + 0.75 * params.theta1)
        + trans * (params.theta0 + 0.5 * params.theta1)
    )
    return max(f, 0.0)


def total_thrust(f1: float, f2: float, f3: float, f4: float) -> float:
    return f1 + f2 + f3 + f4


def moments_from_thrusts(
    thrusts: Sequence[float], mode: AxesMode, params: QuadParams
) -> BodyForcesMoments:
    """Aggregate four (already fault-masked) rotor thrusts into body loads."""
    f1, f2, f3, f4 = thrusts
    fz = -total_thrust(f1, f2, f3, f4)
    if mode is AxesMode.STANDARD:
        l_mom = (f2 - f1) * params.Ld
        m_mom = (f3 - f4) * params.Ld
    else:
        l_mom = (f2 + f3) * params.Ly - (f1 + f4) * params.Ly
        m_mom = (f1 + f3) * params.Lx - (f2 + f4) * params.Lx
    if params.yaw_moment_literal:
        n_mom = (f1 + f2 + f3 + f4) * params.c_torque
    else:
        n_mom = params.c_torque * (-f1 - f2 + f3 + f4)
    return BodyForcesMoments(fz, l_mom, m_mom, n_mom)


def forces_moments(
    control: Sequence[float],
    state: Sequence[float],
    failed: Optional[int],
    mode: AxesMode,
    params: QuadParams,
) -> BodyForcesMoments:
    """Body z-force and moments for rotor speeds ``control`` (rad/s).

    The rotor numbered ``failed`` (1-based) produces neither thrust nor torque.
    """
    failed = check_fault(failed)
    thrusts = [rotor_thrust(om, state, params) for om in control]
    if failed is not None:
        thrusts[failed - 1] = 0.0
    return moments_from_thrusts(thrusts, mode, params)


def hover_thrust_gain(params: QuadParams) -> float:
    """Thrust per (rad/s)^2 of a rotor at rest."""
    return (
        params.thrust_coeff
        * (2.0 / 3.0)
        * params.R_rotor ** 2
        * (params.theta0 + 0.75 * params.theta1)
    )


def solve_trim(params: QuadParams) -> tuple[float, float]:
    """Rotor speed and per-rotor force for four-rotor hover at rest."""
    f_trim = params.mass * params.g / 4.0
    gain = hover_thrust_gain(params)
    f_max = rotor_thrust(params.omega_max, (0.0, 0.0, 0.0), params)
    if gain <= 0 or f_trim > f_max:
        raise Unachievable(
            f"hover needs {f_trim:.4g} N per rotor but omega_max only gives {f_max:.4g} N"
        )
    return math.sqrt(f_trim / gain), f_trim


def trim_control(params: QuadParams) -> np.ndarray:
    omega, _ = solve_trim(params)
    return np.full(4, omega)
