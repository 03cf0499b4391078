"""Rigid-body equations of motion and the RK4 integrator.

State vectors are float64 arrays of length 12 laid out as
``u v w p q r phi theta psi xn yn zn``: body velocities (m/s), body rates
(rad/s), Euler angles (rad) and north-east-down position (m). Altitude
above ground is ``-zn``.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import GimbalLock, NonFiniteInput
from .params import QuadParams
from .propulsion import AxesMode, BodyForcesMoments, check_fault

STATE_NAMES = ("u", "v", "w", "p", "q", "r", "phi", "theta", "psi", "xn", "yn", "zn")
IDX = {name: i for i, name in enumerate(STATE_NAMES)}
U, V, W, P, Q, R, PHI, THETA, PSI, XN, YN, ZN = range(12)

GIMBAL_COS_EPS = 1e-6


def make_state(**components: float) -> np.ndarray:
    """Build a state vector from named components; missing ones are zero."""
    s = np.zeros(12)
    for name, value in components.items():
        if name not in IDX:
            raise KeyError(f"unknown state component {name!r}")
        s[IDX[name]] = value
    return s


def hover_state(altitude: float = 100.0) -> np.ndarray:
    return make_state(zn=-altitude)


def altitude(state: Sequence[float]) -> float:
    return -float(state[ZN])


def check_state(state: Sequence[float]) -> None:
    if len(state) != 12:
        raise NonFiniteInput(f"state must have 12 components, got {len(state)}")
    if not all(math.isfinite(x) for x in state):
        raise NonFiniteInput("state has non-finite components")
    if abs(math.cos(state[THETA])) < GIMBAL_COS_EPS:
        raise GimbalLock(f"theta = {state[THETA]!r} is at the Euler singularity")


def state_derivative(
    state: Sequence[float], fm: BodyForcesMoments, params: QuadParams
) -> np.ndarray:
    """Time derivative of the 12-state for given body loads.

    Aerodynamic forces are zero and thrust acts along body z only.
    """
    check_state(state)
    if not all(math.isfinite(x) for x in fm):
        raise NonFiniteInput("forces/moments are not finite")
    u, v, w, p, q, r, phi, theta, psi = (float(x) for x in state[:9])
    fz, mx, my, mz = fm
    m, g = params.mass, params.g
    jx, jy, jz, jxz = params.Jx, params.Jy, params.Jz, params.Jxz

    sph, cph = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    sps, cps = math.sin(psi), math.cos(psi)

    out = np.empty(12)
    # force equations
    out[U] = r * v - q * w - g * sth
    out[V] = -r * u + p * w + g * sph * cth
    out[W] = q * u - p * v + g * cph * cth + fz / m
    # moment equations (full cross-product inertia)
    den = jxz * jxz - jx * jz
    out[P] = -(
        jz * mx + jxz * mz - jxz * jxz * q * r - jz * jz * q * r
        + jx * jxz * p * q - jxz * jy * p * q + jxz * jz * p * q + jy * jz * q * r
    ) / den
    out[Q] = (my - jxz * p * p + jxz * r * r - jx * p * r + jz * p * r) / jy
    out[R] = -(
        jxz * mx + jx * mz + jx * jx * p * q + jxz * jxz * p * q
        - jx * jy * p * q - jx * jxz * q * r + jxz * jy * q * r - jxz * jz * q * r
    ) / den
    # kinematic equations
    qr = q * sph + r * cph
    out[PHI] = p + math.tan(theta) * qr
    out[THETA] = q * cph - r * sph
    out[PSI] = qr / cth
    # navigation: standard Z-Y-X body-to-inertial rotation
    out[XN] = (
        u * cth * cps
        + v * (sph * sth * cps - cph * sps)
        + w * (cph * sth * cps + sph * sps)
    )
    out[YN] = (
        u * cth * sps
        + v * (sph * sth * sps + cph * cps)
        + w * (cph * sth * sps - sph * cps)
    )
    out[ZN] = -u * sth + v * sph * cth + w * cph * cth
    return out


def integrate_step(
    state: Sequence[float],
    control: Sequence[float],
    params: QuadParams,
    dt: float,
    failed: Optional[int] = None,
    mode: AxesMode = AxesMode.TRANSFORMED,
) -> np.ndarray:
    """Advance one classical RK4 step with rotor speeds held over the step.

    Rotor loads are recomputed from each stage state.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    check_state(state)
    return kernels.rk4_step(
        np.asarray(state, dtype=np.float64),
        np.asarray(control, dtype=np.float64),
        params.as_vector(),
        check_fault(failed) or 0,
        mode is AxesMode.TRANSFORMED,
        float(dt),
    )


def simulate(
    state: Sequence[float],
    control: Sequence[float],
    params: QuadParams,
    dt: float,
    n_steps: int,
    failed: Optional[int] = None,
    mode: AxesMode = AxesMode.TRANSFORMED,
) -> np.ndarray:
    """Integrate ``n_steps`` with constant control; returns the (n_steps+1, 12) history."""
    out = np.empty((n_steps + 1, 12))
    out[0] = state
    for k in range(n_steps):
        out[k + 1] = integrate_step(out[k], control, params, dt, failed, mode)
    return out
