# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels for the faulted quadcopter plant.

Mirrors quadftc._purepy; both take the parameter vector laid out by
QuadParams.as_vector and return status codes 0 (ok), 1 (gimbal lock),
2 (non-finite).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, tan, fabs, isfinite

cnp.import_array()

cdef double GIMBAL_EPS = 1e-6

# parameter vector slots
cdef enum:
    P_MASS = 0
    P_G = 1
    P_JX = 2
    P_JY = 3
    P_JZ = 4
    P_JXZ = 5
    P_LX = 6
    P_LY = 7
    P_LD = 8
    P_C = 9
    P_RHO = 10
    P_A = 11
    P_B = 12
    P_CHORD = 13
    P_R = 14
    P_TH0 = 15
    P_TH1 = 16
    P_YAWLIT = 18
    P_SUMSQ = 19


cdef inline int _deriv(const double* s, const double* om, const double* P,
                       int failed, bint transformed, double* out) noexcept nogil:
    cdef int i
    for i in range(12):
        if not isfinite(s[i]):
            return 2
    cdef double u = s[0], v = s[1], w = s[2]
    cdef double p = s[3], q = s[4], r = s[5]
    cdef double phi = s[6], theta = s[7], psi = s[8]
    cdef double cth = cos(theta)
    if fabs(cth) < GIMBAL_EPS:
        return 1

    cdef double kt = P[P_RHO] * P[P_A] * P[P_B] * P[P_CHORD] * P[P_R] / 4.0
    cdef double trans
    if P[P_SUMSQ] != 0.0:
        trans = u * u + v * v
    else:
        trans = (u + v) * (u + v)
    cdef double hov = (2.0 / 3.0) * (P[P_TH0] + 0.75 * P[P_TH1])
    cdef double tr = trans * (P[P_TH0] + 0.5 * P[P_TH1])
    cdef double F[4]
    cdef double wr
    for i in range(4):
        wr = om[i] * P[P_R]
        F[i] = kt * (w * wr + wr * wr * hov + tr)
        if F[i] < 0.0:
            F[i] = 0.0
    if failed >= 1:
        F[failed - 1] = 0.0

    cdef double fz = -(F[0] + F[1] + F[2] + F[3])
    cdef double mx, my, mz
    if transformed:
        mx = (F[1] + F[2]) * P[P_LY] - (F[0] + F[3]) * P[P_LY]
        my = (F[0] + F[2]) * P[P_LX] - (F[1] + F[3]) * P[P_LX]
    else:
        mx = (F[1] - F[0]) * P[P_LD]
        my = (F[2] - F[3]) * P[P_LD]
    if P[P_YAWLIT] != 0.0:
        mz = (F[0] + F[1] + F[2] + F[3]) * P[P_C]
    else:
        mz = P[P_C] * (-F[0] - F[1] + F[2] + F[3])

    cdef double m = P[P_MASS], g = P[P_G]
    cdef double jx = P[P_JX], jy = P[P_JY], jz = P[P_JZ], jxz = P[P_JXZ]
    cdef double sph = sin(phi), cph = cos(phi)
    cdef double sth = sin(theta)
    cdef double sps = sin(psi), cps = cos(psi)

    out[0] = r * v - q * w - g * sth
    out[1] = -r * u + p * w + g * sph * cth
    out[2] = q * u - p * v + g * cph * cth + fz / m

    cdef double den = jxz * jxz - jx * jz
    out[3] = -(jz * mx + jxz * mz - jxz * jxz * q * r - jz * jz * q * r
               + jx * jxz * p * q - jxz * jy * p * q + jxz * jz * p * q
               + jy * jz * q * r) / den
    out[4] = (my - jxz * p * p + jxz * r * r - jx * p * r + jz * p * r) / jy
    out[5] = -(jxz * mx + jx * mz + jx * jx * p * q + jxz * jxz * p * q
               - jx * jy * p * q - jx * jxz * q * r + jxz * jy * q * r
               - jxz * jz * q * r) / den

    cdef double qr = q * sph + r * cph
    out[6] = p + tan(theta) * qr
    out[7] = q * cph - r * sph
    out[8] = qr / cth

    out[9] = (u * cth * cps + v * (sph * sth * cps - cph * sps)
              + w * (cph * sth * cps + sph * sps))
    out[10] = (u * cth * sps + v * (sph * sth * sps + cph * cps)
               + w * (cph * sth * sps - sph * cps))
    out[11] = -u * sth + v * sph * cth + w * cph * cth
    return 0


cdef inline int _rk4(double* s, const double* om, const double* P,
                     int failed, bint transformed, double dt) noexcept nogil:
    """In-place RK4 step of the 12-state ``s``."""
    cdef double k1[12]
    cdef double k2[12]
    cdef double k3[12]
    cdef double k4[12]
    cdef double tmp[12]
    cdef int i, st
    st = _deriv(s, om, P, failed, transformed, k1)
    if st:
        return st
    for i in range(12):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    st = _deriv(tmp, om, P, failed, transformed, k2)
    if st:
        return st
    for i in range(12):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    st = _deriv(tmp, om, P, failed, transformed, k3)
    if st:
        return st
    for i in range(12):
        tmp[i] = s[i] + dt * k3[i]
    st = _deriv(tmp, om, P, failed, transformed, k4)
    if st:
        return st
    for i in range(12):
        tmp[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not isfinite(tmp[i]):
            return 2
    for i in range(12):
        s[i] = tmp[i]
    return 0


def derivative(const double[::1] state, const double[::1] omega, const double[::1] pvec,
               int failed, bint transformed):
    """Return (derivative, status) at ``state`` for rotor speeds ``omega``."""
    out = np.zeros(12)
    cdef double[::1] o = out
    cdef int st = _deriv(&state[0], &omega[0], &pvec[0], failed, transformed, &o[0])
    return out, st


def rk4_step(const double[::1] state, const double[::1] omega, const double[::1] pvec,
             int failed, bint transformed, double dt):
    """Return (next_state, status) after one RK4 step."""
    out = np.array(state, dtype=np.float64, copy=True)
    cdef double[::1] o = out
    cdef int st = _rk4(&o[0], &omega[0], &pvec[0], failed, transformed, dt)
    return out, st


def rk4_batch(const double[::1] state, const double[:, ::1] omegas, const double[::1] pvec,
              int failed, bint transformed, double dt, int n_sub=1):
    """Advance ``state`` under each row of ``omegas`` for ``n_sub`` steps.

    Returns (states[n, 12], status[n]).
    """
    cdef Py_ssize_t n = omegas.shape[0]
    out = np.empty((n, 12))
    status = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] o = out
    cdef signed char[::1] stv = status
    cdef Py_ssize_t j
    cdef int i, k, st
    with nogil:
        for j in range(n):
            for i in range(12):
                o[j, i] = state[i]
            st = 0
            for k in range(n_sub):
                st = _rk4(&o[j, 0], &omegas[j, 0], &pvec[0], failed, transformed, dt)
                if st:
                    break
            stv[j] = st
    return out, status


def rk4_rollout(const double[::1] state, const double[::1] omega, const double[::1] pvec,
                int failed, bint transformed, double dt, int n_steps):
    """Hold ``omega`` for ``n_steps``; returns (history[n_steps+1, 12], steps_done, status)."""
    hist = np.empty((n_steps + 1, 12))
    cdef double[:, ::1] h = hist
    cdef int i, k, st = 0
    for i in range(12):
        h[0, i] = state[i]
    k = 0
    with nogil:
        while k < n_steps:
            for i in range(12):
                h[k + 1, i] = h[k, i]
            st = _rk4(&h[k + 1, 0], &omega[0], &pvec[0], failed, transformed, dt)
            if st:
                break
            k += 1
    return hist[: k + 1], k, st
