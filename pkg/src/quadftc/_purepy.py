"""NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures and status codes; vectorized over the leading batch axis.
"""

from __future__ import annotations

import numpy as np

GIMBAL_EPS = 1e-6


def _deriv_batch(s, om, P, failed, transformed):
    """Derivatives for states ``s[n, 12]`` under speeds ``om[n, 4]``.

    Returns (out[n, 12], status[n]).
    """
    n = s.shape[0]
    status = np.zeros(n, dtype=np.int8)
    finite = np.isfinite(s).all(axis=1)
    status[~finite] = 2
    s = np.where(finite[:, None], s, 0.0)
    u, v, w, p, q, r, phi, theta, psi = (s[:, i] for i in range(9))
    cth = np.cos(theta)
    status[(status == 0) & (np.abs(cth) < GIMBAL_EPS)] = 1
    cth = np.where(status == 1, 1.0, cth)

    kt = P[10] * P[11] * P[12] * P[13] * P[14] / 4.0
    trans = u * u + v * v if P[19] != 0.0 else (u + v) ** 2
    hov = (2.0 / 3.0) * (P[15] + 0.75 * P[16])
    tr = trans * (P[15] + 0.5 * P[16])
    wr = om * P[14]
    F = kt * (w[:, None] * wr + wr * wr * hov + tr[:, None])
    F = np.maximum(F, 0.0)
    if failed >= 1:
        F[:, failed - 1] = 0.0
    f1, f2, f3, f4 = F[:, 0], F[:, 1], F[:, 2], F[:, 3]
    fz = -(f1 + f2 + f3 + f4)
    if transformed:
        mx = (f2 + f3) * P[7] - (f1 + f4) * P[7]
        my = (f1 + f3) * P[6] - (f2 + f4) * P[6]
    else:
        mx = (f2 - f1) * P[8]
        my = (f3 - f4) * P[8]
    if P[18] != 0.0:
        mz = (f1 + f2 + f3 + f4) * P[9]
    else:
        mz = P[9] * (-f1 - f2 + f3 + f4)

    m, g = P[0], P[1]
    jx, jy, jz, jxz = P[2], P[3], P[4], P[5]
    sph, cph = np.sin(phi), np.cos(phi)
    sth = np.sin(theta)
    sps, cps = np.sin(psi), np.cos(psi)

    out = np.empty_like(s)
    out[:, 0] = r * v - q * w - g * sth
    out[:, 1] = -r * u + p * w + g * sph * cth
    out[:, 2] = q * u - p * v + g * cph * cth + fz / m
    den = jxz * jxz - jx * jz
    out[:, 3] = -(jz * mx + jxz * mz - jxz * jxz * q * r - jz * jz * q * r
                  + jx * jxz * p * q - jxz * jy * p * q + jxz * jz * p * q
                  + jy * jz * q * r) / den
    out[:, 4] = (my - jxz * p * p + jxz * r * r - jx * p * r + jz * p * r) / jy
    out[:, 5] = -(jxz * mx + jx * mz + jx * jx * p * q + jxz * jxz * p * q
                  - jx * jy * p * q - jx * jxz * q * r + jxz * jy * q * r
                  - jxz * jz * q * r) / den
    qr = q * sph + r * cph
    out[:, 6] = p + np.tan(theta) * qr
    out[:, 7] = q * cph - r * sph
    out[:, 8] = qr / cth
    out[:, 9] = (u * cth * cps + v * (sph * sth * cps - cph * sps)
                 + w * (cph * sth * cps + sph * sps))
    out[:, 10] = (u * cth * sps + v * (sph * sth * sps + cph * cps)
                  + w * (cph * sth * sps - sph * cps))
    out[:, 11] = -u * sth + v * sph * cth + w * cph * cth
    return out, status


def _rk4_batch_inplace(s, om, P, failed, transformed, dt, status):
    live = status == 0
    k1, st = _deriv_batch(s, om, P, failed, transformed)
    status[live & (st != 0)] = st[live & (st != 0)]
    k2, st = _deriv_batch(s + 0.5 * dt * k1, om, P, failed, transformed)
    status[(status == 0) & (st != 0)] = st[(status == 0) & (st != 0)]
    k3, st = _deriv_batch(s + 0.5 * dt * k2, om, P, failed, transformed)
    status[(status == 0) & (st != 0)] = st[(status == 0) & (st != 0)]
    k4, st = _deriv_batch(s + dt * k3, om, P, failed, transformed)
    status[(status == 0) & (st != 0)] = st[(status == 0) & (st != 0)]
    new = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    ok = status == 0
    bad = ok & ~np.isfinite(new).all(axis=1)
    status[bad] = 2
    ok = status == 0
    s[ok] = new[ok]


def derivative(state, omega, pvec, failed, transformed):
    out, st = _deriv_batch(np.asarray(state, dtype=np.float64)[None, :],
                           np.asarray(omega, dtype=np.float64)[None, :],
                           pvec, failed, transformed)
    return out[0], int(st[0])


def rk4_step(state, omega, pvec, failed, transformed, dt):
    s = np.array(state, dtype=np.float64)[None, :]
    status = np.zeros(1, dtype=np.int8)
    _rk4_batch_inplace(s, np.asarray(omega, dtype=np.float64)[None, :],
                       pvec, failed, transformed, dt, status)
    return s[0], int(status[0])


def rk4_batch(state, omegas, pvec, failed, transformed, dt, n_sub=1):
    omegas = np.asarray(omegas, dtype=np.float64)
    s = np.repeat(np.asarray(state, dtype=np.float64)[None, :], omegas.shape[0], axis=0)
    status = np.zeros(omegas.shape[0], dtype=np.int8)
    for _ in range(n_sub):
        _rk4_batch_inplace(s, omegas, pvec, failed, transformed, dt, status)
        if status.all():
            break
    return s, status


def rk4_rollout(state, omega, pvec, failed, transformed, dt, n_steps):
    hist = np.empty((n_steps + 1, 12))
    hist[0] = state
    k = 0
    st = 0
    while k < n_steps:
        nxt, st = rk4_step(hist[k], omega, pvec, failed, transformed, dt)
        if st:
            break
        hist[k + 1] = nxt
        k += 1
    return hist[: k + 1], k, st
