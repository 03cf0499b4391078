"""Integration kernels: compiled when available, NumPy otherwise.

Set ``QUADFTC_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
implementation in use.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import GimbalLock, NonFiniteInput

if os.environ.get("QUADFTC_PURE_PYTHON", "") not in ("", "0"):
    from . import _purepy as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _purepy as _impl

        BACKEND = "python"

OK, GIMBAL, NONFINITE = 0, 1, 2


def raise_for_status(status: int) -> None:
    if status == GIMBAL:
        raise GimbalLock("pitch reached the Euler-angle singularity during integration")
    if status == NONFINITE:
        raise NonFiniteInput("state became non-finite during integration")


def derivative(state, omega, pvec, failed, transformed):
    """Composed plant derivative (rotor loads + rigid body); raises on bad status."""
    out, st = _impl.derivative(
        np.ascontiguousarray(state, dtype=np.float64),
        np.ascontiguousarray(omega, dtype=np.float64),
        pvec, int(failed), bool(transformed),
    )
    raise_for_status(st)
    return out


def rk4_step(state, omega, pvec, failed, transformed, dt):
    out, st = _impl.rk4_step(
        np.ascontiguousarray(state, dtype=np.float64),
        np.ascontiguousarray(omega, dtype=np.float64),
        pvec, int(failed), bool(transformed), float(dt),
    )
    raise_for_status(st)
    return out


def rk4_batch(state, omegas, pvec, failed, transformed, dt, n_sub=1):
    """Successor of ``state`` for every row of ``omegas``; returns (states, status)."""
    return _impl.rk4_batch(
        np.ascontiguousarray(state, dtype=np.float64),
        np.ascontiguousarray(omegas, dtype=np.float64),
        pvec, int(failed), bool(transformed), float(dt), int(n_sub),
    )


def rk4_rollout(state, omega, pvec, failed, transformed, dt, n_steps):
    """Constant-control trajectory; returns (history, steps_done, status)."""
    return _impl.rk4_rollout(
        np.ascontiguousarray(state, dtype=np.float64),
        np.ascontiguousarray(omega, dtype=np.float64),
        pvec, int(failed), bool(transformed), float(dt), int(n_steps),
    )


def rk4_step_status(state, omega, pvec, failed, transformed, dt):
    """Like ``rk4_step`` but returns (next_state, status) instead of raising."""
    return _impl.rk4_step(
        np.ascontiguousarray(state, dtype=np.float64),
        np.ascontiguousarray(omega, dtype=np.float64),
        pvec, int(failed), bool(transformed), float(dt),
    )
