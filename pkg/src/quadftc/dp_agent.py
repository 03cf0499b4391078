"""Model-based one-step-lookahead controller over a discrete action grid.

Each candidate action is pushed through a cloned copy of the plant and
scored as ``r(s') + gamma * V(s')`` with the constant-reward bootstrap
``V(s) = r(s) / (1 - gamma)``. The environment's current reward mode
decides which reward is used, so the controller tracks altitude while the
spin is tolerable and arrests yaw once it is not.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .dynamics import ZN
from .environment import EnvConfig, QuadEnv, RewardMode, reward_batch
from .episode import EpisodeResult, run_episode
from .errors import AllActionsCrash
from .params import QuadParams
from .propulsion import AxesMode


@dataclass
class DpConfig:
    levels: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    # Recursive lookahead depth; 1 is a single successor per action.
    depth: int = 1
    # Integration steps of dt each lookahead node holds its action for.
    hold_steps: int = 1

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        lv = tuple(float(x) for x in self.levels)
        if not lv or list(lv) != sorted(set(lv)) or lv[0] < 0.0 or lv[-1] > 1.0:
            raise ValueError("levels must be distinct, ascending and inside [0, 1]")
        self.levels = lv
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.hold_steps < 1:
            raise ValueError("hold_steps must be >= 1")


class ActionGrid:
    """All combinations of command levels over the live rotors.

    Rows are ordered by total command and then lexicographically, so the
    first maximum of a score vector already honours the tie-break rule.
    """

    def __init__(self, levels: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
                 failed: Optional[int] = 4):
        self.levels = tuple(float(x) for x in levels)
        if list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be distinct and ascending")
        if self.levels[0] < 0.0 or self.levels[-1] > 1.0:
            raise ValueError("levels must lie in [0, 1]")
        self.failed = failed
        live = [i for i in range(4) if i + 1 != failed]
        combos = np.array(list(itertools.product(self.levels, repeat=len(live))))
        acts = np.zeros((len(combos), 4))
        acts[:, live] = combos
        keys = [acts[:, i] for i in range(3, -1, -1)] + [acts.sum(axis=1)]
        self.actions = acts[np.lexsort(keys)]

    def __len__(self) -> int:
        return len(self.actions)


def _successors(state, grid_omegas, params_vec, failed, transformed, dt, hold):
    nxt, status = kernels.rk4_batch(state, grid_omegas, params_vec, failed, transformed, dt, hold)
    terminal = (status != 0) | (nxt[:, ZN] >= 0.0)
    return nxt, terminal


def score_actions(
    state: Sequence[float],
    mode: RewardMode,
    grid: ActionGrid,
    cfg: EnvConfig,
    params: QuadParams,
    depth: int = 1,
    hold_steps: int = 1,
) -> np.ndarray:
    """Lookahead score of every grid action; terminal successors score -inf."""
    state = np.asarray(state, dtype=np.float64)
    omegas = grid.actions * params.omega_max
    pvec = params.as_vector()
    failed = cfg.failed or 0
    transformed = cfg.axes is AxesMode.TRANSFORMED
    gamma = cfg.gamma

    def value(s, k):
        nxt, terminal = _successors(s, omegas, pvec, failed, transformed, cfg.dt, hold_steps)
        r = reward_batch(nxt, mode, cfg)
        if k == 1:
            boot = r / (1.0 - gamma) if gamma < 1.0 else np.zeros_like(r)
        else:
            boot = np.full(len(r), -np.inf)
            for i in np.flatnonzero(~terminal):
                boot[i] = value(nxt[i], k - 1).max()
        sc = r + gamma * boot
        sc[terminal] = -np.inf
        return sc

    return value(state, depth)


def greedy_action(
    state: Sequence[float],
    mode: RewardMode,
    grid: ActionGrid,
    cfg: EnvConfig,
    params: QuadParams,
    depth: int = 1,
    hold_steps: int = 1,
) -> np.ndarray:
    """Best grid action; ties go to the lower total command, then lexicographic order."""
    sc = score_actions(state, mode, grid, cfg, params, depth, hold_steps)
    if not np.isfinite(sc).any():
        raise AllActionsCrash("every grid action leads to a terminal state")
    return grid.actions[int(np.argmax(sc))].copy()


class DpController:
    """Policy wrapper reading the live environment's state and reward mode."""

    def __init__(self, params: QuadParams, cfg: EnvConfig, dp: DpConfig = None):
        self.params = params
        self.cfg = cfg
        self.dp = dp or DpConfig()
        self.grid = ActionGrid(self.dp.levels, cfg.failed)

    def __call__(self, env: QuadEnv) -> np.ndarray:
        return greedy_action(env.state, env.mode, self.grid, env.cfg, self.params,
                             self.dp.depth, self.dp.hold_steps)


def run_dp_episode(
    params: QuadParams,
    cfg: EnvConfig,
    dp: DpConfig = None,
    ic="Nominal",
    max_time: float = 180.0,
) -> EpisodeResult:
    ctrl = DpController(params, cfg, dp)
    return run_episode(params, cfg, ctrl, ic, max_time, arrest_level=ctrl.grid.levels[-1])
