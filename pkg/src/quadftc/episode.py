"""Closed-loop episode runner and the summary record shared by all controllers."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .environment import DoneReason, EnvConfig, QuadEnv, RewardMode
from .errors import AllActionsCrash
from .params import QuadParams
from .propulsion import solve_trim

# A policy sees the live environment and returns 4 normalized commands.
Policy = Callable[[QuadEnv], Sequence[float]]


@dataclass
class EpisodeSummary:
    ic: str
    hover_time: float
    done_reason: str
    alt_min: float
    alt_max: float
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    yaw_rate_peak: float
    mode_switches: int
    yaw_steps: int
    arrest_fraction: float
    score: float

    def to_line(self) -> str:
        parts = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            parts.append(f"{f.name}={v:.6g}" if isinstance(v, float) else f"{f.name}={v}")
        return " ".join(parts)


@dataclass
class EpisodeResult:
    summary: EpisodeSummary
    rows: List[list]
    actions: np.ndarray  # (n, 4) commands applied
    decision_modes: List[RewardMode]


def zero_policy(env: QuadEnv) -> np.ndarray:
    return np.zeros(4)


def trim_policy_for(params: QuadParams, cfg: EnvConfig) -> Policy:
    """Every live rotor held at the level that trims the unfaulted airframe."""
    level = solve_trim(params)[0] / params.omega_max
    action = np.full(4, level)
    if cfg.failed:
        action[cfg.failed - 1] = 0.0

    def policy(env: QuadEnv) -> np.ndarray:
        return action

    return policy


def is_arrest_action(action: Sequence[float], failed: Optional[int], top: float = 1.0) -> bool:
    """Both clockwise rotors off and the rotor opposite the failed one at ``top``."""
    if failed != 4:
        return False
    return action[0] == 0.0 and action[1] == 0.0 and action[2] == top


def run_episode(
    params: QuadParams,
    cfg: EnvConfig,
    policy: Policy,
    ic: Union[str, Sequence[float]] = "Nominal",
    max_time: float = 180.0,
    arrest_level: float = 1.0,
) -> EpisodeResult:
    """Roll ``policy`` from ``ic`` until the plant terminates or ``max_time`` passes.

    The environment horizon is set to ``max_time``.
    """
    label = ic if isinstance(ic, str) else "Custom"
    n_steps = int(round(max_time / cfg.dt))
    alt0 = cfg.failure_altitude
    if n_steps <= 0:
        s = EpisodeSummary(label, 0.0, "None", alt0, alt0, 0.0, 0.0, 0.0, 0.0,
                           0.0, 0, 0, math.nan, 0.0)
        return EpisodeResult(s, [], np.zeros((0, 4)), [])

    env = QuadEnv(params, dataclasses.replace(cfg, episode_horizon=max_time))
    env.reset(ic)
    s0 = env.state.copy()
    actions, modes = [], []
    reason = None
    score = 0.0
    switches = 0
    while not env.done:
        mode = env.mode
        try:
            a = np.asarray(policy(env), dtype=np.float64)
        except AllActionsCrash:
            reason = "AllActionsCrash"
            break
        res = env.step(a)
        actions.append(a)
        modes.append(mode)
        score += res.reward
        if res.mode is not mode:
            switches += 1
    if reason is None:
        reason = env.done_reason.value if env.done_reason else "None"

    hist = np.array([s0] + [row[1:13] for row in env.rows])
    alt = -hist[:, 11]
    acts = np.array(actions).reshape(-1, 4)
    yaw_idx = [k for k, m in enumerate(modes) if m is RewardMode.YAW]
    arrest = [is_arrest_action(acts[k], cfg.failed, arrest_level) for k in yaw_idx]
    summary = EpisodeSummary(
        ic=label,
        hover_time=env.t if env.done_reason is not DoneReason.HORIZON else max_time,
        done_reason=reason,
        alt_min=float(alt.min()),
        alt_max=float(alt.max()),
        x_min=float(hist[:, 9].min()),
        x_max=float(hist[:, 9].max()),
        y_min=float(hist[:, 10].min()),
        y_max=float(hist[:, 10].max()),
        yaw_rate_peak=float(np.abs(hist[:, 5]).max()),
        mode_switches=switches,
        yaw_steps=len(yaw_idx),
        arrest_fraction=float(np.mean(arrest)) if arrest else math.nan,
        score=float(score),
    )
    return EpisodeResult(summary, env.rows, acts, modes)
