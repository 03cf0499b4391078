"""Episodic environment over the plant with one failed rotor.

Actions are four normalized rotor commands in [0, 1] mapped linearly to
``[0, omega_max]``. Observations are the six pose states (xn, yn, zn, phi,
theta, psi) mapped to [0, 1]. Two reward modes alternate on the yaw rate:
altitude tracking while the spin is tolerable, yaw arrest once it is not.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .dynamics import PHI, PSI, THETA, XN, YN, ZN, P, Q, R, STATE_NAMES, hover_state
from .errors import EpisodeFinished, InvalidCustomState
from .params import QuadParams
from .propulsion import AxesMode, check_fault


class RewardMode(enum.Enum):
    ALTITUDE = "ALT"
    YAW = "YAW"


class DoneReason(enum.Enum):
    HORIZON = "HorizonReached"
    GROUND = "GroundContact"
    GIMBAL = "GimbalLock"
    NONFINITE = "NonFinite"


# Perturbations on top of the hover state at the failure altitude.
INITIAL_CONDITIONS = {
    "Nominal": {},
    "IC1": {"u": 5.0},
    "IC2": {"v": 5.0},
    "IC3": {"w": 5.0},
    "IC4": {"phi": 0.35},
    "IC5": {"theta": 0.35},
}

OBS_INDICES = (XN, YN, ZN, PHI, THETA, PSI)
TRANSITION_SIZE = 17


@dataclass
class EnvConfig:
    dt: float = 0.01
    episode_horizon: float = 170.0
    failure_altitude: float = 100.0
    failed_rotor: int = 4  # 0 disables the fault
    yaw_rate_threshold: float = 10.0
    hysteresis_ratio: float = 0.5
    gamma: float = 0.99
    axes: AxesMode = AxesMode.TRANSFORMED
    w_z: float = 1.0
    w_p: float = 0.5
    w_q: float = 0.5
    w_r: float = 1.0
    # Extra altitude-mode penalty on |phi| + |theta|; zero keeps the plain cost.
    w_tilt: float = 0.0
    # Charged once per horizon step left when the episode ends in a crash, so
    # an early crash never scores better than staying airborne. Zero disables.
    crash_step_cost: float = 0.0
    # Lower bound on the per-step reward. Runaway states then cost no more
    # per step than a crash does. -inf keeps the plain cost.
    reward_floor: float = -math.inf
    norm_xn: Tuple[float, float] = (-50.0, 50.0)
    norm_yn: Tuple[float, float] = (-50.0, 50.0)
    norm_zn: Tuple[float, float] = (-120.0, 0.0)
    norm_phi: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    norm_theta: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    norm_psi: Tuple[float, float] = (-8 * math.pi, 8 * math.pi)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.episode_horizon > 0:
            raise ValueError("episode_horizon must be > 0")
        if not self.yaw_rate_threshold > 0:
            raise ValueError("yaw_rate_threshold must be > 0")
        if not 0.0 <= self.hysteresis_ratio <= 1.0:
            raise ValueError("hysteresis_ratio must be in [0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.failed_rotor not in (0, 1, 2, 3, 4):
            raise ValueError("failed_rotor must be 0 (none) or 1..4")
        for name in ("w_z", "w_p", "w_q", "w_r", "w_tilt", "crash_step_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.reward_floor <= 0:
            raise ValueError("reward_floor must be <= 0")
        for lo, hi in self.norm_bounds():
            if not hi > lo:
                raise ValueError("normalization bounds need hi > lo")

    @property
    def failed(self) -> Optional[int]:
        return self.failed_rotor or None

    @property
    def alt_target(self) -> float:
        return self.failure_altitude

    @property
    def horizon_steps(self) -> int:
        return int(round(self.episode_horizon / self.dt))

    def norm_bounds(self) -> List[Tuple[float, float]]:
        return [self.norm_xn, self.norm_yn, self.norm_zn,
                self.norm_phi, self.norm_theta, self.norm_psi]


def select_reward_mode(yaw_rate: float, current: RewardMode, threshold: float = 10.0,
                       ratio: float = 0.5) -> RewardMode:
    """Hysteretic switch between altitude tracking and yaw arrest."""
    if current is RewardMode.ALTITUDE and abs(yaw_rate) > threshold:
        return RewardMode.YAW
    if current is RewardMode.YAW and abs(yaw_rate) < ratio * threshold:
        return RewardMode.ALTITUDE
    return current


def reward_batch(states: np.ndarray, mode: RewardMode, cfg: EnvConfig) -> np.ndarray:
    """Rewards for each row of ``states`` (n, 12)."""
    s = np.atleast_2d(states)
    if mode is RewardMode.YAW:
        return np.maximum(-cfg.w_r * np.abs(s[:, R]), cfg.reward_floor)
    out = (-cfg.w_z * np.abs(cfg.alt_target + s[:, ZN])
           - cfg.w_p * np.abs(s[:, P]) - cfg.w_q * np.abs(s[:, Q]))
    if cfg.w_tilt:
        out = out - cfg.w_tilt * (np.abs(s[:, PHI]) + np.abs(s[:, THETA]))
    return np.maximum(out, cfg.reward_floor)


def compute_reward(state: Sequence[float], mode: RewardMode, cfg: EnvConfig) -> float:
    return float(reward_batch(np.asarray(state, dtype=np.float64), mode, cfg)[0])


def normalize_observation(state: Sequence[float], cfg: EnvConfig) -> np.ndarray:
    s = np.asarray(state, dtype=np.float64)
    b = np.array(cfg.norm_bounds())
    obs = (s[list(OBS_INDICES)] - b[:, 0]) / (b[:, 1] - b[:, 0])
    return np.clip(obs, 0.0, 1.0)


def initial_state(ic: Union[str, Sequence[float]], cfg: EnvConfig) -> np.ndarray:
    """Hover state at the failure altitude plus the named perturbation.

    ``ic`` is a name from ``INITIAL_CONDITIONS`` or a full 12-state (Custom).
    """
    if isinstance(ic, str):
        if ic not in INITIAL_CONDITIONS:
            raise KeyError(f"unknown initial condition {ic!r}; "
                           f"expected one of {sorted(INITIAL_CONDITIONS)}")
        s = hover_state(cfg.failure_altitude)
        for name, value in INITIAL_CONDITIONS[ic].items():
            s[STATE_NAMES.index(name)] += value
        return s
    s = np.array(ic, dtype=np.float64)
    if s.shape != (12,):
        raise InvalidCustomState(f"custom state needs 12 components, got shape {s.shape}")
    if not np.isfinite(s).all():
        raise InvalidCustomState("custom state has non-finite components")
    if abs(math.cos(s[THETA])) < 1e-6:
        raise InvalidCustomState("custom state has theta at +/-pi/2")
    return s


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    done_reason: Optional[DoneReason]
    state: np.ndarray
    mode: RewardMode


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    next_obs: np.ndarray
    reward: float

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.obs, self.action, self.next_obs, [self.reward]])

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "Transition":
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (TRANSITION_SIZE,):
            raise ValueError(f"transition needs {TRANSITION_SIZE} values, got {a.shape}")
        return cls(a[0:6].copy(), a[6:10].copy(), a[10:16].copy(), float(a[16]))


TRAJECTORY_HEADER = list(("t",) + STATE_NAMES + ("omega1", "omega2", "omega3", "omega4", "reward", "mode"))


class QuadEnv:
    """Single-threaded episodic environment. Not safe to share across threads."""

    def __init__(self, params: QuadParams = None, cfg: EnvConfig = None, record: bool = True):
        self.params = params or QuadParams()
        self.cfg = cfg or EnvConfig()
        check_fault(self.cfg.failed)
        self.pvec = self.params.as_vector()
        self.record = record
        self.state = hover_state(self.cfg.failure_altitude)
        self.mode = RewardMode.ALTITUDE
        self.steps = 0
        self.done = True
        self.done_reason: Optional[DoneReason] = None
        self.rows: List[list] = []
        self.last_transition: Optional[Transition] = None

    @property
    def t(self) -> float:
        return self.steps * self.cfg.dt

    @property
    def transformed(self) -> bool:
        return self.cfg.axes is AxesMode.TRANSFORMED

    def reset(self, ic: Union[str, Sequence[float]] = "Nominal") -> np.ndarray:
        self.state = initial_state(ic, self.cfg)
        self.mode = RewardMode.ALTITUDE
        self.steps = 0
        self.done = False
        self.done_reason = None
        self.rows = []
        self.last_transition = None
        return self.observation()

    def observation(self) -> np.ndarray:
        return normalize_observation(self.state, self.cfg)

    def rotor_speeds(self, action: Sequence[float]) -> np.ndarray:
        omega = np.asarray(action, dtype=np.float64) * self.params.omega_max
        if self.cfg.failed:
            omega[self.cfg.failed - 1] = 0.0
        return omega

    def _check_action(self, action) -> np.ndarray:
        a = np.asarray(action, dtype=np.float64)
        if a.shape != (4,):
            raise ValueError(f"action needs 4 components, got shape {a.shape}")
        if not np.isfinite(a).all() or (a < 0).any() or (a > 1).any():
            raise ValueError(f"action components must be finite and in [0, 1], got {a}")
        return a

    def step(self, action: Sequence[float]) -> StepResult:
        if self.done:
            raise EpisodeFinished("episode is over; call reset()")
        a = self._check_action(action)
        obs = self.observation()
        omega = self.rotor_speeds(a)
        nxt, status = kernels.rk4_step_status(
            self.state, omega, self.pvec, self.cfg.failed or 0, self.transformed, self.cfg.dt
        )
        self.steps += 1
        reason = None
        if status == kernels.GIMBAL:
            reason = DoneReason.GIMBAL
        elif status == kernels.NONFINITE:
            reason = DoneReason.NONFINITE
        else:
            self.state = nxt
            if self.state[ZN] >= 0.0:
                reason = DoneReason.GROUND
            elif self.steps >= self.cfg.horizon_steps:
                reason = DoneReason.HORIZON
        self.mode = select_reward_mode(self.state[R], self.mode, self.cfg.yaw_rate_threshold,
                                       self.cfg.hysteresis_ratio)
        reward = compute_reward(self.state, self.mode, self.cfg)
        if reason is not None and reason is not DoneReason.HORIZON and self.cfg.crash_step_cost:
            reward -= self.cfg.crash_step_cost * max(self.cfg.horizon_steps - self.steps, 0)
        self.done = reason is not None
        self.done_reason = reason

        stored = a.copy()
        if self.cfg.failed:
            stored[self.cfg.failed - 1] = 0.0
        next_obs = self.observation()
        self.last_transition = Transition(obs, stored, next_obs, reward)
        if self.record:
            self.rows.append([self.t, *self.state.tolist(), *omega.tolist(), reward, self.mode.value])
        return StepResult(next_obs, reward, self.done, reason, self.state.copy(), self.mode)

    def write_trajectory(self, path) -> None:
        write_trajectory(path, self.rows)


def _fmt(x) -> str:
    return x if isinstance(x, str) else repr(float(x))


def write_trajectory(path, rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def read_trajectory(path) -> Tuple[np.ndarray, List[str]]:
    """Return (numeric columns as an (n, 18) array, mode labels)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header {header}")
        data, modes = [], []
        for row in r:
            data.append([float(x) for x in row[:-1]])
            modes.append(row[-1])
    return np.array(data).reshape(-1, len(TRAJECTORY_HEADER) - 1), modes
