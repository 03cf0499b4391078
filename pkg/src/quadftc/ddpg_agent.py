"""Deep deterministic policy gradient on the faulted plant.

The actor maps the six normalized pose states to commands for the live
rotors (sigmoid outputs in [0, 1]); the critic scores an observation and
the full four-slot action, with the failed rotor's slot pinned at zero.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import ZN
from .environment import INITIAL_CONDITIONS, OBS_INDICES, EnvConfig, QuadEnv, Transition
from .errors import InsufficientData
from .neural import Activation, Adam, DenseNetwork, soft_update
from .params import QuadParams
from .rng import SplitMix64

OBS_DIM = 6
ACTION_SLOTS = 4


@dataclass
class DdpgConfig:
    episodes: int = 2000
    horizon: float = 10.0
    buffer_capacity: int = 100000
    batch_size: int = 64
    warmup: int = 1000
    tau: float = 0.005
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    hidden: Tuple[int, ...] = (64, 64)
    critic_sigmoid_output: bool = False
    theta_ou: float = 0.15
    sigma_ou: float = 0.2
    sigma_final: float = 0.02
    mu_ou: float = 0.0
    # Multiplies rewards inside the learner only; scores stay in env units.
    reward_scale: float = 1.0
    # Bound on |scaled reward| seen by the critic; runaway states otherwise
    # inject rewards many orders of magnitude above the rest.
    reward_clip: float = math.inf
    # Treat a next observation on the ground plane as absorbing: no bootstrap
    # term in the critic target. The transition record has no done flag, but
    # normalized altitude reads exactly 1 only once the vehicle is down.
    ground_terminal: bool = False
    # Draw each episode's start from the perturbed conditions instead of Nominal.
    sample_ics: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.batch_size < 1 or self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size must be in [1, buffer_capacity]")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if self.theta_ou < 0 or self.sigma_ou < 0 or self.sigma_final < 0:
            raise ValueError("OU parameters must be >= 0")
        if not self.reward_scale > 0:
            raise ValueError("reward_scale must be > 0")
        if not self.reward_clip > 0:
            raise ValueError("reward_clip must be > 0")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden layer sizes must be positive")
        self.hidden = tuple(int(h) for h in self.hidden)

    def sigma_at(self, episode: int) -> float:
        """Linear decay from sigma_ou on the first episode to sigma_final on the last."""
        if self.episodes <= 1:
            return self.sigma_ou
        frac = min(episode / (self.episodes - 1), 1.0)
        return self.sigma_ou + (self.sigma_final - self.sigma_ou) * frac


class ReplayBuffer:
    """Fixed-capacity ring of flat transition records."""

    def __init__(self, capacity: int, obs_dim: int = OBS_DIM, act_dim: int = ACTION_SLOTS):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.width = 2 * obs_dim + act_dim + 1
        self.data = np.zeros((capacity, self.width))
        self.cursor = 0
        self.count = 0

    def __len__(self) -> int:
        return self.count

    def push(self, record) -> None:
        row = record.to_array() if isinstance(record, Transition) else np.asarray(record, dtype=np.float64)
        if row.shape != (self.width,):
            raise ValueError(f"record needs {self.width} values, got shape {row.shape}")
        self.data[self.cursor] = row
        self.cursor = (self.cursor + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)

    def contents(self) -> np.ndarray:
        """Stored records, oldest first."""
        if self.count < self.capacity:
            return self.data[: self.count].copy()
        return np.roll(self.data, -self.cursor, axis=0)

    def sample_indices(self, n: int, rng: SplitMix64) -> np.ndarray:
        if self.count == 0:
            raise InsufficientData("buffer is empty")
        return rng.integers(self.count, n)

    def sample(self, n: int, rng: SplitMix64):
        """Uniform minibatch; returns (obs, action, next_obs, reward)."""
        rows = self.data[self.sample_indices(n, rng)]
        o, a = self.obs_dim, self.act_dim
        return rows[:, :o], rows[:, o:o + a], rows[:, o + a:2 * o + a], rows[:, -1]


class OUNoise:
    """Ornstein-Uhlenbeck process, Euler-Maruyama discretized."""

    def __init__(self, size: int, theta: float = 0.15, sigma: float = 0.2,
                 mu: float = 0.0, dt: float = 0.01, x0: Optional[Sequence[float]] = None):
        self.size = size
        self.theta = theta
        self.sigma = sigma
        self.mu = mu
        self.dt = dt
        self.x = np.full(size, mu, dtype=np.float64) if x0 is None else np.array(x0, dtype=np.float64)

    def reset(self) -> None:
        self.x = np.full(self.size, self.mu, dtype=np.float64)

    def step(self, rng: SplitMix64) -> np.ndarray:
        xi = rng.normal(self.size)
        self.x = self.x + self.theta * (self.mu - self.x) * self.dt + self.sigma * math.sqrt(self.dt) * xi
        return self.x.copy()

    def path(self, rng: SplitMix64, n: int) -> np.ndarray:
        """``n`` consecutive steps as an (n, size) array.

        Bit-identical to calling ``step`` n times: the normals are drawn as one
        block in the same stream order and the update runs on Python floats.
        """
        xi = rng.normal((n, self.size)).tolist() if n else []
        th, mu, dt = self.theta, self.mu, self.dt
        c = self.sigma * math.sqrt(dt)
        x = self.x.tolist()
        out = []
        for row in xi:
            x = [xj + th * (mu - xj) * dt + c * r for xj, r in zip(x, row)]
            out.append(x)
        self.x = np.array(x, dtype=np.float64)
        return np.array(out, dtype=np.float64).reshape(n, self.size)


def live_slots(failed: Optional[int]) -> List[int]:
    return [i for i in range(ACTION_SLOTS) if i + 1 != failed]


def expand_action(live_action: np.ndarray, failed: Optional[int]) -> np.ndarray:
    """Place live-rotor commands into the four-slot action, failed slot zero."""
    a = np.zeros(live_action.shape[:-1] + (ACTION_SLOTS,))
    a[..., live_slots(failed)] = live_action
    return a


def act(actor: DenseNetwork, obs, failed: Optional[int] = 4,
        noise: Optional[np.ndarray] = None) -> np.ndarray:
    """Actor output plus optional noise, clamped to [0, 1], expanded to 4 slots."""
    a = actor.forward(obs)
    if noise is not None:
        a = a + noise
    return expand_action(np.clip(a, 0.0, 1.0), failed)


def make_actor(obs_dim: int, n_live: int, hidden: Sequence[int], rng) -> DenseNetwork:
    sizes = [obs_dim, *hidden, n_live]
    acts = [Activation.RELU] * len(hidden) + [Activation.SIGMOID]
    return DenseNetwork.initialized(sizes, acts, rng, final_scale=0.003)


def make_critic(obs_dim: int, act_dim: int, hidden: Sequence[int], rng,
                sigmoid_output: bool = False) -> DenseNetwork:
    sizes = [obs_dim + act_dim, *hidden, 1]
    last = Activation.SIGMOID if sigmoid_output else Activation.LINEAR
    acts = [Activation.RELU] * len(hidden) + [last]
    return DenseNetwork.initialized(sizes, acts, rng)


class DdpgLearner:
    """Actor, critic, their targets and optimizers.

    ``live`` lists the action slots the actor drives; the remaining slots of
    the critic's action input are always zero.
    """

    def __init__(self, actor: DenseNetwork, critic: DenseNetwork, live: Sequence[int],
                 gamma: float = 0.99, tau: float = 0.005,
                 actor_lr: float = 1e-4, critic_lr: float = 1e-3, reward_scale: float = 1.0,
                 reward_clip: float = math.inf, terminal_col: Optional[int] = None):
        self.actor = actor
        self.critic = critic
        self.actor_target = actor.copy()
        self.critic_target = critic.copy()
        self.actor_opt = Adam(actor, lr=actor_lr)
        self.critic_opt = Adam(critic, lr=critic_lr)
        self.live = list(live)
        self.obs_dim = actor.n_in
        self.act_dim = critic.n_in - actor.n_in
        self.gamma = gamma
        self.tau = tau
        self.reward_scale = reward_scale
        self.reward_clip = reward_clip
        self.terminal_col = terminal_col

    def _full_action(self, live_action: np.ndarray) -> np.ndarray:
        a = np.zeros((live_action.shape[0], self.act_dim))
        a[:, self.live] = live_action
        return a

    def critic_loss(self, obs, action, next_obs, reward) -> float:
        y = self._targets(next_obs, reward)
        q = self.critic.forward(np.hstack([obs, action]))[:, 0]
        return float(np.mean((y - q) ** 2))

    def _targets(self, next_obs, reward) -> np.ndarray:
        a2 = self._full_action(self.actor_target.forward(next_obs))
        q2 = self.critic_target.forward(np.hstack([next_obs, a2]))[:, 0]
        if self.terminal_col is not None:
            q2 = np.where(next_obs[:, self.terminal_col] >= 1.0, 0.0, q2)
        r = np.clip(self.reward_scale * reward, -self.reward_clip, self.reward_clip)
        return r + self.gamma * q2

    def update(self, obs, action, next_obs, reward) -> float:
        """One critic step, one actor step, then soft target updates.

        Returns the critic loss measured before the step.
        """
        n = obs.shape[0]
        y = self._targets(next_obs, reward)
        x = np.hstack([obs, action])
        qv, cache = self.critic.forward_cached(x)
        q = qv[:, 0]
        loss = float(np.mean((y - q) ** 2))
        grads = self.critic.backward(x, (2.0 / n * (q - y))[:, None], cache)
        self.critic_opt.step(self.critic, grads)

        a_live, a_cache = self.actor.forward_cached(obs)
        xa = np.hstack([obs, self._full_action(a_live)])
        dq = self.critic.backward(xa, np.full((n, 1), 1.0 / n)).dinput
        dq_da = dq[:, self.obs_dim:][:, self.live]
        # Ascend Q: descend on -Q through the actor.
        self.actor_opt.step(self.actor, self.actor.backward(obs, -dq_da, a_cache))

        soft_update(self.actor_target, self.actor, self.tau)
        soft_update(self.critic_target, self.critic, self.tau)
        return loss


def train_step(learner: DdpgLearner, buffer: ReplayBuffer, batch_size: int,
               rng: SplitMix64, warmup: int = 0) -> float:
    """Sample a minibatch and update; returns the critic loss."""
    if buffer.count < max(batch_size, warmup):
        raise InsufficientData(
            f"buffer holds {buffer.count} records, need {max(batch_size, warmup)}")
    return learner.update(*buffer.sample(batch_size, rng))


@dataclass
class CurveRecord:
    episode: int
    score: float
    steps: int
    critic_loss: float
    noise_sigma: float


LEARNING_CURVE_HEADER = ["episode", "score", "steps", "critic_loss", "noise_sigma"]


def write_learning_curve(path, records: Sequence[CurveRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEARNING_CURVE_HEADER)
        for r in records:
            w.writerow([r.episode, repr(float(r.score)), r.steps,
                        repr(float(r.critic_loss)), repr(float(r.noise_sigma))])


def read_learning_curve(path) -> List[CurveRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != LEARNING_CURVE_HEADER:
        raise ValueError("unexpected learning-curve header")
    return [CurveRecord(int(r[0]), float(r[1]), int(r[2]), float(r[3]), float(r[4]))
            for r in rows[1:]]


@dataclass
class TrainResult:
    curve: List[CurveRecord]
    best_actor: Optional[DenseNetwork]
    best_episode: int
    best_score: float
    learner: Optional[DdpgLearner] = None
    buffer: Optional[ReplayBuffer] = field(default=None, repr=False)


def build_learner(env_cfg: EnvConfig, cfg: DdpgConfig, rng: SplitMix64) -> DdpgLearner:
    live = live_slots(env_cfg.failed)
    actor = make_actor(OBS_DIM, len(live), cfg.hidden, rng)
    critic = make_critic(OBS_DIM, ACTION_SLOTS, cfg.hidden, rng, cfg.critic_sigmoid_output)
    terminal_col = None
    if cfg.ground_terminal:
        if env_cfg.norm_zn[1] != 0.0:
            raise ValueError("ground_terminal needs the altitude normalization to end at zn = 0")
        terminal_col = OBS_INDICES.index(ZN)
    return DdpgLearner(actor, critic, live, env_cfg.gamma, cfg.tau, cfg.actor_lr, cfg.critic_lr,
                       cfg.reward_scale, cfg.reward_clip, terminal_col)


def train(params: QuadParams, env_cfg: EnvConfig, cfg: DdpgConfig, seed: int = 0,
          progress=None) -> TrainResult:
    """Run the full training loop; deterministic for a given seed.

    ``progress``, if given, is called with each finished CurveRecord.
    """
    root = SplitMix64(seed)
    init_rng, noise_rng, batch_rng, ic_rng = (root.spawn() for _ in range(4))
    env_cfg = _with_horizon(env_cfg, cfg.horizon)
    env = QuadEnv(params, env_cfg, record=False)
    learner = build_learner(env_cfg, cfg, init_rng)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    live = learner.live
    noise = OUNoise(len(live), cfg.theta_ou, cfg.sigma_ou, cfg.mu_ou, env_cfg.dt)
    ic_names = [k for k in INITIAL_CONDITIONS if k != "Nominal"]

    curve: List[CurveRecord] = []
    best_actor, best_ep, best_score = None, -1, -math.inf
    for ep in range(cfg.episodes):
        ic = ic_names[ic_rng.integers(len(ic_names))] if cfg.sample_ics else "Nominal"
        obs = env.reset(ic)
        noise.reset()
        noise.sigma = cfg.sigma_at(ep)
        score, losses = 0.0, []
        while not env.done:
            a = act(learner.actor, obs, env_cfg.failed, noise.step(noise_rng))
            res = env.step(a)
            buffer.push(env.last_transition)
            score += res.reward
            obs = res.observation
            if buffer.count >= max(cfg.batch_size, cfg.warmup):
                losses.append(train_step(learner, buffer, cfg.batch_size, batch_rng))
        rec = CurveRecord(ep, score, env.steps, float(np.mean(losses)) if losses else math.nan,
                          noise.sigma)
        curve.append(rec)
        if score > best_score:
            best_actor, best_ep, best_score = learner.actor.copy(), ep, score
        if progress is not None:
            progress(rec)
    return TrainResult(curve, best_actor, best_ep, best_score, learner, buffer)


def _with_horizon(cfg: EnvConfig, horizon: float) -> EnvConfig:
    return dataclasses.replace(cfg, episode_horizon=horizon)


class ActorPolicy:
    """Deterministic policy from a trained actor, for closed-loop evaluation."""

    def __init__(self, actor: DenseNetwork, failed: Optional[int]):
        self.actor = actor
        self.failed = failed

    def __call__(self, env: QuadEnv) -> np.ndarray:
        return act(self.actor, env.observation(), self.failed)
