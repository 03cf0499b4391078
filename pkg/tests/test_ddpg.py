import math

import numpy as np
import pytest
from scipy import stats

from quadftc.ddpg_agent import (
    LEARNING_CURVE_HEADER, CurveRecord, DdpgConfig, DdpgLearner, OUNoise, ReplayBuffer, act,
    build_learner, expand_action, make_actor, make_critic, read_learning_curve, train, train_step,
    write_learning_curve,
)
from quadftc.environment import EnvConfig, QuadEnv, Transition
from quadftc.errors import InsufficientData
from quadftc.neural import Activation, DenseLayer, DenseNetwork
from quadftc.params import QuadParams
from quadftc.rng import SplitMix64


def _record(k):
    return np.full(17, float(k))


def test_buffer_ring_keeps_last_capacity_records():
    buf = ReplayBuffer(10)
    for k in range(23):
        buf.push(_record(k))
    assert len(buf) == 10
    assert buf.contents()[:, 0].tolist() == list(range(13, 23))


def test_buffer_partial_fill_and_errors():
    buf = ReplayBuffer(5)
    with pytest.raises(InsufficientData):
        buf.sample_indices(3, SplitMix64(0))
    buf.push(_record(1))
    buf.push(_record(2))
    assert buf.contents()[:, 0].tolist() == [1.0, 2.0]
    assert set(buf.sample_indices(100, SplitMix64(0)).tolist()) <= {0, 1}
    with pytest.raises(ValueError):
        buf.push(np.zeros(16))
    with pytest.raises(ValueError):
        ReplayBuffer(0)


def test_buffer_sampling_is_uniform():
    buf = ReplayBuffer(50)
    for k in range(120):
        buf.push(_record(k))
    idx = buf.sample_indices(100000, SplitMix64(42))
    counts = np.bincount(idx, minlength=50)
    assert len(counts) == 50
    assert stats.chisquare(counts).pvalue > 0.01


def test_sampled_records_split_into_transitions():
    env = QuadEnv()
    env.reset("IC1")
    buf = ReplayBuffer(100)
    for _ in range(20):
        env.step([0.6, 0.6, 0.6, 0.6])
        buf.push(env.last_transition)
    o, a, o2, r = buf.sample(8, SplitMix64(1))
    assert o.shape == (8, 6) and a.shape == (8, 4) and o2.shape == (8, 6) and r.shape == (8,)
    assert np.all(a[:, 3] == 0.0)
    for row in buf.data[:20]:
        assert Transition.from_array(row).to_array().shape == (17,)


def test_buffer_grows_one_record_per_step():
    env = QuadEnv(cfg=EnvConfig(failed_rotor=0))
    env.reset()
    buf = ReplayBuffer(1000)
    for _ in range(300):
        env.step([0.55, 0.55, 0.55, 0.55])
        buf.push(env.last_transition)
    assert len(buf) == 300


def test_ou_noise_free_decay():
    ou = OUNoise(1, theta=0.15, sigma=0.0, dt=0.01, x0=[1.0])
    rng = SplitMix64(0)
    for n in range(1, 101):
        x = ou.step(rng)[0]
    assert x == pytest.approx((1 - 0.0015) ** 100, rel=1e-12)
    still = OUNoise(2, theta=0.0, sigma=0.0, x0=[0.3, -0.2])
    assert still.step(rng).tolist() == [0.3, -0.2]


def test_ou_stationary_statistics(frozen):
    theta, sigma, dt, n = 0.15, 0.2, 0.01, 10 ** 6
    ou = OUNoise(1, theta=theta, sigma=sigma, mu=0.0, dt=dt)
    xs = ou.path(SplitMix64(7), n)[:, 0]
    lag1 = np.corrcoef(xs[:-1], xs[1:])[0, 1]
    assert lag1 == pytest.approx(frozen["ou"]["lag1"], abs=5e-4)
    # standard error of the mean for an AR(1) chain with coefficient rho
    rho = 1 - theta * dt
    var = sigma ** 2 * dt / (1 - rho ** 2)
    se = math.sqrt(var / n * (1 + rho) / (1 - rho))
    assert abs(xs.mean()) < 3 * se
    assert xs.var() == pytest.approx(var, rel=0.15)


def test_ou_path_matches_repeated_steps():
    a = OUNoise(3, theta=0.15, sigma=0.3, mu=0.1, dt=0.01, x0=[0.5, -1.0, 2.0])
    b = OUNoise(3, theta=0.15, sigma=0.3, mu=0.1, dt=0.01, x0=[0.5, -1.0, 2.0])
    ra, rb = SplitMix64(8), SplitMix64(8)
    steps = np.array([a.step(ra) for _ in range(500)])
    assert np.array_equal(steps, b.path(rb, 500))
    assert np.array_equal(a.x, b.x) and ra.state == rb.state
    assert b.path(rb, 0).shape == (0, 3)


def _zero_actor():
    return DenseNetwork([DenseLayer(np.zeros((3, 6)), np.zeros(3), Activation.SIGMOID)])


def test_act_examples():
    obs = np.full(6, 0.3)
    assert act(_zero_actor(), obs).tolist() == [0.5, 0.5, 0.5, 0.0]
    assert act(_zero_actor(), obs, noise=np.array([0.9, -0.9, 0.0])).tolist() == [1.0, 0.0, 0.5, 0.0]
    a = act(make_actor(6, 3, (8,), SplitMix64(0)), obs, failed=4)
    assert a[3] == 0.0
    assert expand_action(np.array([0.1, 0.2, 0.3]), 2).tolist() == [0.1, 0.0, 0.2, 0.3]


def _const_critic(value):
    return DenseNetwork([DenseLayer(np.zeros((1, 2)), np.array([value]), Activation.LINEAR)])


def _one_d_learner(critic, tau=0.005, gamma=0.0, seed=0, lr=1e-3):
    actor = make_actor(1, 1, (8,), SplitMix64(seed))
    return DdpgLearner(actor, critic, [0], gamma=gamma, tau=tau, actor_lr=lr, critic_lr=lr)


def test_train_step_exact_critic_is_fixed_point():
    learner = _one_d_learner(_const_critic(1.0))
    before = learner.critic.flat.copy()
    buf = ReplayBuffer(100, 1, 1)
    for a in np.linspace(0, 1, 64):
        buf.push([0.5, a, 0.5, 1.0])
    loss = train_step(learner, buf, 32, SplitMix64(0))
    assert loss == 0.0
    assert np.array_equal(learner.critic.flat, before)


def test_train_step_tau_one_copies_online():
    learner = _one_d_learner(make_critic(1, 1, (8,), SplitMix64(3)), tau=1.0, gamma=0.9)
    buf = ReplayBuffer(100, 1, 1)
    for a in np.linspace(0, 1, 64):
        buf.push([0.5, a, 0.5, -a])
    train_step(learner, buf, 32, SplitMix64(0))
    assert np.array_equal(learner.actor_target.flat, learner.actor.flat)
    assert np.array_equal(learner.critic_target.flat, learner.critic.flat)


def test_train_step_requires_data():
    learner = _one_d_learner(_const_critic(0.0))
    buf = ReplayBuffer(100, 1, 1)
    for a in range(10):
        buf.push([0.5, 0.5, 0.5, 0.0])
    with pytest.raises(InsufficientData):
        train_step(learner, buf, 64, SplitMix64(0))
    with pytest.raises(InsufficientData):
        train_step(learner, buf, 5, SplitMix64(0), warmup=20)


def _bandit_buffer(rng, n=5000):
    buf = ReplayBuffer(10000, 1, 1)
    for a in rng.random(n):
        buf.push([0.5, a, 0.5, -(a - 0.7) ** 2])
    return buf


def run_bandit(seed, steps=5000):
    rng = SplitMix64(seed)
    actor = make_actor(1, 1, (64, 64), rng)
    critic = make_critic(1, 1, (64, 64), rng)
    learner = DdpgLearner(actor, critic, [0], gamma=0.0, tau=0.005, actor_lr=1e-3, critic_lr=1e-3)
    buf = _bandit_buffer(rng)
    for _ in range(steps):
        train_step(learner, buf, 64, rng)
    return float(actor.forward([0.5])[0])


def test_bandit_converges_to_optimum(frozen):
    assert abs(run_bandit(0) - frozen["bandit_optimum"]) <= 0.05


def test_actor_step_moves_toward_higher_q():
    # Critic fixed to Q(s, a) = -(a - 0.7)^2 via a hand-built network is
    # awkward; instead fit the critic first, then check one actor step
    # moves along the critic's input gradient.
    rng = SplitMix64(5)
    actor = make_actor(1, 1, (16,), rng)
    critic = make_critic(1, 1, (32, 32), rng)
    learner = DdpgLearner(actor, critic, [0], gamma=0.0, tau=0.005, actor_lr=1e-3, critic_lr=1e-3)
    buf = _bandit_buffer(rng, 2000)
    for _ in range(1500):
        train_step(learner, buf, 64, rng)
    learner.critic_opt.lr = 0.0
    a0 = actor.forward([0.5])[0]
    x = np.array([[0.5, a0]])
    dq_da = critic.backward(x, np.ones((1, 1))).dinput[0, 1]
    learner.update(*buf.sample(64, rng))
    a1 = actor.forward([0.5])[0]
    assert dq_da != 0.0
    assert np.sign(a1 - a0) == np.sign(dq_da)


def test_critic_loss_descends_on_frozen_buffer():
    rng = SplitMix64(2)
    critic = make_critic(1, 1, (32, 32), rng)
    learner = DdpgLearner(make_actor(1, 1, (8,), rng), critic, [0], gamma=0.0,
                          actor_lr=0.0, critic_lr=1e-3)
    buf = _bandit_buffer(rng, 512)
    o, a, o2, r = buf.sample(512, SplitMix64(9))
    first = learner.critic_loss(o, a, o2, r)
    for _ in range(100):
        train_step(learner, buf, 64, rng)
    assert learner.critic_loss(o, a, o2, r) < first


def test_reward_scale_and_clip_shape_targets():
    learner = _one_d_learner(_const_critic(0.0))
    learner.reward_scale = 0.5
    learner.reward_clip = 2.0
    y = learner._targets(np.array([[0.5], [0.5]]), np.array([-10.0, 3.0]))
    assert y.tolist() == [-2.0, 1.5]


def test_ground_terminal_drops_bootstrap_on_ground():
    learner = _one_d_learner(_const_critic(-4.0), gamma=0.5)
    learner.terminal_col = 0
    y = learner._targets(np.array([[1.0], [0.999]]), np.array([-1.0, -1.0]))
    assert y.tolist() == [-1.0, -3.0]


def test_ground_terminal_wiring():
    on = build_learner(EnvConfig(), DdpgConfig(ground_terminal=True), SplitMix64(0))
    assert on.terminal_col == 2  # zn column of the observation
    assert build_learner(EnvConfig(), DdpgConfig(), SplitMix64(0)).terminal_col is None
    with pytest.raises(ValueError):
        build_learner(EnvConfig(norm_zn=(-120.0, -1.0)), DdpgConfig(ground_terminal=True),
                      SplitMix64(0))
    # a grounded state normalizes to exactly 1 in that column
    env = QuadEnv(QuadParams(), EnvConfig())
    env.reset("Nominal")
    env.state[11] = 0.0
    assert env.observation()[2] == 1.0


def test_config_validation():
    for bad in ({"tau": 0.0}, {"tau": 1.5}, {"batch_size": 0}, {"batch_size": 10, "buffer_capacity": 5},
                {"reward_scale": 0.0}, {"reward_clip": 0.0}, {"hidden": ()}, {"episodes": -1}):
        with pytest.raises(ValueError):
            DdpgConfig(**bad)
    cfg = DdpgConfig(episodes=11, sigma_ou=0.2, sigma_final=0.02)
    assert cfg.sigma_at(0) == 0.2 and cfg.sigma_at(10) == pytest.approx(0.02)


def _tiny(episodes):
    return DdpgConfig(episodes=episodes, horizon=0.3, batch_size=8, warmup=40, hidden=(8,),
                      buffer_capacity=500)


def test_zero_episodes_gives_empty_curve():
    res = train(QuadParams(), EnvConfig(), _tiny(0), seed=0)
    assert res.curve == [] and res.best_actor is None


def test_training_is_deterministic(tmp_path):
    a = train(QuadParams(), EnvConfig(), _tiny(4), seed=3)
    b = train(QuadParams(), EnvConfig(), _tiny(4), seed=3)
    c = train(QuadParams(), EnvConfig(), _tiny(4), seed=4)
    assert [r.score for r in a.curve] == [r.score for r in b.curve]
    assert np.array_equal(a.best_actor.flat, b.best_actor.flat)
    assert [r.score for r in a.curve] != [r.score for r in c.curve]
    assert [r.steps for r in a.curve] == [30] * 4
    assert math.isnan(a.curve[0].critic_loss) and not math.isnan(a.curve[-1].critic_loss)
    write_learning_curve(tmp_path / "a.csv", a.curve)
    write_learning_curve(tmp_path / "b.csv", b.curve)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_learning_curve_round_trip(tmp_path):
    recs = [CurveRecord(0, -1.5, 10, math.nan, 0.2), CurveRecord(1, -0.25, 12, 0.125, 0.19)]
    path = tmp_path / "c.csv"
    write_learning_curve(path, recs)
    assert path.read_text().splitlines()[0] == ",".join(LEARNING_CURVE_HEADER)
    back = read_learning_curve(path)
    assert back[1] == recs[1] and math.isnan(back[0].critic_loss)


def test_sampled_initial_conditions():
    cfg = _tiny(3)
    cfg.sample_ics = True
    res = train(QuadParams(), EnvConfig(), cfg, seed=1)
    assert len(res.curve) == 3
