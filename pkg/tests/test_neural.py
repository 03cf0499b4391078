import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadftc.errors import ArchitectureMismatch, ShapeMismatch
from quadftc.neural import (
    Activation, Adam, CheckpointError, DenseLayer, DenseNetwork, load_checkpoint,
    save_checkpoint, soft_update,
)
from quadftc.rng import SplitMix64

sys.path.insert(0, str(Path(__file__).parent / "oracles"))
from finite_diff import max_gradient_error  # noqa: E402


def single(W, b, act):
    return DenseNetwork([DenseLayer(np.array(W, float), np.array(b, float), Activation(act))])


def random_net(seed, sizes=(6, 32, 32, 4), out="sigmoid"):
    acts = ["relu"] * (len(sizes) - 2) + [out]
    return DenseNetwork.initialized(list(sizes), acts, SplitMix64(seed))


def test_forward_examples():
    assert single(np.eye(3), np.zeros(3), "linear").forward([1.0, -2.0, 3.0]).tolist() == [1, -2, 3]
    assert single(np.eye(2), np.zeros(2), "relu").forward([-1.0, 2.0]).tolist() == [0, 2]
    assert single(np.zeros((3, 2)), np.zeros(3), "sigmoid").forward([7.0, -4.0]).tolist() == [0.5] * 3


def test_forward_shape_errors():
    net = random_net(0)
    with pytest.raises(ShapeMismatch):
        net.forward(np.zeros(5))
    with pytest.raises(ShapeMismatch):
        net.backward(np.zeros(6), np.zeros(3))
    with pytest.raises(ShapeMismatch):
        DenseNetwork([DenseLayer(np.zeros((3, 2)), np.zeros(3), Activation.RELU),
                      DenseLayer(np.zeros((1, 4)), np.zeros(1), Activation.LINEAR)])


def test_scalar_backward_example():
    g = single([[2.5]], [0.7], "linear").backward(np.array([3.0]), np.array([1.0]))
    assert g.dW[0].tolist() == [[3.0]]
    assert g.db[0].tolist() == [1.0]
    assert g.dinput.tolist() == [2.5]


def test_relu_blocks_negative_preactivation():
    g = single([[1.0], [-1.0]], [0.0, 0.0], "relu").backward(np.array([2.0]), np.array([1.0, 1.0]))
    assert g.dW[0][1, 0] == 0.0 and g.db[0][1] == 0.0
    assert g.dW[0][0, 0] == 2.0


@pytest.mark.parametrize("seed", range(10))
def test_gradient_check(seed):
    net = random_net(seed)
    rng = SplitMix64(1000 + seed)
    x, up = rng.uniform(-1.0, 1.0, 6), rng.normal(4)
    assert max_gradient_error(net, x, up, net.backward(x, up)) <= 1e-5


def test_batch_gradients_are_row_sums():
    net = random_net(3, (4, 8, 2), "linear")
    rng = SplitMix64(4)
    X, U = rng.normal((5, 4)), rng.normal((5, 2))
    gb = net.backward(X, U)
    parts = [net.backward(X[i], U[i]) for i in range(5)]
    assert np.allclose(gb.dW[0], sum(p.dW[0] for p in parts))
    assert np.allclose(gb.dinput, np.array([p.dinput for p in parts]))


def test_forward_is_pure():
    net = random_net(1)
    before = net.flat.copy()
    x = np.linspace(-1, 1, 6)
    a, b = net.forward(x), net.forward(x)
    net.backward(x, np.ones(4))
    assert np.array_equal(a, b) and np.array_equal(net.flat, before)


@settings(max_examples=100, deadline=None)
@given(x=st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6), seed=st.integers(0, 100))
def test_sigmoid_output_strictly_inside_unit_interval(x, seed):
    net = random_net(seed)
    net.layers[-1].W *= 1e3
    y = net.forward(np.array(x))
    assert np.all(y > 0.0) and np.all(y < 1.0)


def test_adam_zero_gradient_keeps_parameters():
    net = random_net(2)
    before = net.flat.copy()
    opt = Adam(net)
    opt.step(net, [np.zeros_like(p) for p in net.parameters()])
    assert np.array_equal(net.flat, before)


def _quadratic_net(w0):
    return single([[w0]], [0.0], "linear")


def test_adam_single_step_descends():
    net = _quadratic_net(1.0)
    Adam(net).step(net, [np.array([[1.0]]), np.array([0.0])])
    assert abs(net.layers[0].W[0, 0]) < 1.0


def test_adam_quadratic_matches_oracle(frozen):
    ref = frozen["adam_quadratic"]
    net = _quadratic_net(1.0)
    opt = Adam(net, lr=ref["lr"])
    for _ in range(ref["steps"]):
        w = net.layers[0].W[0, 0]
        opt.step(net, [np.array([[w]]), np.array([0.0])])
    w = net.layers[0].W[0, 0]
    assert abs(w) < 1e-3
    assert w == pytest.approx(ref["w"], rel=1e-9, abs=1e-300)


def test_adam_rejects_wrong_shapes():
    net = random_net(0)
    with pytest.raises(ShapeMismatch):
        Adam(net).step(net, [np.zeros(3)])


def test_soft_update_examples():
    t, o = _quadratic_net(0.0), _quadratic_net(1.0)
    soft_update(t, o, 0.001)
    assert t.layers[0].W[0, 0] == pytest.approx(0.001, abs=1e-15)
    soft_update(t, o, 1.0)
    assert np.array_equal(t.flat, o.flat)
    before = t.flat.copy()
    soft_update(t, random_net(0, (1, 1), "linear"), 0.0)
    assert np.array_equal(t.flat, before)


def test_soft_update_geometric_decay():
    target, online = random_net(5), random_net(6)
    gap0 = online.flat - target.flat
    tau, n = 0.01, 300
    for _ in range(n):
        soft_update(target, online, tau)
    assert np.allclose(online.flat - target.flat, (1 - tau) ** n * gap0, rtol=1e-9, atol=1e-15)


def test_soft_update_architecture_mismatch():
    with pytest.raises(ArchitectureMismatch):
        soft_update(random_net(0), random_net(0, (6, 16, 4)), 0.5)


def test_checkpoint_round_trip(tmp_path):
    net = random_net(9)
    path = tmp_path / "net.ckpt"
    save_checkpoint(net, path)
    text = path.read_text()
    assert text.startswith("quadftc-dense 1\nlayers 3\nlayer 6 32 relu\n")
    back = load_checkpoint(path)
    assert back.architecture() == net.architecture()
    assert np.array_equal(back.flat, net.flat)
    save_checkpoint(back, tmp_path / "again.ckpt")
    assert (tmp_path / "again.ckpt").read_text() == text


@pytest.mark.parametrize("mutate", [
    lambda t: t.replace("quadftc-dense 1", "quadftc-dense 2"),
    lambda t: "\n".join(t.splitlines()[:-1]) + "\n",
    lambda t: t.replace("layer 6 32 relu", "layer 6 31 relu"),
    lambda t: t.replace("relu", "tanh", 1),
    lambda t: "",
])
def test_checkpoint_corruption_detected(tmp_path, mutate):
    path = tmp_path / "net.ckpt"
    save_checkpoint(random_net(9), path)
    path.write_text(mutate(path.read_text()))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
