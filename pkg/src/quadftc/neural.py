"""Dense feed-forward networks with backpropagation and Adam.

Inputs may be a single vector of shape ``(n_in,)`` or a batch of row
vectors ``(batch, n_in)``; gradients for a batch are summed over rows.

Checkpoint layout (plain text, UTF-8, ``\\n`` line endings)::

    quadftc-dense 1
    layers <L>
    layer <n_in> <n_out> <activation>
    W <n_out*n_in floats, row-major>
    b <n_out floats>
    ... (one layer/W/b triple per layer)

Floats are written with ``repr`` so a save/load round trip is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .errors import ArchitectureMismatch, ShapeMismatch

CHECKPOINT_MAGIC = "quadftc-dense"
CHECKPOINT_VERSION = 1

# Largest double below 1 and smallest normal above 0, so sigmoid stays open.
_SIG_HI = float(np.nextafter(1.0, 0.0))
_SIG_LO = float(np.finfo(np.float64).tiny)


class Activation(str, Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    LINEAR = "linear"


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(y, _SIG_LO, _SIG_HI)


def _activate(z: np.ndarray, act: Activation) -> np.ndarray:
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    if act is Activation.SIGMOID:
        return _sigmoid(z)
    return z


def _activation_grad(z: np.ndarray, y: np.ndarray, act: Activation) -> np.ndarray:
    """Derivative of the activation at pre-activation ``z`` (output ``y``)."""
    if act is Activation.RELU:
        return (z > 0.0).astype(np.float64)
    if act is Activation.SIGMOID:
        return y * (1.0 - y)
    return np.ones_like(z)


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: Activation

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


@dataclass
class Gradients:
    """Per-layer parameter gradients plus the gradient w.r.t. the input."""

    dW: List[np.ndarray]
    db: List[np.ndarray]
    dinput: np.ndarray


class DenseNetwork:
    def __init__(self, layers: Sequence[DenseLayer]):
        if not layers:
            raise ShapeMismatch("network needs at least one layer")
        for a, b in zip(layers[:-1], layers[1:]):
            if a.n_out != b.n_in:
                raise ShapeMismatch(f"layer sizes do not chain: {a.n_out} -> {b.n_in}")
        for layer in layers:
            if layer.b.shape != (layer.n_out,):
                raise ShapeMismatch("bias length must equal layer output size")
        # All parameters live in one flat buffer; layer arrays are views into it.
        total = sum(l.W.size + l.b.size for l in layers)
        self.flat = np.empty(total, dtype=np.float64)
        self.layers = []
        k = 0
        for l in layers:
            W = self.flat[k:k + l.W.size].reshape(l.W.shape)
            W[...] = l.W
            k += l.W.size
            b = self.flat[k:k + l.b.size]
            b[...] = l.b
            k += l.b.size
            self.layers.append(DenseLayer(W, b, Activation(l.activation)))

    @classmethod
    def initialized(
        cls,
        sizes: Sequence[int],
        activations: Sequence[Activation | str],
        rng,
        final_scale: float = 1.0,
    ) -> "DenseNetwork":
        """Uniform(+/-1/sqrt(fan_in)) weights and biases.

        ``rng`` needs a ``uniform(low, high, size)`` method. The last layer's
        parameters are multiplied by ``final_scale``.
        """
        if len(activations) != len(sizes) - 1:
            raise ShapeMismatch("need one activation per layer")
        layers = []
        for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            lim = 1.0 / np.sqrt(n_in)
            W = np.asarray(rng.uniform(-lim, lim, (n_out, n_in)), dtype=np.float64)
            b = np.asarray(rng.uniform(-lim, lim, (n_out,)), dtype=np.float64)
            if k == len(sizes) - 2:
                W *= final_scale
                b *= final_scale
            layers.append(DenseLayer(W, b, Activation(activations[k])))
        return cls(layers)

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    @property
    def sizes(self) -> List[int]:
        return [self.n_in] + [layer.n_out for layer in self.layers]

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[-1] != self.n_in:
            raise ShapeMismatch(f"expected input with last dim {self.n_in}, got shape {x.shape}")
        return x

    def forward(self, x) -> np.ndarray:
        a = self._check_input(x)
        for layer in self.layers:
            a = _activate(a @ layer.W.T + layer.b, layer.activation)
        return a

    __call__ = forward

    def forward_cached(self, x):
        """Forward pass that also returns the intermediates ``backward`` needs."""
        a = self._check_input(x)
        single = a.ndim == 1
        if single:
            a = a[None, :]
        inputs, pre, outs = [], [], []
        for layer in self.layers:
            inputs.append(a)
            z = a @ layer.W.T + layer.b
            a = _activate(z, layer.activation)
            pre.append(z)
            outs.append(a)
        return (a[0] if single else a), (single, inputs, pre, outs)

    def backward(self, x, upstream, cache=None) -> Gradients:
        """Gradients of ``sum(upstream * forward(x))``.

        ``cache`` from ``forward_cached(x)`` skips recomputing the forward pass.
        """
        x = self._check_input(x)
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape[-1] != self.n_out or upstream.ndim != x.ndim:
            raise ShapeMismatch(
                f"upstream shape {upstream.shape} does not match output dim {self.n_out}"
            )
        if cache is None:
            cache = self.forward_cached(x)[1]
        single, inputs, pre, outs = cache
        g = upstream[None, :] if single else upstream

        dW: List[np.ndarray] = [None] * len(self.layers)  # type: ignore[list-item]
        db: List[np.ndarray] = [None] * len(self.layers)  # type: ignore[list-item]
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            dz = g * _activation_grad(pre[k], outs[k], layer.activation)
            dW[k] = dz.T @ inputs[k]
            db[k] = dz.sum(axis=0)
            g = dz @ layer.W
        return Gradients(dW, db, g[0] if single else g)

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays (views) in the order W0, b0, W1, b1, ..."""
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def architecture(self) -> tuple:
        return tuple((l.n_in, l.n_out, l.activation.value) for l in self.layers)

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(
            [DenseLayer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers]
        )


def flat_gradients(grads: Gradients) -> List[np.ndarray]:
    out = []
    for dw, db in zip(grads.dW, grads.db):
        out.extend((dw, db))
    return out


def flatten_gradients(grads: Gradients | Sequence[np.ndarray]) -> np.ndarray:
    """Gradients concatenated in the layout of ``DenseNetwork.flat``."""
    gs = flat_gradients(grads) if isinstance(grads, Gradients) else list(grads)
    return np.concatenate([np.ravel(g) for g in gs])


class Adam:
    """Bias-corrected adaptive-moment optimizer bound to one network."""

    def __init__(self, net: DenseNetwork, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros_like(net.flat)
        self.v = np.zeros_like(net.flat)

    def step(self, net: DenseNetwork, grads: Gradients | Sequence[np.ndarray]) -> DenseNetwork:
        """Descend along ``grads`` (gradients of a loss to minimize), in place."""
        if isinstance(grads, Gradients):
            shapes_ok = all(dw.shape == l.W.shape and db.shape == l.b.shape
                            for dw, db, l in zip(grads.dW, grads.db, net.layers))
            shapes_ok = shapes_ok and len(grads.dW) == len(net.layers)
        else:
            params = net.parameters()
            shapes_ok = len(grads) == len(params) and all(
                np.shape(g) == p.shape for g, p in zip(grads, params))
        if not shapes_ok:
            raise ShapeMismatch("gradient shapes do not match network parameters")
        g = flatten_gradients(grads)
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * g
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (g * g)
        net.flat -= self.lr * (self.m / c1) / (np.sqrt(self.v / c2) + self.eps)
        return net


def soft_update(target: DenseNetwork, online: DenseNetwork, tau: float) -> DenseNetwork:
    """Move ``target`` toward ``online``: p <- tau*online + (1-tau)*p, in place."""
    if target.architecture() != online.architecture():
        raise ArchitectureMismatch("target and online networks differ in shape")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if tau == 1.0:
        target.flat[...] = online.flat
    else:
        target.flat *= 1.0 - tau
        target.flat += tau * online.flat
    return target


def save_checkpoint(net: DenseNetwork, path) -> None:
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}", f"layers {len(net.layers)}"]
    for layer in net.layers:
        lines.append(f"layer {layer.n_in} {layer.n_out} {layer.activation.value}")
        lines.append("W " + " ".join(repr(float(x)) for x in layer.W.ravel()))
        lines.append("b " + " ".join(repr(float(x)) for x in layer.b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class CheckpointError(ValueError):
    pass


def load_checkpoint(path) -> DenseNetwork:
    text = Path(path).read_text(encoding="utf-8").split("\n")
    lines = [ln for ln in text if ln.strip()]
    try:
        magic, version = lines[0].split()
        if magic != CHECKPOINT_MAGIC or int(version) != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint header {lines[0]!r}")
        tag, count = lines[1].split()
        if tag != "layers":
            raise CheckpointError("missing layer count")
        n_layers = int(count)
        if len(lines) != 2 + 3 * n_layers:
            raise CheckpointError("checkpoint truncated or has trailing data")
        layers = []
        for k in range(n_layers):
            head, wline, bline = lines[2 + 3 * k: 5 + 3 * k]
            tag, n_in, n_out, act = head.split()
            n_in, n_out = int(n_in), int(n_out)
            wvals = wline.split()
            bvals = bline.split()
            if tag != "layer" or wvals[0] != "W" or bvals[0] != "b":
                raise CheckpointError(f"malformed layer block {k}")
            W = np.array([float(x) for x in wvals[1:]], dtype=np.float64)
            b = np.array([float(x) for x in bvals[1:]], dtype=np.float64)
            if W.size != n_in * n_out or b.size != n_out:
                raise CheckpointError(f"layer {k} parameter count mismatch")
            layers.append(DenseLayer(W.reshape(n_out, n_in), b, Activation(act)))
    except (IndexError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"cannot parse checkpoint {path}: {exc}") from exc
    return DenseNetwork(layers)
