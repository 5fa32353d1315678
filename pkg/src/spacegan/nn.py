"""A small double-precision network engine: dense, valid 1-D convolution, activations, SGD.

Tensors are plain ``float64`` numpy arrays with the batch on axis 0. A conv
layer reads ``(batch, length, channels)`` and writes
``(batch, length - kernel + 1, filters)``; a dense layer flattens every
non-batch axis of its input.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass

import numpy as np

from spacegan.errors import MissingCacheError, NumericFault, ShapeError

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")


def _check_finite(arr, where):
    if not np.all(np.isfinite(arr)):
        raise NumericFault(f"non-finite values produced by {where}")
    return arr


class Layer:
    kind = "layer"
    param_names: tuple[str, ...] = ()

    def __init__(self):
        self._cache = None

    def params(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in self.param_names]

    def config(self) -> dict:
        return {}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def _cached(self):
        if self._cache is None:
            raise MissingCacheError(f"{self.kind}: backward called before forward")
        return self._cache


class Dense(Layer):
    kind = "dense"
    param_names = ("weight", "bias")

    def __init__(self, in_features: int, out_features: int, rng=None):
        super().__init__()
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        rng = np.random.default_rng(rng)
        bound = 1.0 / np.sqrt(self.in_features)
        self.weight = rng.uniform(-bound, bound, size=(self.in_features, self.out_features))
        self.bias = rng.uniform(-bound, bound, size=self.out_features)

    def config(self):
        return {"in_features": self.in_features, "out_features": self.out_features}

    def forward(self, x):
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != self.in_features:
            raise ShapeError(f"dense expects {self.in_features} inputs, got {flat.shape[1]}")
        self._cache = (x.shape, flat)
        return flat @ self.weight + self.bias

    def backward(self, grad):
        in_shape, flat = self._cached()
        grads = [flat.T @ grad, grad.sum(axis=0)]
        return grads, (grad @ self.weight.T).reshape(in_shape)


class Conv1d(Layer):
    """Valid (unpadded, stride 1) convolution along axis 1."""

    kind = "conv1d"
    param_names = ("weight", "bias")

    def __init__(self, in_channels: int, filters: int, kernel_size: int, rng=None):
        super().__init__()
        self.in_channels = int(in_channels)
        self.filters = int(filters)
        self.kernel_size = int(kernel_size)
        rng = np.random.default_rng(rng)
        bound = 1.0 / np.sqrt(self.in_channels * self.kernel_size)
        self.weight = rng.uniform(-bound, bound, size=(self.kernel_size, self.in_channels, self.filters))
        self.bias = rng.uniform(-bound, bound, size=self.filters)

    def config(self):
        return {"in_channels": self.in_channels, "filters": self.filters, "kernel_size": self.kernel_size}

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ShapeError(f"conv1d expects (batch, length, {self.in_channels}), got {x.shape}")
        length = x.shape[1]
        if self.kernel_size > length:
            raise ShapeError(f"kernel size {self.kernel_size} exceeds sequence length {length}")
        out_len = length - self.kernel_size + 1
        if out_len == 1:
            # whole-sequence kernel: one matmul over the flattened window
            windows = x[:, None, :, :]
        else:
            # (batch, out_len, channels, kernel) -> (batch, out_len, kernel, channels)
            windows = np.lib.stride_tricks.sliding_window_view(x, self.kernel_size, axis=1)
            windows = windows.transpose(0, 1, 3, 2)
        self._cache = (x.shape, windows)
        flat = windows.reshape(x.shape[0], out_len, -1)
        return flat @ self.weight.reshape(-1, self.filters) + self.bias

    def backward(self, grad):
        in_shape, windows = self._cached()
        batch, out_len = grad.shape[0], grad.shape[1]
        flat = windows.reshape(batch * out_len, -1)
        g2 = grad.reshape(batch * out_len, self.filters)
        dw = (flat.T @ g2).reshape(self.weight.shape)
        db = g2.sum(axis=0)
        dwin = (g2 @ self.weight.reshape(-1, self.filters).T).reshape(batch, out_len, self.kernel_size, -1)
        dx = np.zeros(in_shape)
        for t in range(self.kernel_size):
            dx[:, t : t + out_len, :] += dwin[:, :, t, :]
        return [dw, db], dx


class Activation(Layer):
    kind = "activation"

    def __init__(self, name: str):
        super().__init__()
        if name not in ACTIVATIONS:
            raise ValueError(f"unknown activation {name!r}; choose from {ACTIVATIONS}")
        self.name = name

    def config(self):
        return {"name": self.name}

    def forward(self, x):
        if self.name == "relu":
            out = np.maximum(x, 0.0)
        elif self.name == "tanh":
            out = np.tanh(x)
        elif self.name == "sigmoid":
            out = np.empty_like(x)
            pos = x >= 0
            out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
            ex = np.exp(x[~pos])
            out[~pos] = ex / (1.0 + ex)
        else:
            out = x.copy()
        self._cache = (x, out)
        return out

    def backward(self, grad):
        x, out = self._cached()
        if self.name == "relu":
            dx = grad * (x > 0)
        elif self.name == "tanh":
            dx = grad * (1.0 - out**2)
        elif self.name == "sigmoid":
            dx = grad * out * (1.0 - out)
        else:
            dx = grad
        return [], dx


LAYER_TYPES = {"dense": Dense, "conv1d": Conv1d, "activation": Activation}


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    batch_size: int = 100

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class Network:
    """An ordered stack of layers with cached forward state."""

    def __init__(self, layers):
        self.layers = list(layers)

    def __repr__(self):
        inner = ", ".join(f"{layer.kind}({layer.config()})" for layer in self.layers)
        return f"Network([{inner}])"

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    @property
    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _check_finite(x, "network input")
        for layer in self.layers:
            x = _check_finite(layer.forward(x), layer.kind)
        return x

    def backward(self, loss_gradient):
        """Backpropagate ``d loss / d output``.

        Returns
        -------
        grads : list of ndarray
            Same order and shapes as :meth:`parameters`.
        input_grad : ndarray
            ``d loss / d input``.
        """
        grad = np.asarray(loss_gradient, dtype=float)
        per_layer = []
        for layer in reversed(self.layers):
            g, grad = layer.backward(grad)
            per_layer.append(g)
        grads = [g for gs in reversed(per_layer) for g in gs]
        return grads, grad

    def clone(self) -> "Network":
        twin = copy.deepcopy(self)
        for layer in twin.layers:
            layer._cache = None
        return twin

    def to_records(self) -> list[dict]:
        return [{"kind": layer.kind, "config": layer.config()} for layer in self.layers]


def forward(net: Network, x) -> np.ndarray:
    return net.forward(x)


def backward(net: Network, loss_gradient):
    return net.backward(loss_gradient)


def sgd_step(net: Network, gradients, config: SgdConfig, direction: str = "descend") -> Network:
    """In-place ``theta <- theta +/- lr * g``; returns ``net`` for chaining."""
    if direction not in ("ascend", "descend"):
        raise ValueError(f"direction must be 'ascend' or 'descend', got {direction!r}")
    params = net.parameters()
    if len(params) != len(gradients):
        raise ShapeError(f"expected {len(params)} gradients, got {len(gradients)}")
    for p, g in zip(params, gradients):
        if p.shape != np.shape(g):
            raise ShapeError(f"gradient shape {np.shape(g)} does not match parameter {p.shape}")
    sign = 1.0 if direction == "ascend" else -1.0
    for p, g in zip(params, gradients):
        p += sign * config.learning_rate * g
    return net


def clone_snapshot(net: Network) -> Network:
    return net.clone()


def build_network(records, rng=None) -> Network:
    """Construct a network from ``[{"kind": ..., "config": {...}}, ...]``."""
    rng = np.random.default_rng(rng)
    layers = []
    for rec in records:
        cls = LAYER_TYPES[rec["kind"]]
        if cls is Activation:
            layers.append(Activation(**rec["config"]))
        else:
            layers.append(cls(**rec["config"], rng=rng))
    return Network(layers)


def save_network(net: Network, path) -> None:
    """Checkpoint as CSV rows ``layer, kind, config, param, shape, values``.

    Values are row-major and written with ``repr`` so loading is exact.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "kind", "config", "param", "shape", "values"])
        for idx, layer in enumerate(net.layers):
            cfg = json.dumps(layer.config(), sort_keys=True)
            if not layer.param_names:
                writer.writerow([idx, layer.kind, cfg, "", "", ""])
            for name in layer.param_names:
                arr = getattr(layer, name)
                writer.writerow(
                    [
                        idx,
                        layer.kind,
                        cfg,
                        name,
                        "x".join(str(s) for s in arr.shape),
                        " ".join(repr(float(v)) for v in arr.ravel()),
                    ]
                )


def load_network(path) -> Network:
    layers: dict[int, Layer] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            idx = int(rec["layer"])
            if idx not in layers:
                cfg = json.loads(rec["config"])
                layers[idx] = build_network([{"kind": rec["kind"], "config": cfg}], rng=0).layers[0]
            if rec["param"]:
                shape = tuple(int(s) for s in rec["shape"].split("x"))
                values = np.array([float(v) for v in rec["values"].split()], dtype=float)
                setattr(layers[idx], rec["param"], values.reshape(shape))
    return Network([layers[i] for i in sorted(layers)])


def finite_difference_gradients(net: Network, x, loss_fn, h: float = 1e-5):
    """Central differences of ``loss_fn(net.forward(x))`` for every parameter and the input.

    Independent of :meth:`Network.backward`; used as the gradient oracle.
    """
    x = np.array(x, dtype=float)
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = p[ix]
            p[ix] = orig + h
            up = loss_fn(net.forward(x))
            p[ix] = orig - h
            down = loss_fn(net.forward(x))
            p[ix] = orig
            g[ix] = (up - down) / (2 * h)
        grads.append(g)
    gx = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        orig = x[ix]
        x[ix] = orig + h
        up = loss_fn(net.forward(x))
        x[ix] = orig - h
        down = loss_fn(net.forward(x))
        x[ix] = orig
        gx[ix] = (up - down) / (2 * h)
    return grads, gx
