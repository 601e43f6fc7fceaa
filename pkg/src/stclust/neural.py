"""Dense layers, losses, optimizers and backpropagation for the trainable models.

Everything is plain numpy. Default parameter dtype is float32; pass
dtype=np.float64 when building a network for finite-difference verification.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_ACTIVATIONS = ("relu", "linear")


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


@dataclass
class NetworkSpec:
    """Layer sizes plus per-layer activations (ReLU hidden, linear last by default)."""

    layer_sizes: list[int]
    activations: list[str] | None = None
    tied_decoder: bool = False

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output size")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        n_layers = len(self.layer_sizes) - 1
        if self.activations is None:
            self.activations = ["relu"] * (n_layers - 1) + ["linear"]
        if len(self.activations) != n_layers:
            raise ValueError(f"{len(self.activations)} activations for {n_layers} layers")
        for a in self.activations:
            if a not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")


@dataclass
class DenseLayer:
    W: np.ndarray  # [in, out]
    b: np.ndarray  # [out]
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ValueError(f"inconsistent layer shapes W{self.W.shape} b{self.b.shape}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValueError("layer parameters must be finite")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def init_network(spec: NetworkSpec, rng: np.random.Generator, dtype=np.float32) -> list[DenseLayer]:
    layers = []
    for i, act in enumerate(spec.activations):
        fan_in, fan_out = spec.layer_sizes[i], spec.layer_sizes[i + 1]
        layers.append(DenseLayer(W=glorot_uniform(rng, fan_in, fan_out, dtype),
                                 b=np.zeros(fan_out, dtype=dtype),
                                 activation=act))
    return layers


def apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return z


def forward(layers: list[DenseLayer], X: np.ndarray) -> list[np.ndarray]:
    """Run the network; returns [X, h1, ..., output]."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"input must be 2-D, got shape {X.shape}")
    if X.shape[1] != layers[0].W.shape[0]:
        raise ValueError(f"input width {X.shape[1]} != first layer fan-in {layers[0].W.shape[0]}")
    acts = [X]
    h = X
    for layer in layers:
        h = apply_activation(h @ layer.W + layer.b, layer.activation)
        acts.append(h)
    return acts


def backward(layers: list[DenseLayer], activations: list[np.ndarray],
             out_grad: np.ndarray) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Backpropagate out_grad (dL/d output) through the layers.

    Returns ([(dW, db) per layer], dL/dX). Activations must come from a
    matching forward() call.
    """
    if len(activations) != len(layers) + 1:
        raise ValueError(f"activation cache has {len(activations)} entries for {len(layers)} layers")
    for layer, a_in, a_out in zip(layers, activations, activations[1:]):
        if a_in.shape[1] != layer.W.shape[0] or a_out.shape[1] != layer.W.shape[1]:
            raise ValueError("activation cache is stale for these layers")
    if out_grad.shape != activations[-1].shape:
        raise ValueError(f"out_grad shape {out_grad.shape} != output shape {activations[-1].shape}")

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    delta = out_grad
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.activation == "relu":
            delta = delta * (activations[i + 1] > 0)
        dW = activations[i].T @ delta
        db = delta.sum(axis=0)
        grads[i] = (dW, db)
        delta = delta @ layer.W.T
    return grads, delta


def mse_loss(X: np.ndarray, Xhat: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries; gradient is with respect to Xhat."""
    if X.shape != Xhat.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Xhat.shape}")
    diff = Xhat - X
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad


def network_parameters(layers) -> list[np.ndarray]:
    """Flat parameter list [W0, b0, W1, b1, ...]; GCN layers contribute only W."""
    params = []
    for layer in layers:
        params.append(layer.W)
        if hasattr(layer, "b"):
            params.append(layer.b)
    return params


class SgdMomentum:
    """v <- mu*v - lr*g; w <- w + v."""

    def __init__(self, learning_rate: float, momentum: float = 0.0):
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        self.learning_rate = learning_rate
        self.momentum = momentum
        self._velocity: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        _check_grads(params, grads)
        if self._velocity is None:
            self._velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self._velocity):
            v *= self.momentum
            v -= self.learning_rate * g.astype(p.dtype, copy=False)
            p += v


class Adam:
    """Bias-corrected Adam."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        _check_grads(params, grads)
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            g = g.astype(p.dtype, copy=False)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + self.epsilon)


def _check_grads(params, grads):
    if len(params) != len(grads):
        raise ValueError(f"{len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient; aborting optimizer step")


def make_optimizer(kind: str, learning_rate: float, momentum: float = 0.9):
    if kind == "sgd_momentum":
        return SgdMomentum(learning_rate, momentum)
    if kind == "adam":
        return Adam(learning_rate)
    raise ValueError(f"unknown optimizer {kind!r}")


# ---------------------------------------------------------------------------
# Checkpoint container (STCE-style binary, versioned, round-trip exact)
# ---------------------------------------------------------------------------

_CKPT_MAGIC = b"STCK"
_CKPT_VERSION = 1
_ACT_CODE = {"linear": 0, "relu": 1}
_ACT_NAME = {v: k for k, v in _ACT_CODE.items()}
_DTYPE_CODE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_DTYPE_NAME = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def _write_tensor(f, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    code = _DTYPE_CODE[np.dtype(arr.dtype)]
    f.write(struct.pack("<BB", code, arr.ndim))
    for s in arr.shape:
        f.write(struct.pack("<Q", s))
    f.write(arr.astype(_DTYPE_NAME[code], copy=False).tobytes())


def _read_tensor(f) -> np.ndarray:
    code, ndim = struct.unpack("<BB", f.read(2))
    shape = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(ndim))
    dtype = _DTYPE_NAME[code]
    count = int(np.prod(shape)) if shape else 1
    buf = f.read(dtype.itemsize * count)
    if len(buf) != dtype.itemsize * count:
        raise StckFormatError("checkpoint truncated inside a tensor")
    return np.frombuffer(buf, dtype=dtype).reshape(shape).copy()


class StckFormatError(ValueError):
    """Malformed checkpoint file."""


def save_checkpoint(path, sections: dict[str, list]) -> None:
    """Persist named layer stacks (DenseLayer or any layer with W/activation)."""
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<I", _CKPT_VERSION))
        f.write(struct.pack("<I", len(sections)))
        for name, layers in sections.items():
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", len(layers)))
            for layer in layers:
                has_bias = 1 if hasattr(layer, "b") else 0
                f.write(struct.pack("<BB", _ACT_CODE[layer.activation], has_bias))
                _write_tensor(f, layer.W)
                if has_bias:
                    _write_tensor(f, layer.b)


def load_checkpoint(path, layer_factory=None) -> dict[str, list]:
    """Load sections saved by save_checkpoint.

    layer_factory(W, b_or_None, activation) builds each layer; by default
    builds DenseLayer when a bias is present and a bare namespace otherwise.
    """
    from types import SimpleNamespace

    def default_factory(W, b, activation):
        if b is not None:
            return DenseLayer(W=W, b=b, activation=activation)
        return SimpleNamespace(W=W, activation=activation)

    factory = layer_factory or default_factory
    sections: dict[str, list] = {}
    with open(path, "rb") as f:
        if f.read(4) != _CKPT_MAGIC:
            raise StckFormatError("bad checkpoint magic")
        version, = struct.unpack("<I", f.read(4))
        if version != _CKPT_VERSION:
            raise StckFormatError(f"unsupported checkpoint version {version}")
        n_sections, = struct.unpack("<I", f.read(4))
        for _ in range(n_sections):
            name_len, = struct.unpack("<I", f.read(4))
            name = f.read(name_len).decode("utf-8")
            n_layers, = struct.unpack("<I", f.read(4))
            layers = []
            for _ in range(n_layers):
                act_code, has_bias = struct.unpack("<BB", f.read(2))
                W = _read_tensor(f)
                b = _read_tensor(f) if has_bias else None
                layers.append(factory(W, b, _ACT_NAME[act_code]))
            sections[name] = layers
    return sections
