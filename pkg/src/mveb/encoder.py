"""Small MLP encoder with sphere-normalized output and manual reverse mode.

The model is a stack of affine layers with ReLU between them, followed by a
row-wise unit normalization z = u / |u|. The normalization backward uses the
Jacobian (I - z z^T) / |u|, which annihilates radial upstream components —
this is the load-bearing piece for pushing score vectors back into parameter
space.

A momentum-updated target copy (EMA) and a classical-momentum SGD step live
here too, plus a versioned binary checkpoint format:

    line 1: b"MVEBENC1\\n"
    line 2: one JSON object {"dims": [...], "activations": [...]}
    body:   all weights then biases per layer, row-major little-endian float64
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Layer",
    "EncoderModel",
    "ForwardCache",
    "GradientTape",
    "SgdOptimizer",
    "TargetBranch",
    "ema_momentum",
    "ema_update",
    "save_model",
    "load_model",
]

RELU = "relu"
LINEAR = "linear"

_CKPT_MAGIC = b"MVEBENC1\n"


@dataclass
class Layer:
    weight: np.ndarray  # (in, out)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in (RELU, LINEAR):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ValueError("layer weight/bias shapes are inconsistent")


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each affine layer
    pre_acts: list[np.ndarray]  # affine outputs before the nonlinearity
    pre_norm: np.ndarray  # final layer output u
    norms: np.ndarray  # |u| per row
    outputs: np.ndarray  # z = u / |u|


@dataclass
class GradientTape:
    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]

    def add_(self, other: "GradientTape") -> "GradientTape":
        for i in range(len(self.weight_grads)):
            self.weight_grads[i] += other.weight_grads[i]
            self.bias_grads[i] += other.bias_grads[i]
        return self


class EncoderModel:
    """Affine/ReLU stack ending in an affine layer and unit normalization."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("need at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.weight.shape[1] != b.weight.shape[0]:
                raise ValueError("consecutive layer shapes do not chain")
        self.layers = layers

    @classmethod
    def init(cls, dims: tuple[int, ...], rng: np.random.Generator) -> "EncoderModel":
        """He-initialized stack: dims = (input, hidden..., output)."""
        if len(dims) < 2:
            raise ValueError("dims must list at least input and output sizes")
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
            last = i == len(dims) - 2
            scale = math.sqrt(1.0 / fan_in) if last else math.sqrt(2.0 / fan_in)
            W = rng.standard_normal((fan_in, fan_out)) * scale
            layers.append(Layer(weight=W, bias=np.zeros(fan_out), activation=LINEAR if last else RELU))
        return cls(layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    def copy(self) -> "EncoderModel":
        return EncoderModel(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )

    def forward(self, V) -> tuple[np.ndarray, ForwardCache]:
        """Embed a batch of inputs; caches everything backward needs."""
        h = np.asarray(V, dtype=float)
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise ValueError(f"expected (M, {self.input_dim}) inputs, got shape {h.shape}")
        inputs, pre_acts = [], []
        for layer in self.layers:
            inputs.append(h)
            u = h @ layer.weight + layer.bias
            pre_acts.append(u)
            h = np.maximum(u, 0.0) if layer.activation == RELU else u
        norms = np.linalg.norm(h, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("pre-normalization output has a zero-norm row")
        z = h / norms[:, None]
        return z, ForwardCache(inputs=inputs, pre_acts=pre_acts, pre_norm=h, norms=norms, outputs=z)

    def backward(self, cache: ForwardCache, upstream) -> GradientTape:
        """Accumulate dL/dparams from dL/dz. Requires the matching forward cache."""
        g = np.asarray(upstream, dtype=float)
        if g.shape != cache.outputs.shape:
            raise ValueError(f"upstream shape {g.shape} != output shape {cache.outputs.shape}")
        z, r = cache.outputs, cache.norms
        # through z = u / |u|: du = (g - (g.z) z) / |u|
        dh = (g - np.sum(g * z, axis=1, keepdims=True) * z) / r[:, None]
        weight_grads = [None] * len(self.layers)
        bias_grads = [None] * len(self.layers)
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            du = dh * (cache.pre_acts[i] > 0) if layer.activation == RELU else dh
            weight_grads[i] = cache.inputs[i].T @ du
            bias_grads[i] = du.sum(axis=0)
            dh = du @ layer.weight.T
        return GradientTape(weight_grads=weight_grads, bias_grads=bias_grads)

    def zero_tape(self) -> GradientTape:
        return GradientTape(
            weight_grads=[np.zeros_like(l.weight) for l in self.layers],
            bias_grads=[np.zeros_like(l.bias) for l in self.layers],
        )


class SgdOptimizer:
    """Classical momentum SGD: v <- mu v + (g + wd * p); p <- p - lr v."""

    def __init__(self, lr: float, momentum: float = 0.0, weight_decay: float = 0.0):
        if lr < 0:
            raise ValueError(f"lr must be nonnegative, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {momentum}")
        if weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self._vel: list[tuple[np.ndarray, np.ndarray]] | None = None

    def step(self, model: EncoderModel, tape: GradientTape) -> None:
        if self._vel is None:
            self._vel = [
                (np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in model.layers
            ]
        for layer, (vw, vb), dw, db in zip(
            model.layers, self._vel, tape.weight_grads, tape.bias_grads
        ):
            if dw.shape != layer.weight.shape or db.shape != layer.bias.shape:
                raise ValueError("tape shapes do not match the model")
            vw *= self.momentum
            vw += dw + self.weight_decay * layer.weight
            vb *= self.momentum
            vb += db + self.weight_decay * layer.bias
            layer.weight -= self.lr * vw
            layer.bias -= self.lr * vb


CONSTANT = "constant"
COSINE_INCREASE = "cosine_increase"


@dataclass
class TargetBranch:
    """EMA copy of the online encoder; never receives optimizer gradients."""

    model: EncoderModel
    momentum: float
    schedule: str = COSINE_INCREASE

    def __post_init__(self):
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError(f"momentum must be in [0, 1], got {self.momentum}")
        if self.schedule not in (CONSTANT, COSINE_INCREASE):
            raise ValueError(f"unknown schedule {self.schedule!r}")


def ema_momentum(step: int, total_steps: int, base: float, schedule: str = COSINE_INCREASE) -> float:
    """m(step) = 1 - (1 - base) * (cos(pi step / total) + 1) / 2, rising to 1."""
    if step > total_steps:
        raise ValueError(f"step {step} exceeds total_steps {total_steps}")
    if step < 0 or total_steps < 1:
        raise ValueError("step must be in [0, total_steps], total_steps >= 1")
    if schedule == CONSTANT:
        return base
    if schedule != COSINE_INCREASE:
        raise ValueError(f"unknown schedule {schedule!r}")
    return 1.0 - (1.0 - base) * (math.cos(math.pi * step / total_steps) + 1.0) / 2.0


def ema_update(target: TargetBranch, online: EncoderModel, step: int, total_steps: int) -> float:
    """target <- m * target + (1 - m) * online, elementwise; returns m used."""
    if len(target.model.layers) != len(online.layers):
        raise ValueError("target and online models do not match")
    m = ema_momentum(step, total_steps, target.momentum, target.schedule)
    for t, o in zip(target.model.layers, online.layers):
        if t.weight.shape != o.weight.shape:
            raise ValueError("target and online layer shapes do not match")
        # t + (1-m)(o - t) == m t + (1-m) o, but an exact no-op when t == o
        t.weight += (1.0 - m) * (o.weight - t.weight)
        t.bias += (1.0 - m) * (o.bias - t.bias)
    return m


def save_model(model: EncoderModel, path) -> None:
    """Write the checkpoint format documented in the module docstring."""
    meta = {
        "dims": [model.layers[0].weight.shape[0]] + [l.weight.shape[1] for l in model.layers],
        "activations": [l.activation for l in model.layers],
    }
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write((json.dumps(meta) + "\n").encode("ascii"))
        for layer in model.layers:
            f.write(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def load_model(path) -> EncoderModel:
    with open(path, "rb") as f:
        magic = f.readline()
        if magic != _CKPT_MAGIC:
            raise ValueError(f"not an encoder checkpoint (bad magic {magic!r})")
        meta = json.loads(f.readline().decode("ascii"))
        dims = meta["dims"]
        layers = []
        for i, act in enumerate(meta["activations"]):
            fan_in, fan_out = dims[i], dims[i + 1]
            w = np.frombuffer(f.read(8 * fan_in * fan_out), dtype="<f8").reshape(fan_in, fan_out)
            b = np.frombuffer(f.read(8 * fan_out), dtype="<f8")
            layers.append(Layer(weight=w.astype(float), bias=b.astype(float), activation=act))
        if f.read(1):
            raise ValueError("trailing bytes after checkpoint body")
    return EncoderModel(layers)
