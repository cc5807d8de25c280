"""Frozen random hidden layer and the ten indexed activation functions.

Random streams
--------------
Layers are reproducible from a single integer seed. Weights come from
``PCG64(SeedSequence(seed, spawn_key=(0,)))`` drawn uniform on [-1, 1],
biases from ``PCG64(SeedSequence(seed, spawn_key=(1,)))`` uniform on
[0, 1]. Both are drawn in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import DimensionMismatch, InvalidArgument

SELU_SCALE = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717
LEAKY_SLOPE = 0.01


class Activation(IntEnum):
    SELU = 1
    RELU = 2
    SIGMOID = 3
    SIN = 4
    HARDLIM = 5
    TRIBAS = 6
    RADBAS = 7
    SGN = 8
    LEAKY_RELU = 9
    TANSIG = 10


def _selu(x):
    return SELU_SCALE * np.where(x > 0, x, SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))


def _sigmoid(x):
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


_FUNCS = {
    Activation.SELU: _selu,
    Activation.RELU: lambda x: np.maximum(x, 0.0),
    Activation.SIGMOID: _sigmoid,
    Activation.SIN: np.sin,
    Activation.HARDLIM: lambda x: (x >= 0).astype(np.float64),
    Activation.TRIBAS: lambda x: np.maximum(0.0, 1.0 - np.abs(x)),
    Activation.RADBAS: lambda x: np.exp(-(x ** 2)),
    Activation.SGN: lambda x: np.sign(x),
    Activation.LEAKY_RELU: lambda x: np.where(x >= 0, x, LEAKY_SLOPE * x),
    Activation.TANSIG: np.tanh,
}


def apply_activation(activation, x) -> np.ndarray:
    """Elementwise activation on an array."""
    try:
        fn = _FUNCS[Activation(int(activation))]
    except ValueError:
        raise InvalidArgument(f"activation index must be 1..10, got {activation}") from None
    return fn(np.asarray(x, dtype=np.float64))


def activation_eval(activation, x: float) -> float:
    return float(apply_activation(activation, np.array([x], dtype=np.float64))[0])


@dataclass(frozen=True)
class RandomLayer:
    weights: np.ndarray  # P x g
    biases: np.ndarray   # g
    activation: Activation
    seed: int

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        b = np.array(self.biases, dtype=np.float64).reshape(-1)
        if W.ndim != 2 or W.shape[1] != b.size:
            raise DimensionMismatch(f"weights {W.shape} and biases {b.shape} disagree")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "activation", Activation(int(self.activation)))

    @classmethod
    def create(cls, n_inputs: int, n_hidden: int, activation=Activation.SIGMOID, seed: int = 0) -> "RandomLayer":
        if n_inputs < 1 or n_hidden < 1:
            raise InvalidArgument("layer dimensions must be positive")
        w_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))
        b_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1,))))
        W = w_rng.uniform(-1.0, 1.0, size=(n_inputs, n_hidden))
        b = b_rng.uniform(0.0, 1.0, size=n_hidden)
        return cls(W, b, activation, seed)

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[1]

    def project(self, inputs) -> np.ndarray:
        return project(self, inputs)

    def to_dict(self) -> dict:
        return {
            "n_inputs": self.n_inputs,
            "n_hidden": self.n_hidden,
            "activation": int(self.activation),
            "seed": self.seed,
            "weights": self.weights.ravel().tolist(),
            "biases": self.biases.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomLayer":
        W = np.asarray(d["weights"], dtype=np.float64).reshape(d["n_inputs"], d["n_hidden"])
        return cls(W, np.asarray(d["biases"], dtype=np.float64), d["activation"], d["seed"])


def project(layer: RandomLayer, inputs) -> np.ndarray:
    """Hidden features ``act(inputs @ W + b)``, shape n x g."""
    V = np.asarray(inputs, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] != layer.n_inputs:
        raise DimensionMismatch(f"layer expects {layer.n_inputs} input columns, got shape {V.shape}")
    return apply_activation(layer.activation, V @ layer.weights + layer.biases)
