"""A small feedforward classifier: dense ReLU layers, softmax cross-entropy.

Written directly in numpy so the gradient flowing back to the feature layer
is explicit and testable against finite differences. Optimization is plain
SGD with momentum; the learning-rate schedule lives in
:class:`TrainSchedule`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of the classifier head.

    ``input_dim`` must equal the flattened feature size of the attached
    bank (num_sets * 2**set_size, set-major order).
    """

    input_dim: int
    hidden_layers: tuple[int, ...]
    num_classes: int
    weight_init_seed: int
    activation: str = "relu"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if any(h < 1 for h in self.hidden_layers):
            raise ValueError(f"hidden layer widths must be >= 1, got {self.hidden_layers}")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")


@dataclass(frozen=True)
class TrainSchedule:
    """Optimizer schedule: initial rate, a single drop, momentum, batching."""

    lr_initial: float = 1e-3
    lr_reduced: float = 1e-4
    switch_epoch: int = 50
    total_epochs: int = 100
    momentum: float = 0.9
    batch_size: int = 32
    validation_fraction: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 < self.lr_reduced <= self.lr_initial:
            raise ValueError(
                f"need 0 < lr_reduced <= lr_initial, got {self.lr_reduced}, {self.lr_initial}"
            )
        if self.total_epochs > 0 and not 0 < self.switch_epoch < self.total_epochs:
            raise ValueError(
                f"need 0 < switch_epoch < total_epochs, got {self.switch_epoch}, {self.total_epochs}"
            )
        if self.total_epochs < 0:
            raise ValueError(f"total_epochs must be >= 0, got {self.total_epochs}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )

    def learning_rate(self, epoch: int) -> float:
        """Rate for a 0-based epoch: initial before the switch, reduced after."""
        return self.lr_initial if epoch < self.switch_epoch else self.lr_reduced


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class FeedforwardClassifier:
    """Dense ReLU network with a softmax output, trained by backprop.

    ``forward_batch`` caches the activations that ``backward_batch``
    consumes; calling backward without a preceding forward is an error.
    """

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.weight_init_seed)
        dims = [spec.input_dim, *spec.hidden_layers, spec.num_classes]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            scale = math.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._cache: "tuple[np.ndarray, list[np.ndarray], np.ndarray] | None" = None

    @property
    def num_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "FeedforwardClassifier":
        clone = FeedforwardClassifier.__new__(FeedforwardClassifier)
        clone.spec = self.spec
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        clone._cache = None
        return clone

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities for a batch, shape (batch, num_classes)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.spec.input_dim:
            raise ValueError(
                f"input dimension {x.shape[1]} does not match network input {self.spec.input_dim}"
            )
        hidden: list[np.ndarray] = [x]
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
            hidden.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        probs = softmax(logits)
        self._cache = (x, hidden, probs)
        return probs

    def forward(self, features: np.ndarray) -> np.ndarray:
        """Probabilities for a single flattened feature vector."""
        return self.forward_batch(features.reshape(1, -1))[0]

    def loss(self, probs: np.ndarray, labels: np.ndarray) -> float:
        """Mean cross-entropy of a batch of probability rows."""
        p_true = probs[np.arange(len(labels)), labels]
        return float(-np.mean(np.log(np.maximum(p_true, 1e-300))))

    def backward_batch(
        self, labels: np.ndarray
    ) -> "tuple[list[np.ndarray], list[np.ndarray], np.ndarray]":
        """Gradients of the mean cross-entropy from the cached forward pass.

        Returns per-layer weight and bias gradients plus the gradient with
        respect to the input features, shape (batch, input_dim). The input
        gradient is what the feature layer's range update consumes.
        """
        if self._cache is None:
            raise RuntimeError("backward_batch called before forward_batch")
        x, hidden, probs = self._cache
        labels = np.asarray(labels)
        batch = x.shape[0]
        if labels.shape != (batch,):
            raise ValueError(f"labels shape {labels.shape} does not match batch {batch}")

        delta = probs.copy()
        delta[np.arange(batch), labels] -= 1.0
        delta /= batch

        grads_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            a_in = hidden[layer]
            grads_w[layer] = a_in.T @ delta
            grads_b[layer] = delta.sum(axis=0)
            delta = delta @ self.weights[layer].T
            if layer > 0:
                delta = delta * (hidden[layer] > 0.0)
        return grads_w, grads_b, delta


class MomentumSGD:
    """Classic momentum update: v = m*v - lr*g; param += v."""

    def __init__(self, network: FeedforwardClassifier, momentum: float):
        self.momentum = momentum
        self.v_weights = [np.zeros_like(w) for w in network.weights]
        self.v_biases = [np.zeros_like(b) for b in network.biases]

    def step(
        self,
        network: FeedforwardClassifier,
        grads_w: list[np.ndarray],
        grads_b: list[np.ndarray],
        lr: float,
    ) -> None:
        for i in range(len(network.weights)):
            self.v_weights[i] = self.momentum * self.v_weights[i] - lr * grads_w[i]
            self.v_biases[i] = self.momentum * self.v_biases[i] - lr * grads_b[i]
            network.weights[i] += self.v_weights[i]
            network.biases[i] += self.v_biases[i]
