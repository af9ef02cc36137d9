"""Feed-forward network with a single linear output, trained by Adam.

Hidden layers share one activation (relu/tanh/sigmoid). The objective is
the selected loss plus L1/L2 penalties on the weights (biases are not
penalized). An empty hidden-layer list degenerates to a linear model.
Batch order is drawn from a seeded stream, so a fixed seed reproduces
the fit exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TrainingError
from ..seeding import substream
from .losses import LossMode, loss_value

__all__ = ["AdamConfig", "MlpParams", "fit_mlp", "mlp_predict", "loss_and_gradients"]

ACTIVATIONS = ("relu", "tanh", "sigmoid")


@dataclass(frozen=True)
class AdamConfig:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class MlpParams:
    weights: list[np.ndarray]  # (fan_in, fan_out) per layer
    biases: list[np.ndarray]
    activation: str = "relu"

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpParams":
        return cls(
            weights=[np.asarray(w, dtype=float) for w in d["weights"]],
            biases=[np.asarray(b, dtype=float) for b in d["biases"]],
            activation=d["activation"],
        )


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


def _output_grad(loss: LossMode, y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """d(mean data loss)/d(y_hat); pinball kink takes the (1 - tau) branch."""
    n = y.size
    if loss.kind == "quantile":
        return np.where(y > y_hat, -loss.tau, 1.0 - loss.tau) / n
    if loss.kind == "mse":
        return 2.0 * (y_hat - y) / n
    return np.where(y > y_hat, -1.0, np.where(y < y_hat, 1.0, 0.0)) / n


def _forward(params: MlpParams, X: np.ndarray):
    zs, acts = [], [X]
    a = X
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        zs.append(z)
        a = z if i == last else _act(params.activation, z)
        acts.append(a)
    return acts[-1][:, 0], zs, acts


def loss_and_gradients(
    params: MlpParams,
    X: np.ndarray,
    y: np.ndarray,
    loss: LossMode,
    l1: float = 0.0,
    l2: float = 0.0,
):
    """Objective value and gradients for every weight/bias array.

    The objective is mean data loss + l1 * sum|W| + l2 * sum W^2.
    """
    y_hat, zs, acts = _forward(params, X)
    value = loss_value(loss, y, y_hat)
    value += sum(l1 * np.abs(w).sum() + l2 * (w * w).sum() for w in params.weights)

    delta = _output_grad(loss, y, y_hat)[:, None]
    grads_w, grads_b = [], []
    for i in range(len(params.weights) - 1, -1, -1):
        gw = acts[i].T @ delta
        gb = delta.sum(axis=0)
        gw += l1 * np.sign(params.weights[i]) + 2.0 * l2 * params.weights[i]
        grads_w.append(gw)
        grads_b.append(gb)
        if i > 0:
            delta = delta @ params.weights[i].T
            delta *= _act_grad(params.activation, zs[i - 1], acts[i])
    grads_w.reverse()
    grads_b.reverse()
    return value, grads_w, grads_b


def _init_params(widths: list[int], d: int, activation: str, rng) -> MlpParams:
    sizes = [d, *widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        if activation == "relu":
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases, activation=activation)


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    loss: LossMode,
    layers: list[int] | None = None,
    activation: str = "relu",
    l1: float = 0.0,
    l2: float = 0.0,
    adam: AdamConfig = AdamConfig(),
    epochs: int = 100,
    batch_size: int = 64,
    seed: int = 0,
) -> MlpParams:
    """Train on standardized features; deterministic for a fixed seed."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    layers = list(layers or [])
    if activation not in ACTIVATIONS:
        raise ConfigError(f"activation must be one of {ACTIVATIONS}")
    if any(w < 1 for w in layers):
        raise ConfigError("hidden layer widths must be >= 1")
    n, d = X.shape
    rng = substream(seed, "mlp")
    params = _init_params(layers, d, activation, rng)

    m_w = [np.zeros_like(w) for w in params.weights]
    v_w = [np.zeros_like(w) for w in params.weights]
    m_b = [np.zeros_like(b) for b in params.biases]
    v_b = [np.zeros_like(b) for b in params.biases]
    t = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            rows = order[lo : lo + batch_size]
            value, gw, gb = loss_and_gradients(params, X[rows], y[rows], loss, l1, l2)
            if not np.isfinite(value):
                raise TrainingError(f"MLP loss became non-finite; last stable epoch {epoch - 1}")
            t += 1
            corr1 = 1.0 - adam.beta1**t
            corr2 = 1.0 - adam.beta2**t
            for i in range(len(params.weights)):
                m_w[i] = adam.beta1 * m_w[i] + (1.0 - adam.beta1) * gw[i]
                v_w[i] = adam.beta2 * v_w[i] + (1.0 - adam.beta2) * gw[i] ** 2
                params.weights[i] -= adam.alpha * (m_w[i] / corr1) / (np.sqrt(v_w[i] / corr2) + adam.eps)
                m_b[i] = adam.beta1 * m_b[i] + (1.0 - adam.beta1) * gb[i]
                v_b[i] = adam.beta2 * v_b[i] + (1.0 - adam.beta2) * gb[i] ** 2
                params.biases[i] -= adam.alpha * (m_b[i] / corr1) / (np.sqrt(v_b[i] / corr2) + adam.eps)
    return params


def mlp_predict(params: MlpParams, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y_hat, _, _ = _forward(params, X)
    return y_hat
