"""Linear models: closed-form least squares and subgradient descent on
the pinball/MAE objectives (the quantile LP formulation is deliberately
not implemented; it does not scale to this data size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TrainingError
from ..seeding import substream
from .losses import LossMode, optimal_constant

__all__ = ["LinearParams", "fit_linear_ols", "fit_linear_sgd", "linear_predict"]

RIDGE_JITTER = 1e-9


@dataclass
class LinearParams:
    coef: np.ndarray
    intercept: float

    def to_dict(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearParams":
        return cls(coef=np.asarray(d["coef"], dtype=float), intercept=float(d["intercept"]))


def fit_linear_ols(X: np.ndarray, y: np.ndarray) -> LinearParams:
    """Ordinary least squares by normal equations with intercept.

    A tiny ridge jitter is added once if the Gram matrix is singular;
    irreparable rank deficiency raises TrainingError naming the columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    A = np.column_stack([np.ones(n), X])
    gram = A.T @ A
    rhs = A.T @ y
    if np.linalg.matrix_rank(gram) < d + 1:
        gram = gram + RIDGE_JITTER * np.eye(d + 1)
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        beta = np.full(d + 1, np.nan)
    if not np.all(np.isfinite(beta)):
        _, r = np.linalg.qr(A)
        bad = [i - 1 for i in range(1, min(r.shape[0], d + 1)) if abs(r[i, i]) < 1e-10]
        raise TrainingError(f"design matrix rank-deficient in columns {bad}")
    return LinearParams(coef=beta[1:], intercept=float(beta[0]))


def _subgradient(loss: LossMode, y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """d(loss)/d(y_hat); the pinball kink takes the (1 - tau) branch."""
    if loss.kind == "quantile":
        return np.where(y > y_hat, -loss.tau, 1.0 - loss.tau)
    if loss.kind == "mae":
        return np.where(y > y_hat, -1.0, np.where(y < y_hat, 1.0, 0.0))
    raise ConfigError("SGD linear training covers quantile and mae losses; use OLS for mse")


def fit_linear_sgd(
    X: np.ndarray,
    y: np.ndarray,
    loss: LossMode,
    epochs: int = 200,
    lr: float = 0.5,
    batch_size: int = 32,
    seed: int = 0,
) -> LinearParams:
    """Minimize the mean loss by mini-batch subgradient steps.

    Expects standardized features. The step size decays as
    lr / sqrt(1 + epoch); the intercept starts at the loss-optimal
    constant and the slopes at zero, so epochs=0 returns exactly that
    initial model.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")
    w = np.zeros(d)
    b = optimal_constant(loss, y)
    rng = substream(seed, "linear-sgd")
    for epoch in range(epochs):
        step = lr / np.sqrt(1.0 + epoch)
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            rows = order[lo : lo + batch_size]
            y_hat = X[rows] @ w + b
            g = _subgradient(loss, y[rows], y_hat)
            w -= step * (X[rows].T @ g) / rows.size
            b -= step * float(g.mean())
        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise TrainingError(f"SGD diverged; last stable epoch {epoch - 1}")
    return LinearParams(coef=w, intercept=float(b))


def linear_predict(params: LinearParams, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return X @ params.coef + params.intercept
