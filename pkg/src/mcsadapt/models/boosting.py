"""Gradient-boosted trees with pinball, MSE, or MAE objectives.

Stage 0 is the loss-optimal constant. Each round fits a variance-split
tree to the negative gradients, then replaces every leaf value with the
loss-optimal constant of the residuals in that leaf (required for the
non-smooth losses to make real progress), scaled by the learning rate.
At the pinball kink the gradient takes the +tau branch (y >= y_hat).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..seeding import substream
from .losses import LossMode, optimal_constant
from .tree import Tree, apply_tree, build_tree

__all__ = ["GbtParams", "fit_gbt", "gbt_predict"]


@dataclass
class GbtParams:
    base: float
    trees: list[Tree]
    leaf_deltas: list[np.ndarray]  # per tree, learning-rate-scaled leaf constants

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "trees": [t.to_dict() for t in self.trees],
            "leaf_deltas": [d.tolist() for d in self.leaf_deltas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtParams":
        return cls(
            base=float(d["base"]),
            trees=[Tree.from_dict(t) for t in d["trees"]],
            leaf_deltas=[np.asarray(v, dtype=float) for v in d["leaf_deltas"]],
        )


def _negative_gradient(loss: LossMode, y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    if loss.kind == "quantile":
        return np.where(y >= y_hat, loss.tau, -(1.0 - loss.tau))
    if loss.kind == "mse":
        return y - y_hat
    return np.sign(y - y_hat)


def fit_gbt(
    X: np.ndarray,
    y: np.ndarray,
    loss: LossMode,
    n_rounds: int = 100,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    min_leaf: int = 5,
    subsample: float = 1.0,
    seed: int = 0,
) -> GbtParams:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n_rounds < 0:
        raise ConfigError("n_rounds must be >= 0")
    if not 0.0 < subsample <= 1.0:
        raise ConfigError("subsample must lie in (0, 1]")
    if not 0.0 < learning_rate <= 1.0:
        raise ConfigError("learning_rate must lie in (0, 1]")
    if n == 0:
        raise DataError("cannot boost on an empty dataset")

    base = optimal_constant(loss, y)
    current = np.full(n, base)
    trees: list[Tree] = []
    leaf_deltas: list[np.ndarray] = []
    n_sub = max(1, int(round(subsample * n)))
    for r in range(n_rounds):
        if subsample < 1.0:
            rng = substream(seed, "gbt-round", r)
            rows = np.sort(rng.choice(n, size=n_sub, replace=False))
        else:
            rows = np.arange(n)
        grad = _negative_gradient(loss, y[rows], current[rows])
        tree = build_tree(X[rows], grad, max_depth=max_depth, min_leaf=min_leaf)
        residual = y[rows] - current[rows]
        deltas = np.array(
            [
                learning_rate * optimal_constant(loss, residual[leaf])
                for leaf in tree.leaf_rows
            ]
        )
        current += deltas[apply_tree(tree, X)]
        trees.append(tree)
        leaf_deltas.append(deltas)
    return GbtParams(base=base, trees=trees, leaf_deltas=leaf_deltas)


def gbt_predict(model: GbtParams, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(X.shape[0], model.base)
    for tree, deltas in zip(model.trees, model.leaf_deltas):
        out += deltas[apply_tree(tree, X)]
    return out
