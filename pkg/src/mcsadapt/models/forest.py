"""Quantile regression forest: bagged variance-split trees whose leaves
keep every training target, so any conditional quantile can be read off
the pooled weighted distribution at prediction time.

Each tree weighs 1/n_trees, spread uniformly over the targets in the
leaf the query lands in (Meinshausen weighting). Per-tree RNG streams
come from the master seed, so the fit does not depend on thread count
or tree build order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..seeding import spawn_seed
from .losses import weighted_quantile
from .tree import Tree, apply_tree, build_tree

__all__ = ["QrfParams", "fit_qrf", "qrf_predict", "qrf_predict_mean"]

# leaves hold few distinct target values in this domain (MCS grid), so a
# dense value histogram is the fast path; fall back to per-row pooling
# when the target really is continuous
DENSE_VALUE_LIMIT = 4096


@dataclass
class QrfParams:
    trees: list[Tree]
    leaf_values: list[list[np.ndarray]]  # per tree, per leaf ordinal, sorted targets

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "leaf_values": [[v.tolist() for v in per_tree] for per_tree in self.leaf_values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QrfParams":
        return cls(
            trees=[Tree.from_dict(t) for t in d["trees"]],
            leaf_values=[
                [np.asarray(v, dtype=float) for v in per_tree] for per_tree in d["leaf_values"]
            ],
        )


def fit_qrf(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 100,
    max_depth: int = 12,
    min_leaf: int = 5,
    mtry: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> QrfParams:
    """Grow the forest; leaves store the (bootstrap) targets that fell in."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < min_leaf:
        raise DataError(f"need at least min_leaf={min_leaf} samples, got {n}")
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    if mtry is not None and mtry > d:
        raise ConfigError(f"mtry={mtry} exceeds feature count {d}")
    children = spawn_seed(seed, "qrf").spawn(n_trees)
    trees, leaf_values = [], []
    for t in range(n_trees):
        rng = np.random.Generator(np.random.PCG64(children[t]))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        Xt, yt = X[rows], y[rows]
        tree = build_tree(Xt, yt, max_depth=max_depth, min_leaf=min_leaf, mtry=mtry, rng=rng)
        trees.append(tree)
        leaf_values.append([np.sort(yt[leaf]) for leaf in tree.leaf_rows])
    return QrfParams(trees=trees, leaf_values=leaf_values)


def _pooled_histograms(model: QrfParams, X: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """(n_rows, len(grid)) pooled per-value weights across all trees."""
    n_trees = len(model.trees)
    pooled = np.zeros((X.shape[0], grid.size))
    for tree, values in zip(model.trees, model.leaf_values):
        sizes = np.array([v.size for v in values], dtype=float)
        hist = np.zeros((len(values), grid.size))
        leaf_of_value = np.concatenate(
            [np.full(v.size, j, dtype=np.int64) for j, v in enumerate(values)]
        )
        flat = np.concatenate(values)
        w = 1.0 / (n_trees * sizes[leaf_of_value])
        np.add.at(hist, (leaf_of_value, np.searchsorted(grid, flat)), w)
        pooled += hist[apply_tree(tree, X)]
    return pooled


def qrf_predict(model: QrfParams, X: np.ndarray, tau: float) -> np.ndarray:
    """Conditional tau-quantile for each row of X."""
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    grid = np.unique(np.concatenate([v for per_tree in model.leaf_values for v in per_tree]))
    if grid.size <= DENSE_VALUE_LIMIT:
        pooled = _pooled_histograms(model, X, grid)
        cdf = np.cumsum(pooled, axis=1)
        k = (cdf >= tau * cdf[:, -1:]).argmax(axis=1)
        return grid[k]
    # continuous-target fallback: pool leaf values row by row
    leaf_ids = [apply_tree(tree, X) for tree in model.trees]
    n_trees = len(model.trees)
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        vals = [model.leaf_values[t][leaf_ids[t][i]] for t in range(n_trees)]
        weights = [np.full(v.size, 1.0 / (n_trees * v.size)) for v in vals]
        out[i] = weighted_quantile(np.concatenate(vals), np.concatenate(weights), tau)
    return out


def qrf_predict_mean(model: QrfParams, X: np.ndarray) -> np.ndarray:
    """Classic bagged mean (used for the MSE loss mode)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros(X.shape[0])
    for tree, values in zip(model.trees, model.leaf_values):
        means = np.array([v.mean() for v in values])
        out += means[apply_tree(tree, X)]
    return out / len(model.trees)
