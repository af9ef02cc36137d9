"""Regression tree grown on variance-reduction splits.

Shared by the quantile forest (which keeps every leaf's targets) and the
boosting rounds (which refit leaf constants). Split search is vectorized
per feature via prefix sums; ties resolve to the first candidate in scan
order so a fixed RNG yields a bit-identical tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

__all__ = ["Tree", "build_tree", "apply_tree"]

NO_FEATURE = -1


@dataclass
class Tree:
    """Flat node arrays; leaves carry an ordinal into per-leaf payloads."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    leaf_ordinal: list[int] = field(default_factory=list)
    leaf_rows: list[np.ndarray] = field(default_factory=list)  # training rows per leaf

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_rows)

    def _add_node(self) -> int:
        self.feature.append(NO_FEATURE)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_ordinal.append(-1)
        return len(self.feature) - 1

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "leaf_ordinal": self.leaf_ordinal,
            "leaf_rows": [r.tolist() for r in self.leaf_rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=list(d["feature"]),
            threshold=[float(t) for t in d["threshold"]],
            left=list(d["left"]),
            right=list(d["right"]),
            leaf_ordinal=list(d["leaf_ordinal"]),
            leaf_rows=[np.asarray(r, dtype=np.int64) for r in d["leaf_rows"]],
        )


def _best_split(X, y, rows, candidates, min_leaf):
    """(feature, threshold, left_rows, right_rows) or None.

    Minimizes SSE(left) + SSE(right) over all thresholds of the candidate
    features, skipping splits that would leave fewer than min_leaf rows
    on either side.
    """
    n = rows.size
    best = None
    best_score = np.inf
    for f in candidates:
        xs = X[rows, f]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        ys = y[rows][order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total_sum, total_sq = csum[-1], csq[-1]
        # candidate cut after position i: left = [0..i], right = [i+1..]
        i = np.arange(min_leaf - 1, n - min_leaf)
        if i.size == 0:
            continue
        distinct = xs_sorted[i + 1] > xs_sorted[i]
        if not distinct.any():
            continue
        i = i[distinct]
        n_l = (i + 1).astype(float)
        n_r = n - n_l
        sse_l = csq[i] - csum[i] ** 2 / n_l
        sse_r = (total_sq - csq[i]) - (total_sum - csum[i]) ** 2 / n_r
        score = sse_l + sse_r
        k = int(np.argmin(score))
        if score[k] < best_score - 1e-12:
            cut = int(i[k])
            thr = 0.5 * (float(xs_sorted[cut]) + float(xs_sorted[cut + 1]))
            best_score = float(score[k])
            best = (int(f), thr, rows[order[: cut + 1]], rows[order[cut + 1 :]])
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_leaf: int = 1,
    mtry: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a tree on rows 0..n-1 of (X, y).

    mtry, when set, samples that many candidate features per node from
    `rng`; None considers every feature (boosting mode).
    """
    n, d = X.shape
    if min_leaf < 1:
        raise ConfigError("min_leaf must be >= 1")
    if mtry is not None and not 1 <= mtry <= d:
        raise ConfigError(f"mtry must be in [1, {d}], got {mtry}")
    tree = Tree()

    def grow(rows: np.ndarray, depth: int) -> int:
        node = tree._add_node()
        split = None
        y_rows = y[rows]
        pure = y_rows.max() == y_rows.min()
        if depth < max_depth and rows.size >= 2 * min_leaf and not pure:
            if mtry is None or mtry == d:
                candidates = np.arange(d)
            else:
                candidates = np.sort(rng.choice(d, size=mtry, replace=False))
            split = _best_split(X, y, rows, candidates, min_leaf)
        if split is None:
            tree.leaf_ordinal[node] = len(tree.leaf_rows)
            tree.leaf_rows.append(rows)
            return node
        f, thr, rows_l, rows_r = split
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = grow(rows_l, depth + 1)
        tree.right[node] = grow(rows_r, depth + 1)
        return node

    grow(np.arange(n, dtype=np.int64), 0)
    return tree


def apply_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Leaf ordinal for every row of X (vectorized level-by-level routing)."""
    feature = np.asarray(tree.feature)
    threshold = np.asarray(tree.threshold)
    left = np.asarray(tree.left)
    right = np.asarray(tree.right)
    ordinal = np.asarray(tree.leaf_ordinal)
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        active = feature[node] != NO_FEATURE
        if not active.any():
            break
        idx = np.flatnonzero(active)
        cur = node[idx]
        go_left = X[idx, feature[cur]] <= threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
    return ordinal[node]
