"""Leave-one-round-out evaluation in achievable goodput, permutation
feature importance, Pearson correlation, and the feature-count /
training-size sweeps.

Folds can run in parallel worker processes; every random choice is keyed
to (master seed, fold, ...) so results are identical at any worker count
and fold execution order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, TrainingError
from .goodput import TbsTable, best_static_mcs, mean_goodput, oracle_goodput
from .models import LossMode, fit_model, predict
from .seeding import spawn_seed, substream

__all__ = [
    "CvFold",
    "ModelConfig",
    "EvalReport",
    "logo_folds",
    "evaluate_model",
    "permutation_importance",
    "pearson_correlation",
    "feature_count_sweep",
    "training_size_sweep",
    "curves_to_csv",
]


@dataclass(frozen=True)
class CvFold:
    test_round: int
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass(frozen=True)
class ModelConfig:
    """Algorithm + loss + hyperparameters; 'oracle' and 'constant' are
    evaluation-only predictors used as baselines and test probes."""

    algorithm: str
    loss: LossMode
    hyperparams: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            algorithm=d["algorithm"],
            loss=LossMode.from_dict(d.get("loss", {"kind": "mse"})),
            hyperparams=dict(d.get("hyperparams", {})),
        )

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "loss": self.loss.to_dict(),
            "hyperparams": self.hyperparams,
        }


@dataclass
class EvalReport:
    algorithm: str
    loss: dict
    per_fold: list[tuple[int, float]]
    aggregate_bps: float
    oracle_bps: float
    oracle_bps_decodable_only: float
    best_static: tuple[int, float]
    n_samples: int
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "loss": self.loss,
            "per_fold": [{"round_id": r, "mean_goodput_bps": g} for r, g in self.per_fold],
            "aggregate_bps": self.aggregate_bps,
            "oracle_bps": self.oracle_bps,
            "oracle_bps_decodable_only": self.oracle_bps_decodable_only,
            "best_static_mcs": self.best_static[0],
            "best_static_bps": self.best_static[1],
            "n_samples": self.n_samples,
            **self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def logo_folds(ds: Dataset) -> list[CvFold]:
    """One fold per round, ordered by round id."""
    rounds = ds.rounds
    if len(rounds) < 2:
        raise ConfigError("leave-one-round-out needs at least 2 rounds")
    folds = []
    for r in rounds:
        test = np.flatnonzero(ds.round_id == r)
        train = np.flatnonzero(ds.round_id != r)
        folds.append(CvFold(test_round=r, train_indices=train, test_indices=test))
    return folds


def _fold_predictions(ds: Dataset, config: ModelConfig, fold: CvFold, seed: int) -> np.ndarray:
    """Fit on the fold's training rows only and predict its test rows."""
    X_test = ds.X[fold.test_indices]
    y_test = ds.y[fold.test_indices]
    if config.algorithm == "oracle":
        return y_test.astype(float)
    if config.algorithm == "constant":
        return np.full(len(y_test), float(config.hyperparams["mcs"]))
    fold_seed = int(spawn_seed(seed, "fold", fold.test_round).generate_state(1)[0])
    model = fit_model(
        ds.X[fold.train_indices],
        ds.y[fold.train_indices].astype(float),
        config.algorithm,
        config.loss,
        config.hyperparams,
        seed=fold_seed,
    )
    return predict(model, X_test)


def _score_fold(args) -> tuple[int, float]:
    ds, config, fold, seed, table = args
    try:
        preds = _fold_predictions(ds, config, fold, seed)
    except Exception as exc:
        raise TrainingError(f"fold round={fold.test_round} failed: {exc}") from exc
    return fold.test_round, mean_goodput(preds, ds.y[fold.test_indices], table)


def _map_folds(work, threads: int):
    if threads > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_score_fold, work))
    return [_score_fold(w) for w in work]


def evaluate_model(
    ds: Dataset, config: ModelConfig, table: TbsTable, seed: int = 0, threads: int = 1
) -> EvalReport:
    """LOGO-CV goodput of one model config, with dataset-level baselines."""
    folds = logo_folds(ds)
    work = [(ds, config, fold, seed, table) for fold in folds]
    per_fold = _map_folds(work, threads)
    aggregate = float(np.mean([g for _, g in per_fold]))
    decodable = ds.y[ds.y >= 0]
    return EvalReport(
        algorithm=config.algorithm,
        loss=config.loss.to_dict(),
        per_fold=per_fold,
        aggregate_bps=aggregate,
        oracle_bps=oracle_goodput(ds.y, table),
        oracle_bps_decodable_only=(
            oracle_goodput(decodable, table) if decodable.size else 0.0
        ),
        best_static=best_static_mcs(ds.y, table),
        n_samples=len(ds),
    )


def pearson_correlation(ds: Dataset) -> list[tuple[str, float | None]]:
    """Pearson r between each feature column and the target MCS.

    Zero-variance columns report None instead of crashing.
    """
    y = ds.y.astype(float)
    y_c = y - y.mean()
    sy = np.sqrt((y_c * y_c).sum())
    out: list[tuple[str, float | None]] = []
    for j, name in enumerate(ds.feature_names):
        x = ds.X[:, j]
        x_c = x - x.mean()
        sx = np.sqrt((x_c * x_c).sum())
        if sx == 0.0 or sy == 0.0:
            out.append((name, None))
        else:
            out.append((name, float((x_c * y_c).sum() / (sx * sy))))
    return out


def permutation_importance(
    ds: Dataset,
    config: ModelConfig,
    table: TbsTable,
    n_repeats: int = 5,
    seed: int = 0,
    permute_fn=None,
) -> list[tuple[str, float]]:
    """Mean goodput drop when one feature's test values are shuffled.

    Shuffles touch the test split only; the model is fit once per fold.
    `permute_fn(rng, n) -> index array` is injectable for tests (identity
    permutation must give a drop of exactly 0).
    """
    if n_repeats < 1:
        raise ConfigError("n_repeats must be >= 1")
    if permute_fn is None:
        permute_fn = lambda rng, n: rng.permutation(n)
    if config.algorithm in ("oracle", "constant"):
        raise ConfigError("permutation importance needs a fitted model, not a probe predictor")
    folds = logo_folds(ds)
    d = len(ds.feature_names)
    deltas = np.zeros(d)
    for fold in folds:
        fold_seed = int(spawn_seed(seed, "fold", fold.test_round).generate_state(1)[0])
        model = fit_model(
            ds.X[fold.train_indices],
            ds.y[fold.train_indices].astype(float),
            config.algorithm,
            config.loss,
            config.hyperparams,
            seed=fold_seed,
        )
        X_test = ds.X[fold.test_indices]
        y_test = ds.y[fold.test_indices]
        base = mean_goodput(predict(model, X_test), y_test, table)
        for j in range(d):
            for r in range(n_repeats):
                rng = substream(seed, "perm", fold.test_round, j, r)
                perm = permute_fn(rng, len(y_test))
                Xp = X_test.copy()
                Xp[:, j] = Xp[perm, j]
                deltas[j] += base - mean_goodput(predict(model, Xp), y_test, table)
    deltas /= len(folds) * n_repeats
    ranked = sorted(zip(ds.feature_names, deltas), key=lambda kv: -kv[1])
    return [(name, float(delta)) for name, delta in ranked]


def feature_count_sweep(
    ds: Dataset,
    configs: dict[str, ModelConfig],
    importance_order: list[str],
    table: TbsTable,
    seed: int = 0,
    threads: int = 1,
) -> list[dict]:
    """Goodput of each algorithm restricted to the top-N features, N=1..d."""
    if sorted(importance_order) != sorted(ds.feature_names):
        raise ConfigError("importance_order must cover every dataset feature exactly once")
    rows = []
    for n in range(1, len(importance_order) + 1):
        sub = ds.select_features(importance_order[:n])
        for name, config in configs.items():
            report = evaluate_model(sub, config, table, seed=seed, threads=threads)
            fold_vals = np.array([g for _, g in report.per_fold])
            rows.append(
                {
                    "x": n,
                    "series": name,
                    "mean": report.aggregate_bps,
                    "sdom": float(fold_vals.std(ddof=1) / np.sqrt(fold_vals.size))
                    if fold_vals.size > 1
                    else 0.0,
                }
            )
    return rows


def training_size_sweep(
    ds: Dataset,
    configs: dict[str, ModelConfig],
    sizes: list[int],
    table: TbsTable,
    seed: int = 0,
    n_repeats: int = 5,
    threads: int = 1,
) -> list[dict]:
    """Goodput vs. training-set size, subsampled per fold without
    replacement; spread is the standard deviation of the mean over
    folds x repeats."""
    folds = logo_folds(ds)
    min_train = min(f.train_indices.size for f in folds)
    bad = [s for s in sizes if not 1 <= s <= min_train]
    if bad:
        raise ConfigError(f"sizes {bad} exceed the smallest fold train size {min_train}")
    rows = []
    for s in sorted(sizes):
        for name, config in configs.items():
            scores = []
            for fold in folds:
                for r in range(n_repeats):
                    rng = substream(seed, "train-size", s, fold.test_round, r)
                    pick = np.sort(rng.choice(fold.train_indices, size=s, replace=False))
                    shrunk = CvFold(
                        test_round=fold.test_round,
                        train_indices=pick,
                        test_indices=fold.test_indices,
                    )
                    _, g = _score_fold((ds, config, shrunk, seed, table))
                    scores.append(g)
            scores = np.asarray(scores)
            rows.append(
                {
                    "x": s,
                    "series": name,
                    "mean": float(scores.mean()),
                    "sdom": float(scores.std(ddof=1) / np.sqrt(scores.size))
                    if scores.size > 1
                    else 0.0,
                }
            )
    return rows


def curves_to_csv(rows: list[dict]) -> str:
    """Render sweep rows as the plot-ready `x,series,mean,sdom` CSV."""
    lines = ["x,series,mean,sdom"]
    for row in rows:
        lines.append(f"{row['x']},{row['series']},{row['mean']!r},{row['sdom']!r}")
    return "\n".join(lines) + "\n"
