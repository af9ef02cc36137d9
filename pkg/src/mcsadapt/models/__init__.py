"""Uniform fit/predict interface over the regressor family.

Algorithms: "linear" (OLS for mse, subgradient descent for quantile/mae),
"qrf", "gbt", "mlp". Extra names can be registered, which the evaluation
tests use to inject probes. Every fit returns a TrainedModel that can be
serialized to a self-describing JSON artifact and reloaded bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import ConfigError, DataError
from .boosting import GbtParams, fit_gbt, gbt_predict
from .forest import QrfParams, fit_qrf, qrf_predict, qrf_predict_mean
from .linear import LinearParams, fit_linear_ols, fit_linear_sgd, linear_predict
from .losses import LossMode, loss_value, optimal_constant, pinball_loss, weighted_quantile
from .mlp import AdamConfig, MlpParams, fit_mlp, loss_and_gradients, mlp_predict
from .standardize import Standardizer

__all__ = [
    "LossMode",
    "Standardizer",
    "TrainedModel",
    "fit_model",
    "predict",
    "save_model",
    "load_model",
    "register_algorithm",
    "pinball_loss",
    "weighted_quantile",
    "loss_value",
    "optimal_constant",
    "fit_linear_ols",
    "fit_linear_sgd",
    "fit_qrf",
    "qrf_predict",
    "fit_gbt",
    "fit_mlp",
    "loss_and_gradients",
    "AdamConfig",
    "ARTIFACT_VERSION",
]

ARTIFACT_VERSION = 1

_PARAM_CODECS = {
    "linear": LinearParams,
    "qrf": QrfParams,
    "gbt": GbtParams,
    "mlp": MlpParams,
}


@dataclass
class TrainedModel:
    """A fitted regressor plus everything needed to reproduce its output."""

    kind: str
    loss: LossMode
    n_features: int
    seed: int
    standardizer: Standardizer | None
    params: object
    hyperparams: dict

    def to_dict(self) -> dict:
        return {
            "version": ARTIFACT_VERSION,
            "kind": self.kind,
            "loss": self.loss.to_dict(),
            "n_features": self.n_features,
            "seed": self.seed,
            "standardization": self.standardizer.to_dict() if self.standardizer else None,
            "hyperparams": self.hyperparams,
            "params": self.params.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("version") != ARTIFACT_VERSION:
            raise DataError(f"unsupported model artifact version {d.get('version')!r}")
        kind = d["kind"]
        codec = _PARAM_CODECS.get(kind)
        if codec is None:
            raise DataError(f"unknown model kind {kind!r} in artifact")
        std = d.get("standardization")
        return cls(
            kind=kind,
            loss=LossMode.from_dict(d["loss"]),
            n_features=int(d["n_features"]),
            seed=int(d["seed"]),
            standardizer=Standardizer.from_dict(std) if std else None,
            params=codec.from_dict(d["params"]),
            hyperparams=dict(d.get("hyperparams", {})),
        )


def _fit_linear(X, y, loss, hp, seed):
    if loss.kind == "mse":
        return None, fit_linear_ols(X, y)
    std = Standardizer.fit(X)
    params = fit_linear_sgd(
        std.transform(X),
        y,
        loss,
        epochs=hp.get("epochs", 200),
        lr=hp.get("lr", 0.5),
        batch_size=hp.get("batch_size", 32),
        seed=seed,
    )
    return std, params


def _fit_qrf(X, y, loss, hp, seed):
    return None, fit_qrf(
        X,
        y,
        n_trees=hp.get("n_trees", 100),
        max_depth=hp.get("max_depth", 12),
        min_leaf=hp.get("min_leaf", 5),
        mtry=hp.get("mtry"),
        seed=seed,
        bootstrap=hp.get("bootstrap", True),
    )


def _fit_gbt(X, y, loss, hp, seed):
    return None, fit_gbt(
        X,
        y,
        loss,
        n_rounds=hp.get("n_rounds", 100),
        learning_rate=hp.get("learning_rate", 0.1),
        max_depth=hp.get("max_depth", 3),
        min_leaf=hp.get("min_leaf", 5),
        subsample=hp.get("subsample", 1.0),
        seed=seed,
    )


def _fit_mlp(X, y, loss, hp, seed):
    std = Standardizer.fit(X)
    adam = AdamConfig(
        alpha=hp.get("lr", 1e-3),
        beta1=hp.get("beta1", 0.9),
        beta2=hp.get("beta2", 0.999),
        eps=hp.get("eps", 1e-8),
    )
    params = fit_mlp(
        std.transform(X),
        y,
        loss,
        layers=hp.get("layers", [32, 32]),
        activation=hp.get("activation", "relu"),
        l1=hp.get("l1", 0.0),
        l2=hp.get("l2", 0.0),
        adam=adam,
        epochs=hp.get("epochs", 100),
        batch_size=hp.get("batch_size", 64),
        seed=seed,
    )
    return std, params


def _predict_qrf(model: TrainedModel, X) -> np.ndarray:
    if model.loss.kind == "quantile":
        return qrf_predict(model.params, X, model.loss.tau)
    if model.loss.kind == "mae":
        return qrf_predict(model.params, X, 0.5)
    return qrf_predict_mean(model.params, X)


_FITTERS: dict[str, Callable] = {
    "linear": _fit_linear,
    "qrf": _fit_qrf,
    "gbt": _fit_gbt,
    "mlp": _fit_mlp,
}

_PREDICTORS: dict[str, Callable] = {
    "linear": lambda m, X: linear_predict(m.params, X),
    "qrf": _predict_qrf,
    "gbt": lambda m, X: gbt_predict(m.params, X),
    "mlp": lambda m, X: mlp_predict(m.params, X),
}


def register_algorithm(name: str, fit: Callable, predict_fn: Callable) -> None:
    """Plug in an extra algorithm (used by tests to inject probes).

    `fit(X, y, loss, hyperparams, seed) -> (standardizer | None, params)`;
    `predict_fn(model, X) -> predictions`. The params object must expose
    to_dict() if the model is to be serialized.
    """
    _FITTERS[name] = fit
    _PREDICTORS[name] = predict_fn


def fit_model(X, y, algorithm: str, loss: LossMode, hyperparams: dict | None = None, seed: int = 0) -> TrainedModel:
    """Fit one algorithm under one loss mode."""
    fitter = _FITTERS.get(algorithm)
    if fitter is None:
        raise ConfigError(f"unknown algorithm {algorithm!r}; known: {sorted(_FITTERS)}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise DataError("fit_model needs X (n, d) aligned with y (n,)")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite training values")
    hp = dict(hyperparams or {})
    std, params = fitter(X, y, loss, hp, seed)
    return TrainedModel(
        kind=algorithm,
        loss=loss,
        n_features=X.shape[1],
        seed=seed,
        standardizer=std,
        params=params,
        hyperparams=hp,
    )


def predict(model: TrainedModel, X) -> np.ndarray:
    """Apply stored standardization, then model-specific inference."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, got {X.shape[1]}")
    if model.standardizer is not None:
        X = model.standardizer.transform(X)
    predictor = _PREDICTORS.get(model.kind)
    if predictor is None:
        raise ConfigError(f"no predictor registered for {model.kind!r}")
    return np.asarray(predictor(model, X), dtype=float)


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), sort_keys=True))


def load_model(path: str | Path) -> TrainedModel:
    return TrainedModel.from_dict(json.loads(Path(path).read_text()))
