"""Training objectives: pinball (quantile), MSE, and MAE, plus the
weighted empirical quantile they all lean on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError

__all__ = ["LossMode", "pinball_loss", "weighted_quantile", "loss_value", "optimal_constant"]

LOSS_KINDS = ("quantile", "mse", "mae")


@dataclass(frozen=True)
class LossMode:
    """Objective selector; tau only applies to the quantile kind."""

    kind: str
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.kind!r}")
        if self.kind == "quantile":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ConfigError(f"quantile loss needs tau in (0, 1), got {self.tau!r}")
        elif self.tau is not None:
            raise ConfigError(f"{self.kind} loss takes no tau")

    @classmethod
    def from_dict(cls, d: dict) -> "LossMode":
        return cls(kind=d["kind"], tau=d.get("tau"))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.tau is not None:
            out["tau"] = self.tau
        return out


def pinball_loss(y, y_hat, tau: float):
    """tau * (y - y_hat) where y >= y_hat, else (1 - tau) * (y_hat - y)."""
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    diff = y - y_hat
    out = np.where(diff >= 0.0, tau * diff, (tau - 1.0) * diff)
    return float(out) if out.ndim == 0 else out


def weighted_quantile(values, weights, tau: float) -> float:
    """Smallest value whose cumulative normalized weight reaches tau.

    Step-function inverse of the weighted empirical CDF; with uniform
    weights this is the 'lower' empirical quantile.
    """
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0 or values.shape != weights.shape:
        raise DataError("weighted_quantile needs matching, non-empty values/weights")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise DataError("weights must be non-negative with positive sum")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    k = int(np.searchsorted(cum / cum[-1], tau, side="left"))
    return float(values[order[min(k, values.size - 1)]])


def loss_value(loss: LossMode, y, y_hat) -> float:
    """Mean loss of predictions y_hat against targets y."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if loss.kind == "quantile":
        return float(np.mean(pinball_loss(y, y_hat, loss.tau)))
    if loss.kind == "mse":
        return float(np.mean((y - y_hat) ** 2))
    return float(np.mean(np.abs(y - y_hat)))


def optimal_constant(loss: LossMode, values) -> float:
    """The constant prediction minimizing the loss over `values`.

    quantile -> empirical tau-quantile, mse -> mean, mae -> lower median.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DataError("cannot fit a constant to no values")
    if loss.kind == "mse":
        return float(values.mean())
    tau = loss.tau if loss.kind == "quantile" else 0.5
    return weighted_quantile(values, np.ones_like(values), tau)
