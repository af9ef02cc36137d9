"""Per-feature standardization for the gradient-trained models.

Trees are scale-invariant and skip this; the linear-SGD and MLP fits
condition their inputs with statistics from the training split only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

__all__ = ["Standardizer"]

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stddevs: np.ndarray  # floored at STD_FLOOR so constant columns map to 0

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise DataError("standardizer needs a non-empty 2-D matrix")
        return cls(means=X.mean(axis=0), stddevs=np.maximum(X.std(axis=0), STD_FLOOR))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = (X - self.means) / self.stddevs
        if not np.all(np.isfinite(out)):
            raise DataError("non-finite values after standardization")
        return out

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stddevs": self.stddevs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(means=np.asarray(d["means"], float), stddevs=np.asarray(d["stddevs"], float))
