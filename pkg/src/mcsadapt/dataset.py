"""Supervised dataset assembly: round labels, canonical feature ordering,
and the sweep-sample CSV format.

The CSV column order is fixed: feature columns first (canonical order
below, rx_gain omitted when the trace had none), then target_mcs,
round_id, area, sweep_start_ms. Floats are written with repr() so a
rerun over identical inputs is byte-identical and reads back exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, EmptyInputError
from .ingest import SweepSample

__all__ = ["FEATURE_ORDER", "Dataset", "split_rounds", "write_dataset_csv", "read_dataset_csv"]

FEATURE_ORDER = (
    "snr",
    "rx_power",
    "rssi",
    "rsrp",
    "noise_power",
    "rx_gain",
    "distance_m",
    "speed_tx",
    "speed_rx",
    "lat_tx",
    "lat_rx",
    "lon_tx",
    "lon_rx",
)

AREAS = ("avenue", "park", "highway", "residential", "tunnel", "unlabeled")


@dataclass
class Dataset:
    """Columnar sweep samples ready for training/evaluation."""

    feature_names: list[str]
    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int64, target MCS in [-1, 19]
    round_id: np.ndarray  # (n,) int64
    area: list[str]
    sweep_start_ms: np.ndarray  # (n,) int64
    gps_stale: np.ndarray = field(default=None)  # (n,) bool, in-memory only

    def __post_init__(self):
        if self.gps_stale is None:
            self.gps_stale = np.zeros(len(self.y), dtype=bool)
        if self.X.ndim != 2 or self.X.shape[0] != len(self.y):
            raise DataError("feature matrix / target shape mismatch")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError("feature matrix arity does not match feature_names")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def rounds(self) -> list[int]:
        return sorted(int(r) for r in np.unique(self.round_id))

    def select_features(self, names: list[str]) -> "Dataset":
        """Dataset restricted to the named feature columns (kept in order)."""
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise ConfigError(f"unknown features {missing}")
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(
            feature_names=list(names),
            X=self.X[:, cols].copy(),
            y=self.y,
            round_id=self.round_id,
            area=self.area,
            sweep_start_ms=self.sweep_start_ms,
            gps_stale=self.gps_stale,
        )

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return Dataset(
            feature_names=self.feature_names,
            X=self.X[idx],
            y=self.y[idx],
            round_id=self.round_id[idx],
            area=[self.area[i] for i in idx],
            sweep_start_ms=self.sweep_start_ms[idx],
            gps_stale=self.gps_stale[idx],
        )


def _feature_names_for(samples: list[SweepSample]) -> list[str]:
    present = set(samples[0].features)
    for s in samples[1:]:
        if set(s.features) != present:
            raise DataError("samples disagree on available features")
    return [f for f in FEATURE_ORDER if f in present]


def split_rounds(
    samples: list[SweepSample], boundaries: list[tuple[int, int]]
) -> tuple[Dataset, int]:
    """Assign round ids by half-open [start_ms, end_ms) ranges.

    Range index becomes the round id. Samples outside every range are
    dropped; the drop count is returned. Overlapping ranges are rejected
    before any assignment.
    """
    if not samples:
        raise EmptyInputError("no sweep samples to split")
    bounds = sorted((int(a), int(b)) for a, b in boundaries)
    if not bounds:
        raise ConfigError("at least one round boundary range is required")
    for (a1, b1), (a2, b2) in zip(bounds, bounds[1:]):
        if b1 > a2:
            raise ConfigError(f"round ranges overlap: [{a1},{b1}) and [{a2},{b2})")
    order = {tuple(map(int, rng)): i for i, rng in enumerate(boundaries)}

    names = _feature_names_for(samples)
    rows, ys, rids, areas, starts, stale = [], [], [], [], [], []
    dropped = 0
    for s in samples:
        rid = None
        for a, b in bounds:
            if a <= s.sweep_start_ms < b:
                rid = order[(a, b)]
                break
        if rid is None:
            dropped += 1
            continue
        rows.append([s.features[f] for f in names])
        ys.append(s.target_mcs)
        rids.append(rid)
        areas.append(s.area)
        starts.append(s.sweep_start_ms)
        stale.append(s.gps_stale)
    if not rows:
        raise EmptyInputError("every sample fell outside the round boundaries")
    ds = Dataset(
        feature_names=names,
        X=np.asarray(rows, dtype=float),
        y=np.asarray(ys, dtype=np.int64),
        round_id=np.asarray(rids, dtype=np.int64),
        area=areas,
        sweep_start_ms=np.asarray(starts, dtype=np.int64),
        gps_stale=np.asarray(stale, dtype=bool),
    )
    return ds, dropped


def _fmt(v: float) -> str:
    return repr(float(v))


def write_dataset_csv(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*ds.feature_names, "target_mcs", "round_id", "area", "sweep_start_ms"])
        for i in range(len(ds)):
            w.writerow(
                [
                    *(_fmt(v) for v in ds.X[i]),
                    int(ds.y[i]),
                    int(ds.round_id[i]),
                    ds.area[i],
                    int(ds.sweep_start_ms[i]),
                ]
            )


def read_dataset_csv(path: str | Path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path}: empty dataset file")
        tail = ["target_mcs", "round_id", "area", "sweep_start_ms"]
        if header[-4:] != tail:
            raise DataError(f"{path}: dataset CSV must end with columns {tail}")
        names = header[:-4]
        X, y, rid, area, start = [], [], [], [], []
        for row in reader:
            X.append([float(v) for v in row[: len(names)]])
            y.append(int(row[-4]))
            rid.append(int(row[-3]))
            area.append(row[-2])
            start.append(int(row[-1]))
    if not y:
        raise EmptyInputError(f"{path}: dataset has no rows")
    return Dataset(
        feature_names=names,
        X=np.asarray(X, dtype=float),
        y=np.asarray(y, dtype=np.int64),
        round_id=np.asarray(rid, dtype=np.int64),
        area=area,
        sweep_start_ms=np.asarray(start, dtype=np.int64),
    )
