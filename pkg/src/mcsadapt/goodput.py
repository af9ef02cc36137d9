"""Goodput scoring: MCS -> transport block size, overshoot-to-zero rule,
oracle and best-static-MCS baselines.

A prediction is rounded half-up to an integer MCS and clamped to [0, 19].
If the rounded level exceeds the highest decodable MCS of the sweep the
sample scores 0 bit/s; otherwise it scores TBS(mcs) * 1000 TB/s (one
transport block per millisecond over 48 resource blocks).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "TbsTable",
    "GoodputReport",
    "load_tbs_table",
    "tbs_lookup",
    "sample_goodput",
    "mean_goodput",
    "oracle_goodput",
    "best_static_mcs",
    "TB_PER_SECOND",
]

log = logging.getLogger(__name__)

TB_PER_SECOND = 1000
N_MCS = 20

# sha256 of the bundled data file; guards against silent edits of the
# transcription (3GPP TS 36.213 Table 8.6.1-1 chained with Table
# 7.1.7.2.1-1 at N_PRB=48).
_BUNDLED_TBS_SHA256 = "399a98be6d179dd6889c98b7cddd5d9314192b3328379d1508ab6dd732ed8530"
_BUNDLED_TBS_TAG = "TS 36.213 Tables 8.6.1-1 + 7.1.7.2.1-1, N_PRB=48, v1"


@dataclass(frozen=True)
class TbsTable:
    """Transport block sizes in bits, indexed by MCS 0..19, for 48 RBs."""

    entries: tuple[int, ...]
    source_tag: str

    def __post_init__(self):
        if len(self.entries) != N_MCS:
            raise DataError(f"TBS table must have {N_MCS} entries, got {len(self.entries)}")
        if any(e <= 0 for e in self.entries):
            raise DataError("TBS entries must be positive")
        # MCS 0-10 are QPSK, 11-19 are 16-QAM; within each regime the
        # block size never decreases, and 10/11 carry the same payload.
        qpsk, qam16 = self.entries[:11], self.entries[11:]
        if any(b < a for a, b in zip(qpsk, qpsk[1:])) or any(b < a for a, b in zip(qam16, qam16[1:])):
            raise DataError("TBS entries must be non-decreasing within a modulation regime")
        if self.entries[10] != self.entries[11]:
            raise DataError("MCS 10 and 11 must share one transport block size")

    def __getitem__(self, mcs: int) -> int:
        return tbs_lookup(self, mcs)


def _parse_tbs_csv(text: str, source_tag: str) -> TbsTable:
    rows = list(csv.DictReader(text.splitlines()))
    if not rows or set(rows[0]) != {"mcs", "tbs_bits"}:
        raise DataError("TBS file must be a CSV with columns mcs,tbs_bits")
    entries = [0] * N_MCS
    seen = set()
    for row in rows:
        m = int(row["mcs"])
        if not 0 <= m < N_MCS or m in seen:
            raise DataError(f"bad or duplicate mcs index {m} in TBS file")
        seen.add(m)
        entries[m] = int(row["tbs_bits"])
    if len(seen) != N_MCS:
        raise DataError("TBS file must cover MCS 0..19")
    return TbsTable(entries=tuple(entries), source_tag=source_tag)


def load_tbs_table(path: str | Path | None = None) -> TbsTable:
    """Load the TBS table, defaulting to the checksummed bundled file."""
    if path is None:
        data = resources.files("mcsadapt.data").joinpath("tbs_48prb.csv").read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if digest != _BUNDLED_TBS_SHA256:
            raise DataError(f"bundled TBS table corrupted (sha256 {digest})")
        return _parse_tbs_csv(data.decode("ascii"), _BUNDLED_TBS_TAG)
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"TBS table not found: {p}")
    return _parse_tbs_csv(p.read_text(), f"user file {p.name}")


def tbs_lookup(table: TbsTable, mcs: int) -> int:
    """Transport block size in bits for one MCS index."""
    if not 0 <= int(mcs) < N_MCS or int(mcs) != mcs:
        raise ConfigError(f"mcs must be an integer in [0, {N_MCS - 1}], got {mcs!r}")
    return table.entries[int(mcs)]


def round_mcs(predicted: float) -> int:
    """Round half-up and clamp to the valid MCS range."""
    return int(min(max(math.floor(predicted + 0.5), 0), N_MCS - 1))


def sample_goodput(predicted: float, target_mcs: int, table: TbsTable) -> float:
    """Goodput in bit/s for one sample; 0 if the choice overshoots the target."""
    if not -1 <= target_mcs < N_MCS:
        raise DataError(f"target_mcs must be in [-1, {N_MCS - 1}], got {target_mcs}")
    if not math.isfinite(predicted):
        return 0.0
    m = round_mcs(predicted)
    if m > target_mcs:
        return 0.0
    return float(table.entries[m] * TB_PER_SECOND)


def _goodput_vector(predictions: np.ndarray, targets: np.ndarray, table: TbsTable) -> np.ndarray:
    """Vectorized sample_goodput over aligned prediction/target arrays."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets)
    if np.any(targets < -1) or np.any(targets >= N_MCS):
        raise DataError("targets outside [-1, 19]")
    finite = np.isfinite(predictions)
    n_bad = int(predictions.size - finite.sum())
    if n_bad:
        log.warning("%d non-finite predictions scored as 0 goodput", n_bad)
    m = np.clip(np.floor(np.where(finite, predictions, 0.0) + 0.5), 0, N_MCS - 1).astype(int)
    tbs = np.asarray(table.entries, dtype=float)
    out = tbs[m] * TB_PER_SECOND
    out[(m > targets) | ~finite] = 0.0
    return out


def mean_goodput(predictions, targets, table: TbsTable) -> float:
    """Arithmetic mean of sample_goodput over all samples, in bit/s."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise DataError(
            f"predictions/targets length mismatch: {predictions.shape} vs {targets.shape}"
        )
    if predictions.size == 0:
        raise DataError("empty prediction vector")
    return float(_goodput_vector(predictions, targets, table).mean())


def oracle_goodput(targets, table: TbsTable) -> float:
    """Mean goodput of a perfect predictor (always picks the target MCS)."""
    targets = np.asarray(targets)
    if targets.size == 0:
        raise DataError("empty dataset")
    return mean_goodput(targets.astype(float), targets, table)


def best_static_mcs(targets, table: TbsTable) -> tuple[int, float]:
    """Best fixed MCS level and its mean goodput.

    static_bps(m) = TBS(m) * 1000 * fraction(target >= m); ties go to the
    lowest (most robust) level.
    """
    targets = np.asarray(targets)
    if targets.size == 0:
        raise DataError("empty dataset")
    best_m, best_bps = 0, -1.0
    for m in range(N_MCS):
        bps = table.entries[m] * TB_PER_SECOND * float(np.mean(targets >= m))
        if bps > best_bps:
            best_m, best_bps = m, bps
    return best_m, best_bps


@dataclass
class GoodputReport:
    """Scored prediction run next to its oracle and fixed-MCS baselines."""

    mean_goodput_bps: float
    per_sample_bps: list[float]
    oracle_bps: float
    best_static_mcs: int
    best_static_bps: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        tol = 1e-6 * max(1.0, self.oracle_bps)
        if not (-tol <= self.mean_goodput_bps <= self.oracle_bps + tol):
            raise DataError("mean goodput outside [0, oracle] range")
        if self.best_static_bps > self.oracle_bps + tol:
            raise DataError("static baseline exceeds oracle")

    def to_json(self) -> str:
        payload = {
            "mean_goodput_bps": self.mean_goodput_bps,
            "per_sample_bps": self.per_sample_bps,
            "oracle_bps": self.oracle_bps,
            "best_static_mcs": self.best_static_mcs,
            "best_static_bps": self.best_static_bps,
        }
        payload.update(self.extras)
        return json.dumps(payload, sort_keys=True, indent=2)


def score_predictions(predictions, targets, table: TbsTable) -> GoodputReport:
    """Build a GoodputReport for one prediction vector."""
    per_sample = _goodput_vector(np.asarray(predictions, dtype=float), targets, table)
    m, static_bps = best_static_mcs(targets, table)
    return GoodputReport(
        mean_goodput_bps=float(per_sample.mean()),
        per_sample_bps=[float(v) for v in per_sample],
        oracle_bps=oracle_goodput(targets, table),
        best_static_mcs=m,
        best_static_bps=static_bps,
    )
