"""Descriptive statistics of the packet-level data: RSRP density per
area, packet error rate per MCS per area, and PER versus distance.

Reconstructed (never-decoded) packets count as transmissions that failed
to decode; that is what makes PER computable from a decode-only capture.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .ingest import MCS_CYCLE_LEN, PacketArray

__all__ = ["PerCell", "gaussian_kde", "kde_rsrp", "per_by_mcs_area", "per_by_distance"]

log = logging.getLogger(__name__)

KDE_GRID_POINTS = 256
DEFAULT_DISTANCE_BIN_M = 25.0


@dataclass(frozen=True)
class PerCell:
    group: str  # area name or distance-bin label
    mcs: int
    transmissions: int
    decodes: int
    per: float  # NaN when transmissions == 0

    def __post_init__(self):
        if self.decodes > self.transmissions:
            raise DataError("decodes cannot exceed transmissions")


def gaussian_kde(
    values: np.ndarray, bandwidth: float | None = None, grid: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-kernel density on a fixed grid.

    Bandwidth defaults to Scott's rule, sigma_hat * n^(-1/5). The grid
    spans the data plus three bandwidths on both sides.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise DataError("KDE needs at least 2 values")
    if bandwidth is None:
        sigma = float(values.std(ddof=1))
        if sigma == 0.0:
            raise DataError("KDE bandwidth undefined for constant data; pass one explicitly")
        bandwidth = sigma * values.size ** (-1.0 / 5.0)
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    if grid is None:
        grid = np.linspace(
            values.min() - 3.0 * bandwidth, values.max() + 3.0 * bandwidth, KDE_GRID_POINTS
        )
    z = (grid[:, None] - values[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (values.size * bandwidth * np.sqrt(2.0 * np.pi))
    return grid, density


def kde_rsrp(
    records_by_area: dict[str, PacketArray], bandwidth: float | None = None
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-area RSRP density over measured (non-interpolated) packets."""
    curves = {}
    for area, packets in records_by_area.items():
        rsrp = packets.phy["rsrp"][~packets.interpolated]
        if rsrp.size < 2:
            log.warning("area %r skipped: %d measured packets", area, rsrp.size)
            continue
        curves[area] = gaussian_kde(rsrp, bandwidth=bandwidth)
    return curves


def per_by_mcs_area(records_by_area: dict[str, PacketArray]) -> list[PerCell]:
    """Packet error rate per (area, MCS level)."""
    cells = []
    for area in sorted(records_by_area):
        packets = records_by_area[area]
        for mcs in range(MCS_CYCLE_LEN):
            sel = packets.mcs == mcs
            tx = int(sel.sum())
            ok = int((sel & packets.decoded).sum())
            per = 1.0 - ok / tx if tx else float("nan")
            cells.append(PerCell(group=area, mcs=mcs, transmissions=tx, decodes=ok, per=per))
    return cells


def distance_bin_edges(max_distance_m: float, width_m: float = DEFAULT_DISTANCE_BIN_M) -> np.ndarray:
    """Uniform bin edges from 0 to just past the observed maximum."""
    top = max(width_m, (np.floor(max_distance_m / width_m) + 1.0) * width_m)
    return np.arange(0.0, top + 0.5 * width_m, width_m)


def per_by_distance(
    packets: PacketArray, distance_m: np.ndarray, bin_edges: np.ndarray
) -> list[PerCell]:
    """Packet error rate per (distance bin, MCS level).

    Empty bins are emitted with transmissions=0 and per=NaN so the output
    always partitions the full edge range.
    """
    bin_edges = np.asarray(bin_edges, dtype=float)
    if bin_edges.size < 2 or np.any(np.diff(bin_edges) <= 0):
        raise ConfigError("bin_edges must be strictly increasing with >= 2 entries")
    distance_m = np.asarray(distance_m, dtype=float)
    if distance_m.shape[0] != len(packets):
        raise DataError("distance vector must align with packets")
    # digitize: bin k covers [edges[k], edges[k+1]); outside-range packets
    # are dropped from the partition
    which = np.digitize(distance_m, bin_edges) - 1
    cells = []
    for k in range(bin_edges.size - 1):
        label = f"[{bin_edges[k]:g},{bin_edges[k + 1]:g})"
        in_bin = which == k
        for mcs in range(MCS_CYCLE_LEN):
            sel = in_bin & (packets.mcs == mcs)
            tx = int(sel.sum())
            ok = int((sel & packets.decoded).sum())
            per = 1.0 - ok / tx if tx else float("nan")
            cells.append(PerCell(group=label, mcs=mcs, transmissions=tx, decodes=ok, per=per))
    return cells
