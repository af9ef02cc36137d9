"""End-to-end ingestion: traces -> packets -> sweeps -> merged, labeled,
round-split dataset, plus the packet-level views the stats command uses.

Pure transformations over the run config; a rerun over the same inputs
produces byte-identical outputs.
"""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .dataset import Dataset, split_rounds
from .geo import label_areas, load_polygons, merge_gps, parse_gps
from .ingest import PacketArray, SweepSample, aggregate_sweeps, parse_trace, reconstruct_gaps

__all__ = ["ingest_run", "packet_context"]


def _concat_packets(parts: list[PacketArray]) -> PacketArray:
    fields = set(parts[0].phy)
    for p in parts[1:]:
        if set(p.phy) != fields:
            # rx_gain present in some traces only: drop it everywhere
            fields &= set(p.phy)
    return PacketArray(
        timestamp_ms=np.concatenate([p.timestamp_ms for p in parts]),
        mcs=np.concatenate([p.mcs for p in parts]),
        decoded=np.concatenate([p.decoded for p in parts]),
        interpolated=np.concatenate([p.interpolated for p in parts]),
        phy={f: np.concatenate([p.phy[f] for p in parts]) for f in sorted(fields)},
    )


def ingest_run(cfg: RunConfig) -> tuple[Dataset, PacketArray, dict]:
    """Run the full pipeline; returns the dataset, the reconstructed
    packets, and a summary for the ingest JSON."""
    parsed = [parse_trace(p, cfg.trace_schema) for p in cfg.traces]
    rebuilt = [
        reconstruct_gaps(t.packets, max_gap_ms=int(cfg.pipeline["max_gap_ms"])) for t in parsed
    ]
    samples: list[SweepSample] = []
    for part in rebuilt:
        samples.extend(aggregate_sweeps(part))
    samples.sort(key=lambda s: s.sweep_start_ms)

    fixes_tx = parse_gps(cfg.gps_tx)
    fixes_rx = parse_gps(cfg.gps_rx)
    samples, gps_dropped = merge_gps(
        samples, fixes_tx, fixes_rx, tolerance_ms=int(cfg.pipeline["gps_tolerance_ms"])
    )
    if cfg.polygons is not None:
        samples = label_areas(samples, load_polygons(cfg.polygons))
    ds, round_dropped = split_rounds(samples, cfg.rounds)

    packets = _concat_packets(rebuilt)
    summary = {
        "config_sha256": cfg.config_sha256,
        "trace_files": [str(p) for p in cfg.traces],
        "rows_total": sum(t.rows_total for t in parsed),
        "rows_rejected": sum(t.rows_rejected for t in parsed),
        "packet_count": int(len(packets)),
        "packets_reconstructed": int(packets.interpolated.sum()),
        "sweep_count": int(len(ds)),
        "sweeps_dropped_no_gps": gps_dropped,
        "sweeps_dropped_outside_rounds": round_dropped,
        "sweeps_gps_stale": int(ds.gps_stale.sum()),
        "rounds": ds.rounds,
        "feature_names": ds.feature_names,
    }
    return ds, packets, summary


def packet_context(ds: Dataset, packets: PacketArray) -> tuple[dict[str, PacketArray], np.ndarray, np.ndarray]:
    """Attach each packet to its sweep's area and TX-RX distance.

    A reconstructed packet's sweep starts at timestamp - mcs (the cycle is
    millisecond-aligned). Packets whose sweep did not survive ingestion
    are excluded. Returns (records grouped by area, kept-packet mask,
    per-kept-packet distances).
    """
    start_to_row = {int(t): i for i, t in enumerate(ds.sweep_start_ms)}
    sweep_start = packets.timestamp_ms - packets.mcs
    rows = np.array([start_to_row.get(int(t), -1) for t in sweep_start], dtype=np.int64)
    kept = rows >= 0

    by_area: dict[str, PacketArray] = {}
    areas = np.array(ds.area, dtype=object)
    kept_rows = rows[kept]
    kept_packets = packets.take(np.flatnonzero(kept))
    for area in sorted(set(ds.area)):
        sel = np.flatnonzero(areas[kept_rows] == area)
        if sel.size:
            by_area[area] = kept_packets.take(sel)

    if "distance_m" in ds.feature_names:
        col = ds.feature_names.index("distance_m")
        distances = ds.X[kept_rows, col]
    else:
        distances = np.zeros(kept_rows.size)
    return by_area, kept, distances
