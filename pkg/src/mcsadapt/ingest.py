"""Per-packet trace ingestion: CSV parsing, missing-packet reconstruction,
and aggregation of 20 ms MCS sweeps into supervised samples.

The capture writes one packet per millisecond while sweeping MCS 0..19,
so a missing millisecond is a packet that failed to decode. Reconstruction
re-inserts those packets with linearly interpolated PHY measurements and
the MCS implied by the slot's position in the sweep cycle.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyInputError, OrderingError, SchemaError

__all__ = [
    "PHY_FIELDS",
    "PacketArray",
    "PacketRecord",
    "ParsedTrace",
    "SweepSample",
    "parse_trace",
    "reconstruct_gaps",
    "aggregate_sweeps",
]

log = logging.getLogger(__name__)

MCS_CYCLE_LEN = 20
PHY_FIELDS = ("snr", "rsrp", "rssi", "noise_power", "rx_power", "rx_gain")
MANDATORY_COLUMNS = ("timestamp_ms", "mcs") + PHY_FIELDS[:-1]  # rx_gain optional

DEFAULT_SCHEMA = {name: name for name in MANDATORY_COLUMNS + ("rx_gain", "decoded")}


@dataclass
class PacketArray:
    """Columnar batch of packets, one slot per transmitted millisecond."""

    timestamp_ms: np.ndarray  # int64
    mcs: np.ndarray  # int64 in [0, 19]
    decoded: np.ndarray  # bool
    interpolated: np.ndarray  # bool
    phy: dict[str, np.ndarray]  # float64 per field; rx_gain may be absent

    def __len__(self) -> int:
        return len(self.timestamp_ms)

    def __getitem__(self, i: int) -> "PacketRecord":
        return PacketRecord(
            timestamp_ms=int(self.timestamp_ms[i]),
            mcs=int(self.mcs[i]),
            decoded=bool(self.decoded[i]),
            interpolated=bool(self.interpolated[i]),
            **{f: float(self.phy[f][i]) for f in self.phy},
        )

    @property
    def has_rx_gain(self) -> bool:
        return "rx_gain" in self.phy

    def take(self, idx) -> "PacketArray":
        return PacketArray(
            timestamp_ms=self.timestamp_ms[idx],
            mcs=self.mcs[idx],
            decoded=self.decoded[idx],
            interpolated=self.interpolated[idx],
            phy={f: v[idx] for f, v in self.phy.items()},
        )


@dataclass
class PacketRecord:
    """Row view of one packet, mainly for tests and debugging."""

    timestamp_ms: int
    mcs: int
    decoded: bool
    interpolated: bool
    snr: float
    rsrp: float
    rssi: float
    noise_power: float
    rx_power: float
    rx_gain: float | None = None


@dataclass
class ParsedTrace:
    path: str
    packets: PacketArray
    rows_total: int
    rows_rejected: int


@dataclass
class SweepSample:
    """One aggregated 20-packet MCS sweep."""

    sweep_start_ms: int
    target_mcs: int  # max decoded MCS in the sweep, or -1
    features: dict[str, float]
    round_id: int = -1
    area: str = "unlabeled"
    gps_stale: bool = False


def parse_trace(path: str | Path, schema: dict[str, str] | None = None) -> ParsedTrace:
    """Parse a per-packet trace CSV into a sorted PacketArray.

    `schema` maps canonical field names to CSV column names. Rows with
    unparseable values or MCS outside [0, 19] are rejected and counted.
    The `decoded` column is optional: the capture only logs packets it
    decoded, so absent means true.
    """
    path = Path(path)
    colmap = dict(DEFAULT_SCHEMA)
    colmap.update(schema or {})
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInputError(f"{path}: empty file")
        header = set(reader.fieldnames)
        missing = [c for c in MANDATORY_COLUMNS if colmap[c] not in header]
        if missing:
            raise SchemaError(f"{path}: missing mandatory columns {missing}")
        has_gain = colmap["rx_gain"] in header
        has_decoded = colmap["decoded"] in header

        fields = PHY_FIELDS if has_gain else PHY_FIELDS[:-1]
        ts, mcs, dec = [], [], []
        phy = {f: [] for f in fields}
        rows_total = rejected = 0
        for row in reader:
            rows_total += 1
            try:
                t = int(row[colmap["timestamp_ms"]])
                m = int(row[colmap["mcs"]])
                vals = [float(row[colmap[f]]) for f in fields]
            except (KeyError, TypeError, ValueError):
                rejected += 1
                continue
            if not 0 <= m < MCS_CYCLE_LEN:
                rejected += 1
                continue
            d = True
            if has_decoded:
                d = row[colmap["decoded"]].strip().lower() in ("1", "true", "yes")
            ts.append(t)
            mcs.append(m)
            dec.append(d)
            for f, v in zip(fields, vals):
                phy[f].append(v)

    if not ts:
        raise EmptyInputError(f"{path}: no valid data rows")
    order = np.argsort(np.asarray(ts), kind="stable")
    ts_arr = np.asarray(ts, dtype=np.int64)[order]
    dup = np.flatnonzero(np.diff(ts_arr) == 0)
    if dup.size:
        raise OrderingError(f"{path}: duplicated timestamp {int(ts_arr[dup[0]])} ms")
    packets = PacketArray(
        timestamp_ms=ts_arr,
        mcs=np.asarray(mcs, dtype=np.int64)[order],
        decoded=np.asarray(dec, dtype=bool)[order],
        interpolated=np.zeros(len(ts), dtype=bool),
        phy={f: np.asarray(v, dtype=float)[order] for f, v in phy.items()},
    )
    if rejected:
        log.warning("%s: rejected %d of %d rows", path, rejected, rows_total)
    return ParsedTrace(path=str(path), packets=packets, rows_total=rows_total, rows_rejected=rejected)


def _segment_bounds(ts: np.ndarray, max_gap_ms: int) -> list[tuple[int, int]]:
    """Index ranges [i, j) of segments separated by gaps > max_gap_ms."""
    breaks = np.flatnonzero(np.diff(ts) > max_gap_ms) + 1
    edges = [0, *breaks.tolist(), len(ts)]
    return list(zip(edges[:-1], edges[1:]))


def _reconstruct_segment(seg: PacketArray) -> PacketArray:
    """Fill one gap-free-by-construction segment to 1 ms spacing.

    The span is padded outward to whole sweep cycles: back to the cycle-0
    slot of the first packet and forward to the cycle-19 slot of the last.
    Inserted packets carry decoded=False, interpolated=True, the MCS of
    their cycle slot (anchored on the most recent real packet), and
    per-field linear interpolation with constant extrapolation at edges.
    """
    ts = seg.timestamp_ms
    start = int(ts[0]) - int(seg.mcs[0])
    end = int(ts[-1]) + (MCS_CYCLE_LEN - 1 - int(seg.mcs[-1]))
    full_ts = np.arange(start, end + 1, dtype=np.int64)
    n = len(full_ts)

    pos = ts - start  # offsets of real packets in the padded span
    real = np.zeros(n, dtype=bool)
    real[pos] = True

    mcs = np.empty(n, dtype=np.int64)
    mcs[pos] = seg.mcs
    # anchor each missing slot on the previous real packet (next one for
    # the leading pad) and advance the 0..19 cycle from there
    anchor = np.maximum.accumulate(np.where(real, np.arange(n), -1))
    lead = anchor < 0
    if lead.any():
        first = int(pos[0])
        mcs[lead] = (seg.mcs[0] + (np.flatnonzero(lead) - first)) % MCS_CYCLE_LEN
    idx = anchor[~lead]
    offs = np.flatnonzero(~lead) - idx
    mcs[~lead] = (mcs[idx] + offs) % MCS_CYCLE_LEN

    decoded = np.zeros(n, dtype=bool)
    decoded[pos] = seg.decoded
    interpolated = ~real

    phy = {}
    for f, vals in seg.phy.items():
        # np.interp is linear inside and clamps to the nearest real value
        # beyond the first/last sample, which is the wanted edge behavior
        phy[f] = np.interp(full_ts.astype(float), ts.astype(float), vals)

    return PacketArray(
        timestamp_ms=full_ts, mcs=mcs, decoded=decoded, interpolated=interpolated, phy=phy
    )


def reconstruct_gaps(
    packets: PacketArray, mcs_cycle_len: int = MCS_CYCLE_LEN, max_gap_ms: int = 1000
) -> PacketArray:
    """Insert the never-decoded packets so every millisecond has a record.

    Gaps longer than `max_gap_ms` are not interpolated across; the trace
    is split there and each segment reconstructed independently (a time
    jump remains between segments).
    """
    if mcs_cycle_len != MCS_CYCLE_LEN:
        raise SchemaError("only the standard 20-level MCS cycle is supported")
    if max_gap_ms < 2 * MCS_CYCLE_LEN:
        raise ConfigError(f"max_gap_ms must be >= {2 * MCS_CYCLE_LEN} to keep padded segments apart")
    if len(packets) == 0:
        raise EmptyInputError("no packets to reconstruct")
    ts = packets.timestamp_ms
    if np.any(np.diff(ts) <= 0):
        raise OrderingError("packet timestamps must be strictly increasing")
    parts = [
        _reconstruct_segment(packets.take(slice(i, j))) for i, j in _segment_bounds(ts, max_gap_ms)
    ]
    if len(parts) > 1:
        log.info("trace split into %d segments at gaps > %d ms", len(parts), max_gap_ms)
    return PacketArray(
        timestamp_ms=np.concatenate([p.timestamp_ms for p in parts]),
        mcs=np.concatenate([p.mcs for p in parts]),
        decoded=np.concatenate([p.decoded for p in parts]),
        interpolated=np.concatenate([p.interpolated for p in parts]),
        phy={f: np.concatenate([p.phy[f] for p in parts]) for f in parts[0].phy},
    )


def aggregate_sweeps(packets: PacketArray) -> list[SweepSample]:
    """Collapse each complete 20-packet sweep into one SweepSample.

    A window qualifies if it starts at an mcs=0 packet, covers 20
    consecutive milliseconds, and steps through the full 0..19 cycle.
    Incomplete or slipped windows are skipped. The target is the highest
    decoded MCS (-1 if nothing decoded); PHY features are means over the
    window, interpolated values included.
    """
    n = len(packets)
    samples: list[SweepSample] = []
    starts = np.flatnonzero(packets.mcs == 0)
    cycle = np.arange(MCS_CYCLE_LEN)
    i = 0
    for s in starts:
        if s < i:  # inside the previously emitted window
            continue
        e = s + MCS_CYCLE_LEN
        if e > n:
            break
        ts = packets.timestamp_ms[s:e]
        if ts[-1] - ts[0] != MCS_CYCLE_LEN - 1 or not np.array_equal(packets.mcs[s:e], cycle):
            continue
        dec = packets.decoded[s:e]
        target = int(packets.mcs[s:e][dec].max()) if dec.any() else -1
        features = {f: float(v[s:e].mean()) for f, v in packets.phy.items()}
        samples.append(
            SweepSample(sweep_start_ms=int(ts[0]), target_mcs=target, features=features)
        )
        i = e
    if not samples:
        log.warning("no complete MCS sweeps found in %d packets", n)
    return samples
