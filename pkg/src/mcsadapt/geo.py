"""GPS context: fix parsing, timestamp merge, great-circle distance, and
polygon-based area labels.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, EmptyInputError, SchemaError
from .ingest import SweepSample

__all__ = [
    "GpsTrack",
    "AreaPolygon",
    "haversine_distance",
    "parse_gps",
    "merge_gps",
    "load_polygons",
    "label_areas",
]

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0

GPS_COLUMNS = ("timestamp_ms", "latitude", "longitude", "velocity")


@dataclass
class GpsTrack:
    """Columnar GPS fixes for one user, sorted by timestamp."""

    timestamp_ms: np.ndarray
    latitude: np.ndarray
    longitude: np.ndarray
    velocity: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamp_ms)


def haversine_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between (lat, lon) points in degrees."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    s_lat = math.sin((lat2 - lat1) / 2.0)
    s_lon = math.sin((lon2 - lon1) / 2.0)
    h = s_lat * s_lat + math.cos(lat1) * math.cos(lat2) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def parse_gps(path: str | Path) -> GpsTrack:
    """Parse a GPS fix CSV (timestamp_ms, latitude, longitude, velocity)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInputError(f"{path}: empty file")
        missing = [c for c in GPS_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing GPS columns {missing}")
        rows = []
        for row in reader:
            try:
                rows.append(tuple(float(row[c]) for c in GPS_COLUMNS))
            except (TypeError, ValueError):
                continue
    if not rows:
        raise EmptyInputError(f"{path}: no valid GPS fixes")
    arr = np.asarray(rows, dtype=float)
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    lat, lon, vel = arr[:, 1], arr[:, 2], arr[:, 3]
    if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180) or np.any(vel < 0):
        raise DataError(f"{path}: fix outside valid latitude/longitude/velocity domain")
    return GpsTrack(
        timestamp_ms=arr[:, 0].astype(np.int64), latitude=lat, longitude=lon, velocity=vel
    )


def _nearest_fix(track: GpsTrack, t: int, tolerance_ms: int) -> tuple[int, bool] | None:
    """Index of the fix to use for time t, plus a stale flag.

    Nearest fix within tolerance wins (ties to the earlier one); otherwise
    the last fix before t is carried forward and flagged stale; None if t
    precedes every fix by more than the tolerance.
    """
    ts = track.timestamp_ms
    j = int(np.searchsorted(ts, t))
    prev_i = j - 1
    cand = []
    if prev_i >= 0:
        cand.append((abs(t - int(ts[prev_i])), prev_i))
    if j < len(ts):
        cand.append((abs(int(ts[j]) - t), j))
    best_d, best_i = min(cand)  # tuple order resolves ties to the earlier fix
    if best_d <= tolerance_ms:
        return best_i, False
    if prev_i >= 0:
        return prev_i, True
    return None


def merge_gps(
    samples: list[SweepSample],
    fixes_tx: GpsTrack,
    fixes_rx: GpsTrack,
    tolerance_ms: int = 1000,
) -> tuple[list[SweepSample], int]:
    """Attach both users' position/speed and their distance to each sample.

    Returns the merged samples and the number dropped for falling before
    any usable fix.
    """
    if len(fixes_tx) == 0 or len(fixes_rx) == 0:
        raise ConfigError("GPS merge needs at least one fix per user")
    merged: list[SweepSample] = []
    dropped = 0
    for s in samples:
        t = s.sweep_start_ms
        got_tx = _nearest_fix(fixes_tx, t, tolerance_ms)
        got_rx = _nearest_fix(fixes_rx, t, tolerance_ms)
        if got_tx is None or got_rx is None:
            dropped += 1
            continue
        (i_tx, stale_tx), (i_rx, stale_rx) = got_tx, got_rx
        feats = dict(s.features)
        feats["lat_tx"] = float(fixes_tx.latitude[i_tx])
        feats["lon_tx"] = float(fixes_tx.longitude[i_tx])
        feats["speed_tx"] = float(fixes_tx.velocity[i_tx])
        feats["lat_rx"] = float(fixes_rx.latitude[i_rx])
        feats["lon_rx"] = float(fixes_rx.longitude[i_rx])
        feats["speed_rx"] = float(fixes_rx.velocity[i_rx])
        feats["distance_m"] = haversine_distance(
            (feats["lat_tx"], feats["lon_tx"]), (feats["lat_rx"], feats["lon_rx"])
        )
        merged.append(
            SweepSample(
                sweep_start_ms=s.sweep_start_ms,
                target_mcs=s.target_mcs,
                features=feats,
                round_id=s.round_id,
                area=s.area,
                gps_stale=stale_tx or stale_rx,
            )
        )
    if dropped:
        log.info("merge_gps dropped %d samples that precede all fixes", dropped)
    return merged, dropped


@dataclass
class AreaPolygon:
    name: str
    ring: list[tuple[float, float]]  # (lat, lon) vertices, closed implicitly


def load_polygons(path: str | Path) -> list[AreaPolygon]:
    """Load the area polygon file: {"areas": [{"name", "polygon": [[lat, lon], ...]}]}."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
        areas = doc["areas"]
        polys = []
        for entry in areas:
            ring = [(float(p[0]), float(p[1])) for p in entry["polygon"]]
            if len(ring) >= 2 and ring[0] == ring[-1]:
                ring = ring[:-1]
            if len(ring) < 3:
                raise DataError(f"polygon {entry.get('name')!r} has fewer than 3 vertices")
            polys.append(AreaPolygon(name=str(entry["name"]), ring=ring))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed polygon file: {exc}") from exc
    if not polys:
        raise DataError(f"{path}: no polygons defined")
    return polys


def _point_in_ring(lat: float, lon: float, ring: list[tuple[float, float]]) -> bool:
    """Even-odd containment with boundary points counted as inside."""
    inside = False
    n = len(ring)
    for k in range(n):
        y1, x1 = ring[k]
        y2, x2 = ring[(k + 1) % n]
        # on-segment check (exact arithmetic; boundary is inclusive)
        cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1)
        if cross == 0.0 and min(x1, x2) <= lon <= max(x1, x2) and min(y1, y2) <= lat <= max(y1, y2):
            return True
        if (y1 > lat) != (y2 > lat):
            x_hit = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
            if lon < x_hit:
                inside = not inside
    return inside


def label_areas(samples: list[SweepSample], polygons: list[AreaPolygon]) -> list[SweepSample]:
    """Set each sample's area from its RX position; first polygon in file
    order wins, no match leaves 'unlabeled'."""
    out = []
    for s in samples:
        area = "unlabeled"
        lat, lon = s.features.get("lat_rx"), s.features.get("lon_rx")
        if lat is not None and lon is not None:
            for poly in polygons:
                if _point_in_ring(lat, lon, poly.ring):
                    area = poly.name
                    break
        out.append(
            SweepSample(
                sweep_start_ms=s.sweep_start_ms,
                target_mcs=s.target_mcs,
                features=s.features,
                round_id=s.round_id,
                area=area,
                gps_stale=s.gps_stale,
            )
        )
    return out
