import csv
import json
from pathlib import Path

import numpy as np
import pytest

from mcsadapt.dataset import Dataset
from mcsadapt.goodput import load_tbs_table
from mcsadapt.ingest import PacketArray

ACCEPTANCE_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(num, text): acceptance criterion checked by this test"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, text = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        reason = ""
        if rep.skipped and rep.longrepr:
            reason = f" ({rep.longrepr[2].removeprefix('Skipped: ')})"
        ACCEPTANCE_RESULTS[num] = f"{status}  {text}{reason}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {num:02d}  {ACCEPTANCE_RESULTS[num]}")

PHY_DEFAULTS = {"snr": 10.0, "rsrp": -90.0, "rssi": -80.0, "noise_power": -100.0, "rx_power": -85.0}


@pytest.fixture(scope="session")
def tbs_table():
    return load_tbs_table()


def packet_array(rows, fields=tuple(PHY_DEFAULTS)):
    """Build a PacketArray from (timestamp, mcs, decoded, {phy overrides}) tuples."""
    ts, mcs, dec, phy = [], [], [], {f: [] for f in fields}
    for row in rows:
        t, m, d = row[0], row[1], row[2]
        overrides = row[3] if len(row) > 3 else {}
        ts.append(t)
        mcs.append(m)
        dec.append(d)
        for f in fields:
            phy[f].append(overrides.get(f, PHY_DEFAULTS.get(f, 0.0)))
    return PacketArray(
        timestamp_ms=np.asarray(ts, dtype=np.int64),
        mcs=np.asarray(mcs, dtype=np.int64),
        decoded=np.asarray(dec, dtype=bool),
        interpolated=np.zeros(len(ts), dtype=bool),
        phy={f: np.asarray(v, dtype=float) for f, v in phy.items()},
    )


def write_trace_csv(path: Path, rows, columns=None, include_decoded=False):
    """rows: dicts with timestamp_ms, mcs, phy fields (and optionally decoded)."""
    columns = columns or ["timestamp_ms", "mcs", *PHY_DEFAULTS]
    if include_decoded:
        columns = [*columns, "decoded"]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return path


def synthetic_sweep_trace(n_sweeps, t0=1_000, seed=0, decode_threshold=None):
    """Ground-truth packets for n_sweeps full cycles starting at t0.

    decode_threshold(sweep_idx) gives the highest decodable MCS of that
    sweep (-1 for none). Returns (all packet dicts, per-sweep targets).
    Packet PHY values vary linearly so interpolation is exactly checkable.
    """
    rng = np.random.default_rng(seed)
    if decode_threshold is None:
        thresholds = rng.integers(-1, 20, size=n_sweeps)
    else:
        thresholds = np.array([decode_threshold(i) for i in range(n_sweeps)])
    rows = []
    for s in range(n_sweeps):
        for m in range(20):
            t = t0 + 20 * s + m
            rows.append(
                {
                    "timestamp_ms": t,
                    "mcs": m,
                    "decoded": m <= thresholds[s],
                    "snr": 10.0 + 0.01 * (t - t0),
                    "rsrp": -90.0 - 0.005 * (t - t0),
                    "rssi": -80.0 + 0.002 * (t - t0),
                    "noise_power": -100.0,
                    "rx_power": -85.0 + 0.001 * (t - t0),
                }
            )
    return rows, thresholds.tolist()


def make_dataset(n_rounds=3, per_round=40, d=3, seed=0, informative=True):
    """Synthetic sweep dataset: target correlated with feature 0."""
    rng = np.random.default_rng(seed)
    n = n_rounds * per_round
    X = rng.normal(size=(n, d))
    if informative:
        raw = 9.5 + 4.0 * X[:, 0] + 0.5 * rng.normal(size=n)
        y = np.clip(np.round(raw), -1, 19).astype(np.int64)
    else:
        y = rng.integers(-1, 20, size=n).astype(np.int64)
    return Dataset(
        feature_names=[f"f{j}" for j in range(d)],
        X=X,
        y=y,
        round_id=np.repeat(np.arange(n_rounds), per_round).astype(np.int64),
        area=["unlabeled"] * n,
        sweep_start_ms=(np.arange(n) * 20).astype(np.int64),
    )


def write_gps_csv(path: Path, fixes):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp_ms", "latitude", "longitude", "velocity"])
        for t, lat, lon, v in fixes:
            w.writerow([t, lat, lon, v])
    return path


def write_polygons(path: Path, areas):
    path.write_text(json.dumps({"areas": areas}))
    return path
