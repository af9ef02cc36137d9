"""Run configuration: one JSON file drives every subcommand.

Schema (paths are resolved relative to the config file):

    {
      "traces": ["trace_round1.csv", ...],
      "trace_schema": {"snr": "SNR_dB", ...},        # optional renames
      "gps_tx": "gps_tx.csv",
      "gps_rx": "gps_rx.csv",
      "polygons": "areas.json",                      # optional
      "rounds": [[start_ms, end_ms], ...],           # half-open ranges
      "output_dir": "out",
      "tbs_table": null,                             # null = bundled table
      "pipeline": {"max_gap_ms": 1000, "gps_tolerance_ms": 1000,
                   "distance_bin_m": 25.0},
      "models": {"gbt": {"algorithm": "gbt", "loss": {...},
                 "hyperparams": {...}}, ...},
      "seed": 0,
      "threads": 1
    }

Every JSON the toolkit writes embeds the sha256 of the canonicalized
config, so outputs are traceable to the exact run settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .evaluation import ModelConfig

__all__ = ["RunConfig", "load_config", "DEFAULT_MODEL_CONFIGS"]

DEFAULT_PIPELINE = {"max_gap_ms": 1000, "gps_tolerance_ms": 1000, "distance_bin_m": 25.0}

# Frozen configurations used when the config file does not override them;
# refresh with the `hyperopt` subcommand output for a new dataset.
DEFAULT_MODEL_CONFIGS: dict[str, dict] = {
    "gbt": {
        "algorithm": "gbt",
        "loss": {"kind": "quantile", "tau": 0.28},
        "hyperparams": {
            "n_rounds": 300,
            "learning_rate": 0.06,
            "max_depth": 6,
            "min_leaf": 20,
            "subsample": 0.8,
        },
    },
    "qrf": {
        "algorithm": "qrf",
        "loss": {"kind": "quantile", "tau": 0.3},
        "hyperparams": {"n_trees": 200, "max_depth": 14, "min_leaf": 10},
    },
    "mlp": {
        "algorithm": "mlp",
        "loss": {"kind": "quantile", "tau": 0.3},
        "hyperparams": {
            "layers": [64, 64],
            "activation": "relu",
            "lr": 1e-3,
            "l1": 1e-6,
            "l2": 1e-5,
            "epochs": 60,
            "batch_size": 256,
        },
    },
    "linear": {
        "algorithm": "linear",
        "loss": {"kind": "quantile", "tau": 0.35},
        "hyperparams": {"epochs": 300, "lr": 0.3, "batch_size": 256},
    },
}


@dataclass
class RunConfig:
    traces: list[Path]
    gps_tx: Path
    gps_rx: Path
    rounds: list[tuple[int, int]]
    output_dir: Path
    polygons: Path | None = None
    tbs_table: Path | None = None
    trace_schema: dict = field(default_factory=dict)
    pipeline: dict = field(default_factory=lambda: dict(DEFAULT_PIPELINE))
    models: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    config_sha256: str = ""

    def model_config(self, name: str) -> ModelConfig:
        spec = self.models.get(name) or DEFAULT_MODEL_CONFIGS.get(name)
        if spec is None:
            raise ConfigError(f"no model configuration named {name!r}")
        return ModelConfig.from_dict(spec)


def _hash_config(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    base = path.parent

    def resolve(p):
        return (base / p).resolve() if p else None

    try:
        traces = [resolve(p) for p in doc["traces"]]
        cfg = RunConfig(
            traces=traces,
            gps_tx=resolve(doc["gps_tx"]),
            gps_rx=resolve(doc["gps_rx"]),
            rounds=[(int(a), int(b)) for a, b in doc["rounds"]],
            output_dir=resolve(doc.get("output_dir", "out")),
            polygons=resolve(doc.get("polygons")),
            tbs_table=resolve(doc.get("tbs_table")),
            trace_schema=dict(doc.get("trace_schema", {})),
            pipeline={**DEFAULT_PIPELINE, **doc.get("pipeline", {})},
            models=dict(doc.get("models", {})),
            seed=int(doc.get("seed", 0)),
            threads=int(doc.get("threads", 1)),
            config_sha256=_hash_config(doc),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad config structure: {exc}") from exc

    for p in [*cfg.traces, cfg.gps_tx, cfg.gps_rx, cfg.polygons, cfg.tbs_table]:
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"referenced file does not exist: {p}")
    if not cfg.traces:
        raise ConfigError("config needs at least one trace file")
    if not cfg.rounds:
        raise ConfigError("config needs round boundaries")
    return cfg
