"""Command-line entry point.

Subcommands: ingest, stats, train, evaluate, importance, sweep-features,
sweep-samples, hyperopt, report. All runs are driven by one JSON config
(--config) and a master seed; outputs land in the config's output_dir
and are bit-reproducible for a fixed config + seed at any --threads.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
or training error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT_MODEL_CONFIGS, RunConfig, load_config
from .dataset import Dataset, read_dataset_csv, write_dataset_csv
from .errors import ConfigError, DataError, McsAdaptError, TrainingError
from .evaluation import (
    ModelConfig,
    curves_to_csv,
    evaluate_model,
    feature_count_sweep,
    pearson_correlation,
    permutation_importance,
    training_size_sweep,
)
from .goodput import load_tbs_table
from .models import LossMode, fit_model, save_model
from .pipeline import ingest_run, packet_context
from .search import ParamSpace, _to_model_config, default_space, random_search, trial_log_to_csv
from .stats import distance_bin_edges, kde_rsrp, per_by_distance, per_by_mcs_area

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_json(path: Path, payload: dict, cfg: RunConfig) -> None:
    payload = {"config_sha256": cfg.config_sha256, **payload}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _metric(name: str, value) -> None:
    if isinstance(value, float):
        print(f"{name}={value!r}")
    else:
        print(f"{name}={value}")


def _load_dataset(args, cfg: RunConfig) -> Dataset:
    path = Path(args.dataset) if args.dataset else cfg.output_dir / "dataset.csv"
    if not path.is_file():
        raise ConfigError(f"dataset file not found: {path} (run `ingest` first?)")
    return read_dataset_csv(path)


def cmd_ingest(args, cfg: RunConfig) -> int:
    ds, _, summary = ingest_run(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = Path(args.out) if args.out else cfg.output_dir / "dataset.csv"
    write_dataset_csv(ds, out)
    _write_json(cfg.output_dir / "ingest_summary.json", summary, cfg)
    _metric("packet_count", summary["packet_count"])
    _metric("sweep_count", summary["sweep_count"])
    _metric("dataset_file", out)
    return 0


def cmd_stats(args, cfg: RunConfig) -> int:
    ds, packets, _ = ingest_run(cfg)
    by_area, kept, distances = packet_context(ds, packets)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    curves = kde_rsrp(by_area, bandwidth=args.bandwidth)
    with (cfg.output_dir / "stats_rsrp_kde.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["area", "grid", "density"])
        for area in sorted(curves):
            grid, density = curves[area]
            for g, dens in zip(grid, density):
                w.writerow([area, repr(float(g)), repr(float(dens))])

    def write_cells(path: Path, cells) -> None:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["group", "mcs", "transmissions", "decodes", "per"])
            for c in cells:
                per = "" if np.isnan(c.per) else repr(c.per)
                w.writerow([c.group, c.mcs, c.transmissions, c.decodes, per])

    write_cells(cfg.output_dir / "stats_per_mcs_area.csv", per_by_mcs_area(by_area))
    kept_packets = packets.take(np.flatnonzero(kept))
    edges = distance_bin_edges(
        float(distances.max()) if distances.size else 0.0,
        float(cfg.pipeline["distance_bin_m"]),
    )
    write_cells(
        cfg.output_dir / "stats_per_distance.csv",
        per_by_distance(kept_packets, distances, edges),
    )
    _metric("areas", ",".join(sorted(by_area)))
    return 0


def _resolve_model(args, cfg: RunConfig) -> tuple[str, ModelConfig]:
    name = args.model
    config = cfg.model_config(name)
    if getattr(args, "loss", None):
        spec = config.to_dict()
        if args.loss == "quantile":
            spec["loss"] = {"kind": "quantile", "tau": args.tau if args.tau else 0.3}
        else:
            spec["loss"] = {"kind": args.loss}
        config = ModelConfig.from_dict(spec)
    return name, config


def cmd_train(args, cfg: RunConfig) -> int:
    ds = _load_dataset(args, cfg)
    name, config = _resolve_model(args, cfg)
    model = fit_model(
        ds.X, ds.y.astype(float), config.algorithm, config.loss, config.hyperparams, seed=cfg.seed
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = Path(args.out) if args.out else cfg.output_dir / f"model_{name}_{config.loss.kind}.json"
    save_model(model, out)
    _metric("model_file", out)
    return 0


def cmd_evaluate(args, cfg: RunConfig) -> int:
    ds = _load_dataset(args, cfg)
    table = load_tbs_table(cfg.tbs_table)
    if args.oracle:
        name, config = "oracle", ModelConfig("oracle", loss=LossMode("mse"))
    elif args.fixed_mcs is not None:
        name = f"static{args.fixed_mcs}"
        config = ModelConfig("constant", loss=LossMode("mse"), hyperparams={"mcs": args.fixed_mcs})
    else:
        name, config = _resolve_model(args, cfg)
    report = evaluate_model(ds, config, table, seed=cfg.seed, threads=cfg.threads)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = Path(args.out) if args.out else cfg.output_dir / f"eval_{name}_{config.loss.kind}.json"
    _write_json(out, report.to_dict(), cfg)
    _metric("aggregate_goodput_bps", report.aggregate_bps)
    _metric("oracle_bps", report.oracle_bps)
    _metric("best_static_mcs", report.best_static[0])
    _metric("best_static_bps", report.best_static[1])
    return 0


def cmd_importance(args, cfg: RunConfig) -> int:
    ds = _load_dataset(args, cfg)
    table = load_tbs_table(cfg.tbs_table)
    name, config = _resolve_model(args, cfg)
    ranking = permutation_importance(
        ds, config, table, n_repeats=args.repeats, seed=cfg.seed
    )
    correlation = pearson_correlation(ds)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _write_json(
        cfg.output_dir / f"importance_{name}.json",
        {
            "model": name,
            "importance": [{"feature": f, "delta_goodput_bps": d} for f, d in ranking],
            "correlation": [{"feature": f, "r": r} for f, r in correlation],
        },
        cfg,
    )
    for f, d in ranking:
        _metric(f"importance.{f}", d)
    return 0


def _sweep_models(args, cfg: RunConfig) -> dict[str, ModelConfig]:
    names = args.models.split(",") if args.models else sorted(set(cfg.models) | set(DEFAULT_MODEL_CONFIGS))
    return {n: cfg.model_config(n) for n in names}


def cmd_sweep_features(args, cfg: RunConfig) -> int:
    ds = _load_dataset(args, cfg)
    table = load_tbs_table(cfg.tbs_table)
    configs = _sweep_models(args, cfg)
    if args.importance:
        doc = json.loads(Path(args.importance).read_text())
        order = [entry["feature"] for entry in doc["importance"]]
    else:
        ranking = permutation_importance(
            ds, cfg.model_config(args.importance_model), table, seed=cfg.seed
        )
        order = [f for f, _ in ranking]
    rows = feature_count_sweep(ds, configs, order, table, seed=cfg.seed, threads=cfg.threads)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "sweep_features.csv").write_text(curves_to_csv(rows))
    _metric("curve_file", cfg.output_dir / "sweep_features.csv")
    return 0


def cmd_sweep_samples(args, cfg: RunConfig) -> int:
    ds = _load_dataset(args, cfg)
    table = load_tbs_table(cfg.tbs_table)
    configs = _sweep_models(args, cfg)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = training_size_sweep(
        ds, configs, sizes, table, seed=cfg.seed, n_repeats=args.repeats, threads=cfg.threads
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "sweep_samples.csv").write_text(curves_to_csv(rows))
    _metric("curve_file", cfg.output_dir / "sweep_samples.csv")
    return 0


def cmd_hyperopt(args, cfg: RunConfig) -> int:
    ds = _load_dataset(args, cfg)
    table = load_tbs_table(cfg.tbs_table)
    if args.space:
        space = ParamSpace.from_json(Path(args.space).read_text(), n_features=len(ds.feature_names))
    else:
        space = default_space(args.algorithm, n_features=len(ds.feature_names))
    best, trials = random_search(
        ds,
        args.algorithm,
        space,
        table,
        n_iter=args.iters,
        master_seed=cfg.seed,
        threads=cfg.threads,
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / f"hyperopt_{args.algorithm}_trials.csv").write_text(
        trial_log_to_csv(trials)
    )
    _write_json(
        cfg.output_dir / f"hyperopt_{args.algorithm}_best.json",
        {
            "algorithm": args.algorithm,
            "config": best.config,
            "score_bps": best.score_bps,
            "trial": best.trial,
            "seed": best.seed,
            # paste-ready block for the run config's "models" map
            "model_config": _to_model_config(args.algorithm, best.config).to_dict(),
        },
        cfg,
    )
    _metric("best_score_bps", best.score_bps)
    _metric("best_trial", best.trial)
    return 0


MBIT = 1e6
REPORT_ALGOS = ("gbt", "mlp", "qrf", "linear")
REPORT_LOSSES = ("quantile", "mse", "mae")


def cmd_report(args, cfg: RunConfig) -> int:
    """Consolidate eval_*.json runs into one markdown + CSV bundle.

    The table covers the algorithms and losses that have at least one run
    (one run gives a 1x1 table); absent combinations within it show a
    dash and make the exit code 2 (partial).
    """
    run_dir = Path(args.run_dir) if args.run_dir else cfg.output_dir
    cells: dict[tuple[str, str], float] = {}
    extras = {}
    for path in sorted(run_dir.glob("eval_*.json")):
        doc = json.loads(path.read_text())
        algo = doc.get("algorithm")
        kind = doc.get("loss", {}).get("kind")
        if algo in REPORT_ALGOS and kind in REPORT_LOSSES:
            cells[(algo, kind)] = doc["aggregate_bps"]
        extras.setdefault("oracle_bps", doc.get("oracle_bps"))
        extras.setdefault("best_static_bps", doc.get("best_static_bps"))
        extras.setdefault("best_static_mcs", doc.get("best_static_mcs"))

    algos = [a for a in REPORT_ALGOS if any(k == a for k, _ in cells)]
    losses = [kind for kind in REPORT_LOSSES if any(k == kind for _, k in cells)]
    lines = ["# Prediction results", ""]
    lines.append("| Algorithm | " + " | ".join(f"{k} [Mbit/s]" for k in losses) + " |")
    lines.append("|---" * (1 + len(losses)) + "|")
    missing = 0
    csv_rows = [["algorithm", "loss", "goodput_bps"]]
    for algo in algos:
        row = [algo]
        for kind in losses:
            value = cells.get((algo, kind))
            if value is None:
                row.append("-")
                missing += 1
            else:
                row.append(f"{value / MBIT:.3f}")
                csv_rows.append([algo, kind, repr(value)])
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    if extras.get("oracle_bps") is not None:
        lines.append(f"Oracle goodput: {extras['oracle_bps'] / MBIT:.3f} Mbit/s")
        lines.append(
            f"Best static MCS: {extras['best_static_mcs']} "
            f"({extras['best_static_bps'] / MBIT:.3f} Mbit/s)"
        )
        lines.append("")
    for curve in ("sweep_features.csv", "sweep_samples.csv"):
        if (run_dir / curve).is_file():
            lines.append(f"Curve data: {curve}")
    lines.append("")

    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "report.md").write_text("\n".join(lines))
    with (run_dir / "report_table.csv").open("w", newline="") as fh:
        csv.writer(fh).writerows(csv_rows)
    _metric("report_file", run_dir / "report.md")
    _metric("missing_runs", missing)
    return 2 if missing else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcsadapt", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mcsadapt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="worker process cap")
        p.set_defaults(fn=fn)
        return p

    p = add("ingest", cmd_ingest, help="traces + GPS -> dataset CSV")
    p.add_argument("--out", help="dataset CSV path (default <output_dir>/dataset.csv)")

    p = add("stats", cmd_stats, help="packet-level RSRP/PER statistics")
    p.add_argument("--bandwidth", type=float, default=None, help="KDE bandwidth override")

    for name, fn in (("train", cmd_train), ("evaluate", cmd_evaluate), ("importance", cmd_importance)):
        p = add(name, fn, help=f"{name} a configured model")
        p.add_argument("--dataset", help="dataset CSV (default <output_dir>/dataset.csv)")
        p.add_argument("--model", default="gbt", help="model name from the config")
        p.add_argument("--loss", choices=["quantile", "mse", "mae"], help="override loss mode")
        p.add_argument("--tau", type=float, default=None, help="quantile for --loss quantile")
        if name == "train":
            p.add_argument("--out", help="model artifact path")
        if name == "evaluate":
            p.add_argument("--out", help="report JSON path")
            p.add_argument("--oracle", action="store_true", help="score the perfect predictor")
            p.add_argument("--fixed-mcs", type=int, default=None, help="score one static MCS level")
        if name == "importance":
            p.add_argument("--repeats", type=int, default=5)

    p = add("sweep-features", cmd_sweep_features, help="goodput vs. feature count")
    p.add_argument("--dataset")
    p.add_argument("--models", help="comma-separated model names (default: all configured)")
    p.add_argument("--importance", help="importance JSON from the importance subcommand")
    p.add_argument("--importance-model", default="gbt", help="model used to rank features")

    p = add("sweep-samples", cmd_sweep_samples, help="goodput vs. training size")
    p.add_argument("--dataset")
    p.add_argument("--models")
    p.add_argument("--sizes", required=True, help="comma-separated training sizes")
    p.add_argument("--repeats", type=int, default=5)

    p = add("hyperopt", cmd_hyperopt, help="randomized hyperparameter search")
    p.add_argument("--dataset")
    p.add_argument("--algorithm", required=True, choices=["linear", "qrf", "gbt", "mlp"])
    p.add_argument("--space", help="parameter space JSON (default: bundled per-algorithm space)")
    p.add_argument("--iters", type=int, default=100)

    p = add("report", cmd_report, help="consolidate runs into report.md")
    p.add_argument("--run-dir", help="directory with eval_*.json files (default output_dir)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MCSADAPT_LOGLEVEL", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors / --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads is not None:
            cfg.threads = args.threads
        elif cfg.threads <= 0:
            cfg.threads = os.cpu_count() or 1
        return args.fn(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3
    except McsAdaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
