"""Randomized hyperparameter search scored by LOGO-CV goodput.

Parameter distributions: uniform(lo, hi), log-uniform(lo, hi),
integer-uniform(lo, hi) with hi exclusive, and choice(options). Every
trial draws its own RNG substream from the master seed, so the trial log
is reproducible and trials can be re-evaluated in any order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, McsAdaptError
from .evaluation import ModelConfig, evaluate_model
from .goodput import TbsTable
from .models import LossMode
from .seeding import spawn_seed, substream

__all__ = [
    "ParamSpace",
    "TrialResult",
    "default_space",
    "sample_config",
    "random_search",
    "trial_log_to_csv",
]

log = logging.getLogger(__name__)

DIST_KINDS = ("uniform", "loguniform", "intuniform", "choice")


@dataclass(frozen=True)
class ParamSpace:
    """name -> distribution spec, e.g. {"dist": "uniform", "lo": 0, "hi": 1}."""

    entries: dict[str, dict]

    def __post_init__(self):
        for name, spec in self.entries.items():
            kind = spec.get("dist")
            if kind not in DIST_KINDS:
                raise ConfigError(f"{name}: unknown distribution {kind!r}")
            if kind == "choice":
                if not spec.get("options"):
                    raise ConfigError(f"{name}: choice needs a non-empty options list")
            else:
                lo, hi = spec.get("lo"), spec.get("hi")
                if lo is None or hi is None or not lo < hi:
                    raise ConfigError(f"{name}: needs lo < hi")
                if kind == "loguniform" and lo <= 0:
                    raise ConfigError(f"{name}: log-uniform needs lo > 0")
            if name == "tau" and kind != "choice":
                if not (0.0 < spec["lo"] and spec["hi"] <= 1.0):
                    raise ConfigError("tau must be searched inside (0, 1)")

    @classmethod
    def from_json(cls, text: str, n_features: int | None = None) -> "ParamSpace":
        entries = json.loads(text)
        for spec in entries.values():
            # feature-count-dependent bound, e.g. mtry in the bundled space
            if spec.get("hi") == "n_features_plus_one":
                if n_features is None:
                    raise ConfigError("space needs the dataset feature count; none given")
                spec["hi"] = n_features + 1
        return cls(entries=entries)


def default_space(algorithm: str, n_features: int) -> ParamSpace:
    """Bundled search space for one algorithm (gbt, qrf, or mlp)."""
    from importlib import resources

    try:
        text = resources.files("mcsadapt.data").joinpath(f"space_{algorithm}.json").read_text()
    except FileNotFoundError:
        raise ConfigError(f"no bundled search space for {algorithm!r}; pass a space file") from None
    return ParamSpace.from_json(text, n_features=n_features)


def sample_config(space: ParamSpace, rng: np.random.Generator) -> dict:
    """One independent draw per entry, in sorted name order."""
    out = {}
    for name in sorted(space.entries):
        spec = space.entries[name]
        kind = spec["dist"]
        if kind == "uniform":
            out[name] = float(rng.uniform(spec["lo"], spec["hi"]))
        elif kind == "loguniform":
            out[name] = float(np.exp(rng.uniform(np.log(spec["lo"]), np.log(spec["hi"]))))
        elif kind == "intuniform":
            out[name] = int(rng.integers(spec["lo"], spec["hi"]))
        else:
            out[name] = spec["options"][int(rng.integers(0, len(spec["options"])))]
    return out


@dataclass
class TrialResult:
    trial: int
    config: dict
    score_bps: float  # NaN for failed trials
    seed: int
    error: str | None = None


def _to_model_config(algorithm: str, params: dict) -> ModelConfig:
    """Split the sampled map into the loss and the fit hyperparameters."""
    hp = dict(params)
    tau = hp.pop("tau", None)
    loss = LossMode("quantile", tau) if tau is not None else LossMode(hp.pop("loss", "mse"))
    if "n_layers" in hp or "width" in hp:
        # the MLP space samples a depth and one shared width
        hp["layers"] = [int(hp.pop("width", 32))] * int(hp.pop("n_layers", 1))
    return ModelConfig(algorithm=algorithm, loss=loss, hyperparams=hp)


def random_search(
    ds: Dataset,
    algorithm: str,
    space: ParamSpace,
    table: TbsTable,
    n_iter: int = 100,
    master_seed: int = 0,
    threads: int = 1,
) -> tuple[TrialResult, list[TrialResult]]:
    """Run n_iter trials; return (best, full log).

    Individual trial failures are recorded and skipped; the search only
    fails if every trial does. Ties go to the earliest trial.
    """
    if n_iter < 1:
        raise ConfigError("n_iter must be >= 1")
    trials: list[TrialResult] = []
    for i in range(n_iter):
        rng = substream(master_seed, "hyperopt-trial", i)
        params = sample_config(space, rng)
        trial_seed = int(spawn_seed(master_seed, "hyperopt-eval", i).generate_state(1)[0])
        config = _to_model_config(algorithm, params)
        try:
            report = evaluate_model(ds, config, table, seed=trial_seed, threads=threads)
            trials.append(
                TrialResult(trial=i, config=params, score_bps=report.aggregate_bps, seed=trial_seed)
            )
        except McsAdaptError as exc:
            log.warning("trial %d failed: %s", i, exc)
            trials.append(
                TrialResult(trial=i, config=params, score_bps=float("nan"), seed=trial_seed, error=str(exc))
            )
    scored = [t for t in trials if np.isfinite(t.score_bps)]
    if not scored:
        raise ConfigError("hyperparameter search failed: every trial errored")
    best = max(scored, key=lambda t: (t.score_bps, -t.trial))
    return best, trials


def trial_log_to_csv(trials: list[TrialResult]) -> str:
    lines = ["trial,params,score_bps,seed"]
    for t in trials:
        params = json.dumps(t.config, sort_keys=True)
        score = "nan" if not np.isfinite(t.score_bps) else repr(t.score_bps)
        lines.append(f'{t.trial},"{params.replace(chr(34), chr(34) * 2)}",{score},{t.seed}')
    return "\n".join(lines) + "\n"
