"""Experiment orchestration: run the online learner against a benchmark
environment, stream metrics to CSV and write a JSON summary.

Configs are flat JSON documents; every field has a default so that
``run --env gridworld`` reproduces the full-scale reference protocol
(k=100, beta=1, 30 restarts, 150k observations) and the ``desk`` preset
scales it down to something a laptop finishes in minutes.

Outputs per run directory:

* ``metrics.csv`` with header ``t,best_restart,best_score,correlation,wall_ms``,
  one row every ``eval_every`` observations;
* ``summary.json`` echoing the config plus final metrics and solver totals;
* ``theta_final.json``, the best restart's parameters for exact reload;
* ``live.csv`` (only with ``emit_live``), one row per observation, flushed
  as produced so it can be tailed.

Timing is off by default: with ``timing=false`` the wall_ms field is left
empty and two runs with the same config and seed produce byte-identical
files.  Turning timing on fills wall_ms with real measurements and gives up
that reproducibility.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import smoothmax
from .envs import make_env, generate_observations
from .exceptions import ValidationError
from .learner import LearnerConfig, OnlineRewardLearner
from .metrics import cleaning_energy_cost, pearson_correlation
from .rewards import RewardModel
from .smoothmax import ApproxSpec
from .backend import kernel_backend

CSV_HEADER = "t,best_restart,best_score,correlation,wall_ms"
LIVE_HEADER = "t,best_restart,best_score,correlation"

PRESETS = {
    "paper": {"n_restarts": 30, "observations": 150_000},
    "desk": {"n_restarts": 5, "observations": 20_000},
}

#: Per-model defaults when the config leaves learning_rate/hidden unset.
MODEL_LEARNING_RATES = {"linear": 1e-5, "mlp": 1e-3}
MODEL_HIDDEN = {"gridworld": (10, 10), "objectworld": (10, 10), "cleaning": (20, 20, 20)}


@dataclass
class ExperimentConfig:
    """Flat description of one experiment run."""

    env: str = "gridworld"
    width: int = 10
    noise: float = 0.3
    discount: float = 0.9
    n_objects: int = 2
    n_colors: int = 2
    env_seed: int = 0
    map_path: str | None = None
    hotspot_radius: int = 0

    model: str = "linear"
    hidden: tuple[int, ...] | None = None
    normalize_features: bool = True

    approx: str = "gsoft"
    k: float = 100.0
    beta: float = 1.0
    learning_rate: float | None = None
    n_restarts: int = 30
    vi_threshold: float = 1e-6
    grad_threshold: float = 1e-6
    grad_solver: str = "direct"
    init_scale: float | None = None
    seed: int = 0

    observations: int = 150_000
    teleport_every: int = 3
    eval_every: int = 1000
    timing: bool = False
    emit_live: bool = False

    def __post_init__(self):
        if self.eval_every < 1 or self.observations < 1:
            raise ValidationError("eval_every and observations must be positive")
        if self.hidden is not None:
            self.hidden = tuple(int(h) for h in self.hidden)
        if self.map_path is not None and not Path(self.map_path).is_file():
            raise ValidationError(f"map file {self.map_path!r} does not exist")

    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return MODEL_LEARNING_RATES[self.model]

    def resolved_hidden(self) -> tuple[int, ...]:
        if self.model == "linear":
            return ()
        if self.hidden is not None:
            return self.hidden
        return MODEL_HIDDEN.get(self.env, (10, 10))

    def learner_config(self) -> LearnerConfig:
        return LearnerConfig(
            spec=ApproxSpec(self.approx, self.k),
            beta=self.beta,
            learning_rate=self.resolved_learning_rate(),
            n_restarts=self.n_restarts,
            vi_threshold=self.vi_threshold,
            grad_threshold=self.grad_threshold,
            grad_solver=self.grad_solver,
            init_scale=self.init_scale,
            seed=self.seed,
        )

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["hidden"] = list(self.hidden) if self.hidden is not None else None
        return doc


def config_from_json(doc: dict, preset: str | None = None, **overrides) -> ExperimentConfig:
    """Build a config from a JSON document plus optional preset/overrides.

    Precedence, lowest to highest: dataclass defaults, the document,
    the preset's scale fields, explicit overrides.
    """
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - fields
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    merged = dict(doc)
    if preset:
        if preset not in PRESETS:
            raise ValidationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if merged.get("hidden") is not None:
        merged["hidden"] = tuple(merged["hidden"])
    return ExperimentConfig(**{k: v for k, v in merged.items() if k in fields})


def load_environment(cfg: ExperimentConfig):
    kwargs = {
        "width": cfg.width,
        "noise": cfg.noise,
        "discount": cfg.discount,
        "n_objects": cfg.n_objects,
        "n_colors": cfg.n_colors,
        "env_seed": cfg.env_seed,
        "hotspot_radius": cfg.hotspot_radius,
    }
    if cfg.env == "cleaning" and cfg.map_path:
        kwargs["text_map"] = Path(cfg.map_path).read_text()
    return make_env(cfg.env, **kwargs)


def normalized_features(features: np.ndarray, enabled: bool) -> np.ndarray:
    """Scale feature columns into [0, 1] so tanh layers do not saturate."""
    if not enabled:
        return features
    peak = np.abs(features).max()
    return features / peak if peak > 0 else features


def build_learner(cfg: ExperimentConfig, env) -> OnlineRewardLearner:
    model = RewardModel(
        kind=cfg.model,
        n_features=env.features.shape[1],
        hidden=cfg.resolved_hidden(),
    )
    phi = normalized_features(env.features, cfg.normalize_features)
    return OnlineRewardLearner(env.mdp, phi, model, cfg.learner_config())


def _format_float(x: float | None) -> str:
    return "" if x is None else f"{x:.10g}"


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run one experiment to completion and write its artifacts.

    Returns the summary document (also written to ``summary.json``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = load_environment(cfg)
    learner = build_learner(cfg, env)
    smoothmax.reset_clamp_events()

    started = time.perf_counter()
    interval_start = started
    rows = 0
    last_correlation = None
    best = None

    with open(out / "metrics.csv", "w") as metrics_fh:
        metrics_fh.write(CSV_HEADER + "\n")
        live_fh = open(out / "live.csv", "w") if cfg.emit_live else None
        if live_fh:
            live_fh.write(LIVE_HEADER + "\n")
        try:
            stream = generate_observations(
                env, cfg.observations, teleport_every=cfg.teleport_every, seed=cfg.seed
            )
            for obs in stream:
                best = learner.observe(obs)
                t = obs.t + 1
                if live_fh:
                    rho = pearson_correlation(best.best_reward, env.true_reward)
                    live_fh.write(
                        f"{t},{best.best_restart},{_format_float(best.best_score)},"
                        f"{_format_float(rho)}\n"
                    )
                    live_fh.flush()
                if t % cfg.eval_every == 0:
                    last_correlation = pearson_correlation(best.best_reward, env.true_reward)
                    if cfg.timing:
                        now = time.perf_counter()
                        wall_ms = f"{(now - interval_start) * 1000.0:.1f}"
                        interval_start = now
                    else:
                        wall_ms = ""
                    metrics_fh.write(
                        f"{t},{best.best_restart},{_format_float(best.best_score)},"
                        f"{_format_float(last_correlation)},{wall_ms}\n"
                    )
                    rows += 1
        finally:
            if live_fh:
                live_fh.close()

    if best is None:
        raise ValidationError("experiment produced no observations")
    if last_correlation is None:
        last_correlation = pearson_correlation(best.best_reward, env.true_reward)

    summary = {
        "config": cfg.to_json(),
        "backend": kernel_backend(),
        "env": env.name,
        "observations": cfg.observations,
        "metric_rows": rows,
        "final_correlation": last_correlation,
        "best_restart": best.best_restart,
        "best_score": best.best_score,
        "clamp_events": smoothmax.clamp_event_count(),
        "vi_sweeps": learner.stats["vi_sweeps"],
        "grad_sweeps": learner.stats["grad_sweeps"],
        "grad_solves": learner.stats["grad_solves"],
    }
    if cfg.timing:
        summary["wall_s"] = time.perf_counter() - started

    model = learner.model
    theta = learner.restarts[best.best_restart].theta
    _write_json(out / "theta_final.json", model.theta_to_json(theta))
    _write_json(out / "summary.json", summary)
    return summary


def run_cleaning_comparison(
    cfg: ExperimentConfig, out_dir, models=("linear", "mlp")
) -> dict:
    """Learn the cleaning reward with each model and compare energy costs.

    The optimal strategy (allocate like the true dirt) is normalized to cost
    exactly 1.0; the uniform strategy and each learned reward are reported
    relative to it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.env != "cleaning":
        cfg = dataclasses.replace(cfg, env="cleaning", width=16)
    env = load_environment(cfg)
    free = env.free_states
    dirt = env.true_reward

    costs = {
        "optimal": cleaning_energy_cost(dirt, dirt, free),
        "uniform": cleaning_energy_cost(np.ones_like(dirt), dirt, free),
    }
    summaries = {}
    for model in models:
        sub = dataclasses.replace(cfg, model=model, hidden=None, learning_rate=cfg.learning_rate)
        run_summary = run_experiment(sub, out / model)
        theta_doc = json.loads((out / model / "theta_final.json").read_text())
        from .rewards import model_from_json

        reward_model, theta = model_from_json(theta_doc)
        phi = normalized_features(env.features, sub.normalize_features)
        learned = reward_model.reward(theta, phi)
        costs[f"learned_{model}"] = cleaning_energy_cost(learned, dirt, free)
        summaries[model] = run_summary

    result = {
        "config": cfg.to_json(),
        "energy_costs": costs,
        "runs": {m: s["final_correlation"] for m, s in summaries.items()},
    }
    _write_json(out / "clean_summary.json", result)
    return result


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
