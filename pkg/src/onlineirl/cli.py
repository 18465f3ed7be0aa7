"""Command-line interface.

Subcommands:

* ``gen``        write an environment bundle (MDP + features + true reward) as JSON
* ``learn``      run online reward learning from a config and/or flags
* ``eval``       recompute metrics for a saved parameter snapshot
* ``clean-demo`` the cleaning-robot strategy comparison
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .envs import bundle_from_json, make_env
from .exceptions import ConvergenceError, ValidationError
from .experiment import (
    ExperimentConfig,
    config_from_json,
    load_environment,
    normalized_features,
    run_cleaning_comparison,
    run_experiment,
)
from .metrics import cleaning_energy_cost, pearson_correlation
from .rewards import model_from_json
from .smoothmax import ApproxSpec
from .solver import approximate_value_iteration, bellman_gradient_iteration


@click.group()
def main():
    """Online inverse reinforcement learning toolkit."""


def _load_config(config_path, preset, **overrides) -> ExperimentConfig:
    doc = {}
    if config_path:
        doc = json.loads(Path(config_path).read_text())
    return config_from_json(doc, preset=preset, **overrides)


@main.command()
@click.option("--env", "env_name", type=click.Choice(["gridworld", "objectworld", "cleaning"]), required=True)
@click.option("--width", type=int, default=10, show_default=True, help="Grid side length.")
@click.option("--noise", type=float, default=0.3, show_default=True)
@click.option("--discount", type=float, default=0.9, show_default=True)
@click.option("--n-objects", type=int, default=2, show_default=True)
@click.option("--n-colors", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Environment seed (objectworld).")
@click.option("--map", "map_path", type=click.Path(exists=True), default=None, help="Text map for the cleaning home.")
@click.option("--out", type=click.Path(), required=True, help="Output JSON file.")
def gen(env_name, width, noise, discount, n_objects, n_colors, seed, map_path, out):
    """Generate an environment bundle and write it as JSON."""
    kwargs = {
        "width": width,
        "noise": noise,
        "discount": discount,
        "n_objects": n_objects,
        "n_colors": n_colors,
        "env_seed": seed,
    }
    if map_path:
        kwargs["text_map"] = Path(map_path).read_text()
    env = make_env(env_name, **kwargs)
    with open(out, "w") as fh:
        json.dump(env.to_json(), fh)
    click.echo(f"wrote {env.name} bundle ({env.mdp.n_states} states) to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file.")
@click.option("--env", "env_name", type=click.Choice(["gridworld", "objectworld", "cleaning"]), default=None)
@click.option("--model", type=click.Choice(["linear", "mlp"]), default=None)
@click.option("--preset", type=click.Choice(["paper", "desk"]), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--observations", type=int, default=None)
@click.option("--eval-every", type=int, default=None)
@click.option("--out", type=click.Path(), default="runs/latest", show_default=True)
@click.option("--emit-live", is_flag=True, help="Also write one CSV row per observation, flushed as produced.")
@click.option("--timing", is_flag=True, help="Fill the wall_ms column (makes outputs non-reproducible).")
def learn(config_path, env_name, model, preset, seed, observations, eval_every, out, emit_live, timing):
    """Run online reward learning and write metrics.csv / summary.json."""
    try:
        cfg = _load_config(
            config_path,
            preset,
            env=env_name,
            model=model,
            seed=seed,
            observations=observations,
            eval_every=eval_every,
            emit_live=emit_live or None,
            timing=timing or None,
        )
        summary = run_experiment(cfg, out)
    except ConvergenceError as exc:
        click.echo(f"solver failed: {exc}", err=True)
        sys.exit(2)
    except ValidationError as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(1)
    rho = summary["final_correlation"]
    click.echo(
        f"done: {summary['observations']} observations, "
        f"final correlation {'undefined' if rho is None else f'{rho:.4f}'}, "
        f"outputs in {out}"
    )


@main.command("eval")
@click.option("--env-file", type=click.Path(exists=True), required=True, help="Environment bundle JSON from 'gen'.")
@click.option("--theta", "theta_path", type=click.Path(exists=True), required=True, help="theta_final.json snapshot.")
@click.option("--normalize-features/--raw-features", default=True, show_default=True)
@click.option("--energy", is_flag=True, help="Also report the cleaning energy cost.")
@click.option("--dump", "dump_path", type=click.Path(), default=None, help="Write the solve and gradient tables (JSON) for debugging.")
@click.option("--approx", type=click.Choice(["pnorm", "gsoft"]), default="gsoft", show_default=True)
@click.option("--k", type=float, default=100.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Optional JSON output file.")
def eval_cmd(env_file, theta_path, normalize_features, energy, dump_path, approx, k, out):
    """Recompute metrics for a saved reward-parameter snapshot."""
    env = bundle_from_json(json.loads(Path(env_file).read_text()))
    model, theta = model_from_json(json.loads(Path(theta_path).read_text()))
    phi = normalized_features(env.features, normalize_features)
    learned = model.reward(theta, phi)
    rho = pearson_correlation(learned, env.true_reward)
    report = {
        "env": env.name,
        "model": model.kind,
        "correlation": rho,
    }
    if energy:
        report["energy_cost"] = cleaning_energy_cost(learned, env.true_reward, env.free_states)
    if dump_path:
        spec = ApproxSpec(approx, k)
        solve = approximate_value_iteration(env.mdp, learned, spec)
        grad = bellman_gradient_iteration(
            env.mdp, solve.q, model.jacobian(theta, phi), spec
        )
        with open(dump_path, "w") as fh:
            json.dump({"solve": solve.to_json(), "gradient": grad.to_json()}, fh)
        report["dump"] = str(dump_path)
    if out:
        with open(out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for key, value in report.items():
        click.echo(f"{key}: {value if value is not None else 'undefined'}")


@main.command("clean-demo")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(["paper", "desk"]), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--observations", type=int, default=5000, show_default=True)
@click.option("--n-restarts", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(), default="runs/cleaning", show_default=True)
def clean_demo(config_path, preset, seed, observations, n_restarts, out):
    """Compare uniform, optimal and learned cleaning strategies."""
    try:
        cfg = _load_config(
            config_path,
            preset,
            env="cleaning",
            width=16,
            seed=seed,
            observations=observations,
            n_restarts=n_restarts,
        )
        result = run_cleaning_comparison(cfg, out)
    except ConvergenceError as exc:
        click.echo(f"solver failed: {exc}", err=True)
        sys.exit(2)
    costs = result["energy_costs"]
    for name in ("optimal", "uniform", "learned_linear", "learned_mlp"):
        if name in costs:
            click.echo(f"{name:15s} energy cost {costs[name]:.3f}")
    click.echo(f"details in {out}/clean_summary.json")


if __name__ == "__main__":
    main()
