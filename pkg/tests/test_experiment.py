import csv
import json

import numpy as np
import pytest

from onlineirl.exceptions import ValidationError
from onlineirl.experiment import (
    CSV_HEADER,
    ExperimentConfig,
    config_from_json,
    normalized_features,
    run_cleaning_comparison,
    run_experiment,
)

TINY_MAP = (
    "########\n"
    "#......#\n"
    "#.2....#\n"
    "#......#\n"
    "#....3.#\n"
    "#......#\n"
    "#.1....#\n"
    "########\n"
)


def tiny_config(**overrides):
    base = dict(
        env="gridworld",
        width=4,
        n_restarts=2,
        observations=60,
        eval_every=20,
        seed=1,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestRunExperiment:
    def test_csv_shape_and_ordering(self, tmp_path):
        summary = run_experiment(tiny_config(), tmp_path)
        with open(tmp_path / "metrics.csv") as fh:
            header = fh.readline().strip()
        assert header == CSV_HEADER
        rows = read_rows(tmp_path / "metrics.csv")
        assert len(rows) == 3  # 60 observations / eval_every 20
        ts = [int(r["t"]) for r in rows]
        assert ts == sorted(ts) and len(set(ts)) == len(ts)
        assert summary["metric_rows"] == 3
        # timing off by default: wall_ms column present but empty
        assert all(r["wall_ms"] == "" for r in rows)

    def test_correlations_parse_or_are_empty(self, tmp_path):
        run_experiment(tiny_config(), tmp_path)
        for row in read_rows(tmp_path / "metrics.csv"):
            if row["correlation"]:
                assert -1.0 <= float(row["correlation"]) <= 1.0

    def test_determinism_byte_identical(self, tmp_path):
        run_experiment(tiny_config(), tmp_path / "a")
        run_experiment(tiny_config(), tmp_path / "b")
        for name in ("metrics.csv", "summary.json", "theta_final.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_timing_fills_wall_ms(self, tmp_path):
        run_experiment(tiny_config(timing=True), tmp_path)
        rows = read_rows(tmp_path / "metrics.csv")
        assert all(float(r["wall_ms"]) >= 0.0 for r in rows)

    def test_emit_live_writes_one_row_per_observation(self, tmp_path):
        run_experiment(tiny_config(emit_live=True), tmp_path)
        rows = read_rows(tmp_path / "live.csv")
        assert len(rows) == 60
        assert [int(r["t"]) for r in rows] == list(range(1, 61))

    def test_summary_round_trips(self, tmp_path):
        summary = run_experiment(tiny_config(), tmp_path)
        loaded = json.loads((tmp_path / "summary.json").read_text())
        assert json.dumps(loaded, sort_keys=True) == json.dumps(summary, sort_keys=True)
        assert loaded["config"]["env"] == "gridworld"
        assert loaded["vi_sweeps"] > 0

    def test_theta_snapshot_reloads_to_reported_correlation(self, tmp_path):
        from onlineirl.envs import make_env
        from onlineirl.metrics import pearson_correlation
        from onlineirl.rewards import model_from_json

        cfg = tiny_config(observations=40, eval_every=40)
        summary = run_experiment(cfg, tmp_path)
        model, theta = model_from_json(json.loads((tmp_path / "theta_final.json").read_text()))
        env = make_env("gridworld", width=4)
        phi = normalized_features(env.features, True)
        rho = pearson_correlation(model.reward(theta, phi), env.true_reward)
        assert rho == pytest.approx(summary["final_correlation"], abs=1e-12)


class TestConfigParsing:
    def test_defaults_follow_reference_protocol(self):
        cfg = ExperimentConfig()
        assert cfg.k == 100.0 and cfg.beta == 1.0
        assert cfg.n_restarts == 30
        assert cfg.observations == 150_000
        assert cfg.resolved_learning_rate() == 1e-5
        assert ExperimentConfig(model="mlp").resolved_learning_rate() == 1e-3

    def test_desk_preset_scales_down(self):
        cfg = config_from_json({}, preset="desk")
        assert cfg.n_restarts == 5
        assert cfg.observations == 20_000

    def test_overrides_beat_document(self):
        cfg = config_from_json({"width": 8, "seed": 3}, observations=10, eval_every=5)
        assert cfg.width == 8 and cfg.seed == 3
        assert cfg.observations == 10 and cfg.eval_every == 5

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValidationError, match="unknown config fields"):
            config_from_json({"learning_rte": 1e-5})

    def test_hidden_defaults_per_environment(self):
        assert ExperimentConfig(model="mlp", env="gridworld").resolved_hidden() == (10, 10)
        assert ExperimentConfig(model="mlp", env="cleaning").resolved_hidden() == (20, 20, 20)
        assert ExperimentConfig(model="linear").resolved_hidden() == ()

    def test_feature_normalization(self):
        phi = np.array([[0.0, 5.0], [10.0, 2.0]])
        out = normalized_features(phi, True)
        assert out.max() == 1.0
        np.testing.assert_array_equal(normalized_features(phi, False), phi)


class TestCleaningComparison:
    def test_costs_ordered_and_optimal_is_one(self, tmp_path):
        (tmp_path / "home.map").write_text(TINY_MAP)
        cfg = ExperimentConfig(
            env="cleaning",
            map_path=str(tmp_path / "home.map"),
            observations=150,
            eval_every=50,
            n_restarts=2,
            seed=0,
        )
        result = run_cleaning_comparison(cfg, tmp_path / "out", models=("linear",))
        costs = result["energy_costs"]
        assert costs["optimal"] == 1.0
        assert costs["uniform"] > 1.0
        assert costs["learned_linear"] >= 1.0 - 1e-9
        assert (tmp_path / "out" / "clean_summary.json").exists()
        assert (tmp_path / "out" / "linear" / "metrics.csv").exists()

    def test_missing_map_file_rejected_at_parse_time(self, tmp_path):
        with pytest.raises(ValidationError, match="does not exist"):
            ExperimentConfig(env="cleaning", map_path=str(tmp_path / "nope.map"))
