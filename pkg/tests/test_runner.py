"""Tests for the runner package: config validation, overrides, worker resolution and dispatch."""

from __future__ import annotations

import json
import os

import pytest

from covtail.errors import ConfigError
from covtail.runner import resolve_workers, run_blocks, run_trials
from covtail.runner.config import apply_overrides, load_config, validate_config
from covtail.runner.registry import RUNNERS, run, run_experiment
from covtail.settings import reset_settings_cache


# ======================================================================
# Overrides
# ======================================================================
class TestOverrides:
    def test_nested_assignment(self):
        raw = apply_overrides({"params": {"n": 10}}, ["params.n=2000", "params.ensemble.kind=gaussian"])
        assert raw["params"]["n"] == 2000
        assert raw["params"]["ensemble"] == {"kind": "gaussian"}

    def test_list_index(self):
        raw = apply_overrides({"params": {"n_grid": [100, 200]}}, ["params.n_grid.1=400"])
        assert raw["params"]["n_grid"] == [100, 400]

    def test_values_parse_as_json(self):
        raw = apply_overrides({}, ["a=1.5", "b=true", "c=[1, 2]", "d=auto"])
        assert raw == {"a": 1.5, "b": True, "c": [1, 2], "d": "auto"}

    def test_input_is_not_mutated(self):
        original = {"params": {"n": 10}}
        apply_overrides(original, ["params.n=20"])
        assert original == {"params": {"n": 10}}

    def test_malformed(self):
        with pytest.raises(ConfigError) as info:
            apply_overrides({}, ["no_equals_sign"])
        assert info.value.field_path == "--set"

    def test_cannot_descend_into_scalar(self):
        with pytest.raises(ConfigError):
            apply_overrides({"trials": 5}, ["trials.x=1"])


# ======================================================================
# Validation
# ======================================================================
class TestValidation:
    def test_valid(self, lowertail_config):
        config = validate_config(lowertail_config)
        assert config.experiment == "lowertail"
        assert config.typed_params().n == 400

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError) as info:
            validate_config({"experiment": "bogus"})
        assert info.value.field_path == "experiment"

    def test_bad_param(self, lowertail_config):
        lowertail_config["params"]["delta"] = 1.5
        with pytest.raises(ConfigError) as info:
            validate_config(lowertail_config)
        assert info.value.field_path == "params.delta"

    def test_bad_ensemble(self, lowertail_config):
        lowertail_config["params"]["ensemble"] = {"kind": "cauchy", "dim": 2}
        with pytest.raises(ConfigError) as info:
            validate_config(lowertail_config)
        assert info.value.field_path == "params.ensemble"

    def test_extra_field(self, lowertail_config):
        lowertail_config["params"]["sample_size"] = 3
        with pytest.raises(ConfigError) as info:
            validate_config(lowertail_config)
        assert info.value.field_path == "params.sample_size"

    def test_cone_support_is_one_based(self):
        raw = {
            "experiment": "re",
            "params": {
                "ensemble": {"kind": "gaussian", "dim": 4},
                "cone": {"support": [0], "alpha": 1.0},
                "epsilon": 0.2,
                "delta": 0.1,
                "n": 100,
            },
        }
        with pytest.raises(ConfigError) as info:
            validate_config(raw)
        assert info.value.field_path.startswith("params.cone.support")

    def test_eta_accepts_one(self):
        raw = {"experiment": "vector_sum", "params": {"ensemble": {"kind": "gaussian", "dim": 2}, "n": 10, "eta": 1, "t": 2}}
        assert validate_config(raw).typed_params().eta == 1.0

    def test_echo_drops_scheduling_fields(self, lowertail_config):
        config = validate_config({**lowertail_config, "workers": 4, "output": "x"})
        assert "workers" not in config.echo()
        assert "output" not in config.echo()

    def test_every_experiment_has_a_runner(self):
        assert set(RUNNERS) == {
            "lowertail", "ols", "vector_sum", "re", "rudelson", "transfer", "lasso_rate",
            "verify_identities", "concentration",
        }


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_config(tmp_path / "absent.json")
        assert info.value.field_path == "config"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(path)


# ======================================================================
# Workers and scheduling
# ======================================================================
class TestWorkers:
    def test_explicit(self):
        assert resolve_workers(3) == 3
        assert resolve_workers("2") == 2

    def test_auto(self):
        assert resolve_workers("auto") == (os.cpu_count() or 1)
        assert resolve_workers(None) == (os.cpu_count() or 1)

    def test_environment_wins(self, monkeypatch):
        monkeypatch.setenv("COVTAIL_WORKERS", "2")
        reset_settings_cache()
        assert resolve_workers(8) == 2

    @pytest.mark.parametrize("value", [0, "many"])
    def test_invalid(self, value):
        with pytest.raises(ConfigError) as info:
            resolve_workers(value)
        assert info.value.field_path == "workers"

    def test_run_trials_order_and_seeds(self):
        serial = run_trials(lambda t, s: (t, s), 150, 7, workers=1, chunk=16)
        parallel = run_trials(lambda t, s: (t, s), 150, 7, workers=4, chunk=16)
        assert serial == parallel
        assert [t for t, _ in serial] == list(range(150))

    def test_run_blocks_independent_of_workers(self):
        serial = run_blocks(lambda size, rng: rng.standard_normal(size), 10_000, 3, workers=1, block=1000)
        parallel = run_blocks(lambda size, rng: rng.standard_normal(size), 10_000, 3, workers=4, block=1000)
        assert serial.shape == (10_000,)
        assert (serial == parallel).all()


# ======================================================================
# Dispatch
# ======================================================================
class TestRun:
    def test_lowertail_report(self, lowertail_config):
        report = run_experiment(lowertail_config)
        assert report.experiment == "lowertail"
        assert report.trials == 12
        assert report.extras["config"]["master_seed"] == 11
        assert "workers" not in report.extras["config"]

    def test_same_seed_same_numbers(self, lowertail_config):
        first = run_experiment(lowertail_config, workers=1)
        second = run_experiment(lowertail_config, workers=4)
        assert [r.statistic for r in first.rows] == [r.statistic for r in second.rows]

    def test_target_deficit_reaches_experiment(self, lowertail_config):
        report = run_experiment(lowertail_config, ["params.epsilon=0.5"])
        assert report.params["epsilon"] == 0.5
        assert report.extras["required_n"] > 400
        assert report.extras["meets_target"] is False

    def test_overrides_and_path(self, tmp_path, lowertail_config):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(lowertail_config))
        report = run_experiment(path, ["trials=3", "params.n=50"])
        assert report.trials == 3
        assert report.params["n"] == 50

    def test_overrides_on_validated_config(self, lowertail_config):
        config = validate_config(lowertail_config)
        assert run_experiment(config, ["trials=2"]).trials == 2

    def test_transfer(self):
        config = validate_config(
            {"experiment": "transfer", "params": {"p_max": 5, "probes": 300}, "trials": 4, "master_seed": 1}
        )
        report = run(config, 1)
        assert report.trials == 4
        assert report.passed is True

    def test_verify_identities(self):
        config = validate_config(
            {
                "experiment": "verify_identities",
                "params": {"draws": 20_000, "instances": 50, "bdg_trials": 2000},
                "master_seed": 2,
            }
        )
        report = run(config, 1)
        assert report.passed is True
        assert report.trials == len(report.rows)

    def test_ols_dispatch(self):
        config = validate_config(
            {
                "experiment": "ols",
                "params": {
                    "design": {"kind": "gaussian", "dim": 3},
                    "noise_sigma": 1.0,
                    "n": 200,
                    "eta": 1.0,
                    "epsilon": 0.1,
                    "delta": 0.1,
                },
                "trials": 10,
            }
        )
        report = run(config, 1)
        assert report.experiment == "ols"
        assert report.params["p"] == 3
