"""Tests for global parameters and experiment configs."""

from dataclasses import replace

import pytest

import collapse_lab
from collapse_lab.config import (
    ConfigError,
    ExperimentConfig,
    _update_with_defaults,
    parse_key_values,
)

_copied_defaults = replace(collapse_lab.get_global_params())


def setup_function():
    collapse_lab.set_global_params(**vars(_copied_defaults))


def teardown_function():
    collapse_lab.set_global_params(**vars(_copied_defaults))


def test_set_global_params():
    collapse_lab.set_global_params(seed=5, epsilon=1e-3, not_a_param=True)
    params = collapse_lab.get_global_params()
    assert params.seed == 5
    assert params.epsilon == 1e-3
    assert not hasattr(params, "not_a_param")
    assert params.max_steps == _copied_defaults.max_steps


def test_update_with_defaults():
    assert _update_with_defaults(None, "confidence") == 0.99
    assert _update_with_defaults(0.9, "confidence") == 0.9
    collapse_lab.set_global_params(confidence=0.95)
    assert _update_with_defaults(None, "confidence") == 0.95


def test_parse_key_values():
    lines = ["# a comment", "", "a = -5.0", "runs=10  # trailing", "out=x=y"]
    assert dict(parse_key_values(lines)) == {"a": "-5.0", "runs": "10", "out": "x=y"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_key_values(["a=1", "no equals sign"])


def test_load_defaults():
    config = ExperimentConfig.load("born")
    assert config["runs"] == 1500
    assert config["alpha_sq"] == 0.25
    assert config["seed"] == _copied_defaults.seed
    assert config["reflect_at"] is None
    assert config["out"] == "out"


def test_load_file_and_overrides(tmp_path):
    path = tmp_path / "born.cfg"
    path.write_text("alpha_sq = 0.5\nruns = 20\nstep_distribution = normal\n")
    config = ExperimentConfig.load("born", path, {"runs": "40", "seed": 3})
    assert config["alpha_sq"] == 0.5
    assert config["runs"] == 40
    assert config["seed"] == 3
    assert config["step_distribution"] == "normal"


def test_global_seed_is_the_default():
    collapse_lab.set_global_params(seed=77)
    assert ExperimentConfig.load("walk")["seed"] == 77


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="subcommand"):
        ExperimentConfig.load("nonsense")
    with pytest.raises(ConfigError, match="unknown keys"):
        ExperimentConfig.load("born", overrides={"omega": "1"})
    with pytest.raises(ConfigError, match="alpha_sq"):
        ExperimentConfig.load("born", overrides={"alpha_sq": "half"})
    with pytest.raises(ConfigError, match="boolean"):
        ExperimentConfig.load("pattern", overrides={"detector_present": "maybe"})
    with pytest.raises(OSError):
        ExperimentConfig.load("born", tmp_path / "missing.cfg")


@pytest.mark.parametrize(
    "text, expected", [("true", True), ("0", False), ("Yes", True)]
)
def test_boolean_values(text, expected):
    config = ExperimentConfig.load("pattern", overrides={"detector_present": text})
    assert config["detector_present"] is expected


def test_snapshot_replays_as_config(tmp_path):
    config = ExperimentConfig.load("distance", overrides={"shift": "2e-8"})
    snapshot = config.snapshot()
    assert list(snapshot) == sorted(snapshot)
    assert snapshot["shift"] == "2e-08"
    assert "epsilon" not in snapshot
    lines = ["subcommand=distance", "manifest.version=1.0"]
    lines += [f"{key}={value}" for key, value in snapshot.items()]
    path = tmp_path / "manifest.txt"
    path.write_text("\n".join(lines))
    replayed = ExperimentConfig.load("distance", path)
    assert replayed.values == config.values
