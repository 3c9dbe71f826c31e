"""Tests for harness configuration loading and validation."""

import json

import pytest

from core.enums import ProfileId
from core.profiles import default_profiles
from harness.config import (
    CONFIG_ENV,
    DEFAULT_CONFIG_PATH,
    CompatConfig,
    ConfigError,
    HarnessConfig,
    load_config,
    resolve_config_path,
)


@pytest.fixture(autouse=True)
def no_config_env(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)


def test_default_file_matches_model_defaults():
    config = load_config()
    assert config.seeds == [42, 43, 44, 45, 46]
    assert config.e2_seeds == list(range(42, 57))
    assert config.families == ["grasp", "align", "place"]
    assert config.profile is ProfileId.SIM
    assert config.active_profile.profile_id is ProfileId.SIM
    assert config.compat.weights == CompatConfig().weights
    assert config.monitor.window == 20


def test_yaml_config(tmp_path):
    path = tmp_path / "harness.yaml"
    path.write_text("seeds: [7, 8]\nfamilies: [align]\ne3_family: align\nrounds: 3\n")
    config = load_config(path)
    assert config.seeds == [7, 8]
    assert config.families == ["align"]
    assert config.rounds == 3


def test_overrides_replace_file_values_and_none_is_ignored():
    config = load_config(seeds=[1, 2], families=None)
    assert config.seeds == [1, 2]
    assert config.families == ["grasp", "align", "place"]


def test_env_var_resolution(tmp_path, monkeypatch):
    path = tmp_path / "env.json"
    path.write_text(json.dumps({"seeds": [99]}))
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert resolve_config_path() == path
    assert load_config().seeds == [99]
    assert resolve_config_path(DEFAULT_CONFIG_PATH) == DEFAULT_CONFIG_PATH


def test_unsupported_suffix(tmp_path):
    path = tmp_path / "harness.toml"
    path.write_text("seeds = [1]\n")
    with pytest.raises(ConfigError, match="Unsupported"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="Cannot read"):
        load_config(tmp_path / "missing.json")


def test_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{seeds: ")
    with pytest.raises(ConfigError, match="Cannot parse"):
        load_config(path)


def test_top_level_must_be_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 42\n- 43\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(path)


@pytest.mark.parametrize(
    "override",
    [
        {"seeds": []},
        {"seeds": [42, 42]},
        {"seeds": [-1]},
        {"families": []},
        {"sensitivity_factors": [0.0, 1.0]},
        {"e3_family": "stack"},
        {"compat": {"weights": {"interface": 0.5, "policy": 0.5, "behavioral": 0.5, "recovery": 0.5}}},
        {"compat": {"weights": {"interface": 1.0}}},
    ],
)
def test_validation_errors_become_config_errors(override):
    with pytest.raises(ConfigError, match="Invalid config"):
        load_config(**override)


def test_non_monotone_profiles_rejected():
    profiles = default_profiles()
    sim = profiles[ProfileId.SIM]
    profiles[ProfileId.REAL] = profiles[ProfileId.REAL].model_copy(
        update={"dim_thresholds": sim.scaled(0.9).dim_thresholds}
    )
    with pytest.raises(ValueError, match="not monotone"):
        HarnessConfig(profiles=profiles)


def test_profile_must_be_in_profile_set():
    profiles = {ProfileId.SIM: default_profiles()[ProfileId.SIM]}
    with pytest.raises(ValueError, match="not in the profile set"):
        HarnessConfig(profiles=profiles, profile=ProfileId.REAL)


def test_json_round_trip():
    config = HarnessConfig(seeds=[3, 5], families=["place"], e3_family="place")
    restored = HarnessConfig.model_validate(json.loads(config.to_json()))
    assert restored == config
