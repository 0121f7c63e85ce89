"""Tests for the experiment configuration."""

from __future__ import annotations

import math

import pytest

from postmeter.config import ExperimentConfig, load_config, read_config_file
from postmeter.estimator import EstimatorKind, LikelihoodVariant
from postmeter.exceptions import ConfigError
from postmeter.qcore import SAME, SIGMA3


def test_defaults():
    config = ExperimentConfig.from_mapping({})
    assert len(config.theta_grid_deg) == 37
    assert config.theta_grid_deg[-1] == 180.0
    assert config.theta_grid[-1] == pytest.approx(math.pi)
    assert config.postselection_modes == (SAME, SIGMA3)
    assert config.estimator_kinds == tuple(EstimatorKind)
    assert config.likelihood_variant is LikelihoodVariant.EXACT
    assert config.n_photons == 100_000
    assert config.g_delta_true == 0.1
    assert config.setup().nu_half == 0.966


@pytest.mark.parametrize(
    ("raw", "modes", "estimators"),
    [
        ({"modes": "both", "estimators": "all"}, ("same", "sigma3"), ("ps", "meter", "joint")),
        ({"modes": "SIGMA3", "estimators": "joint"}, ("sigma3",), ("joint",)),
        ({"modes": ["same"], "estimators": ["meter", "ps"]}, ("same",), ("meter", "ps")),
    ],
)
def test_name_expansion(raw, modes, estimators):
    config = ExperimentConfig.from_mapping(raw)
    assert config.modes == modes
    assert config.estimators == estimators


@pytest.mark.parametrize(
    "raw",
    [
        {"n_reps": 1},
        {"n_photons": 0},
        {"nu_half": 0.999},
        {"nu0": 0.0},
        {"modes": ["same", "same"]},
        {"modes": "custom"},
        {"estimators": []},
        {"theta_grid_deg": [200.0]},
        {"d0": 1.0},
        {"calibration_offset": -1.0},
        {"master_seed": -1},
        {"delta": math.inf},
        {"format": "xml"},
        {"bogus": 1},
    ],
)
def test_invalid_configuration(raw):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(raw)


def test_as_dict_is_plain():
    data = ExperimentConfig.from_mapping({"theta_grid_deg": [10, 20]}).as_dict()
    assert data["theta_grid_deg"] == [10.0, 20.0]
    assert data["modes"] == ["same", "sigma3"]


def test_read_config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("modes: sigma3\nn_photons: 5000\n", encoding="utf-8")
    assert read_config_file(path) == {"modes": "sigma3", "n_photons": 5000}

    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert read_config_file(empty) == {}


@pytest.mark.parametrize(
    "content",
    ["modes: [same\n", "- 1\n- 2\n"],
)
def test_unreadable_config_file(content, tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("master_seed: 5\nformat: json\n", encoding="utf-8")
    config = load_config(path, {"master_seed": 9, "format": None, "modes": "sigma3"})
    assert config.master_seed == 9
    assert config.format == "json"
    assert config.modes == ("sigma3",)
