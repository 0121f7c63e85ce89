"""Shared fixtures for the Postmeter tests."""

from __future__ import annotations

import pytest

from postmeter.config import ExperimentConfig
from postmeter.forward import PERFECT_SETUP, OpticalSetup


@pytest.fixture
def reference_setup() -> OpticalSetup:
    """Return the reference bench with the measured visibilities."""
    return OpticalSetup()


@pytest.fixture
def perfect_setup() -> OpticalSetup:
    """Return the reference bench with perfect visibilities."""
    return PERFECT_SETUP


@pytest.fixture
def small_config(tmp_path) -> ExperimentConfig:
    """Return a configuration small enough for a quick sweep."""
    return ExperimentConfig.from_mapping(
        {
            "theta_grid_deg": [100.0, 150.0],
            "n_photons": 10_000,
            "n_reps": 5,
            "master_seed": 1234,
            "output_dir": str(tmp_path / "out"),
        }
    )
