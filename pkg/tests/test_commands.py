"""Tests for the command line."""

from __future__ import annotations

import pytest
import yaml

from postmeter.cli import main
from postmeter.commands import PostmeterCommandManager
from postmeter.const import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_PARTIAL_FAILURE
from postmeter.subcommands.calibrate import PostmeterCommand as CalibrateCommand


def _write_config(path, **values):
    path.write_text(yaml.safe_dump(values), encoding="utf-8")
    return path


def test_commands_are_discovered():
    manager = PostmeterCommandManager()
    manager.setup()
    assert set(manager.commands) == {"calibrate", "fisher-curves", "oracle-check", "sweep"}
    with pytest.raises(RuntimeError, match="Duplicate"):
        manager.register_command(CalibrateCommand())


def test_hidden_command_stays_out_of_help():
    manager = PostmeterCommandManager()
    manager.setup()
    help_text = manager.build_parser().format_help()
    assert "sweep" in help_text
    assert "oracle-check" not in help_text


def test_flags_become_overrides():
    manager = PostmeterCommandManager()
    manager.setup()
    args = manager.parse(["sweep", "--seed", "7", "--mode", "both", "--estimator", "ps"])
    overrides = args.command.overrides(args)
    assert overrides["master_seed"] == 7
    assert overrides["modes"] == "both"
    assert overrides["estimators"] == "ps"
    assert overrides["output_dir"] is None


def test_unknown_command_exits():
    with pytest.raises(SystemExit) as err:
        main(["bogus"])
    assert err.value.code == 2


def test_calibrate(tmp_path, capsys):
    assert main(["calibrate", "--out", str(tmp_path), "--format", "json"]) == EXIT_OK
    assert (tmp_path / "calibration.json").exists()
    assert "d0 = " in capsys.readouterr().out


def test_sweep(tmp_path):
    config = _write_config(
        tmp_path / "config.yaml",
        theta_grid_deg=[120.0],
        n_photons=5000,
        n_reps=3,
    )
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(config), "--out", str(out), "--mode", "sigma3"]) == (
        EXIT_OK
    )
    assert (out / "sweep.csv").exists()
    assert (out / "sweep.meta.json").exists()


def test_sweep_reports_failures(tmp_path):
    config = _write_config(
        tmp_path / "config.yaml",
        theta_grid_deg=[90.0],
        modes="same",
        estimators="meter",
        n_photons=1000,
        n_reps=3,
        failure_threshold=0.0,
    )
    assert main(["sweep", "--config", str(config), "--out", str(tmp_path)]) == (
        EXIT_PARTIAL_FAILURE
    )


def test_fisher_curves(tmp_path):
    config = _write_config(tmp_path / "config.yaml", theta_grid_deg=[60.0, 120.0])
    assert main(["fisher-curves", "--config", str(config), "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "fisher_curves.csv").exists()


def test_invalid_config_exits_with_config_error(tmp_path):
    config = _write_config(tmp_path / "config.yaml", n_reps=1)
    assert main(["sweep", "--config", str(config)]) == EXIT_CONFIG_ERROR


def test_invalid_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("POSTMETER_WORKERS", "none")
    config = _write_config(tmp_path / "config.yaml", theta_grid_deg=[120.0], n_reps=2)
    assert main(["sweep", "--config", str(config), "--out", str(tmp_path)]) == (
        EXIT_CONFIG_ERROR
    )


@pytest.mark.slow
def test_oracle_check(capsys):
    assert main(["oracle-check"]) == EXIT_OK
    assert "7 inspections, 0 issues" in capsys.readouterr().out
