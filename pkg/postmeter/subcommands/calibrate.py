"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..commands import AbstractPostmeterExperimentCommand
from ..const import EXIT_OK
from ..experiment import calibration_table
from ..output import emit

if TYPE_CHECKING:
    from ..config import ExperimentConfig


class PostmeterCommand(AbstractPostmeterExperimentCommand):
    """Emulate the split-detector calibration run."""

    command = "calibrate"
    description = "Estimate the split-detector offset from a zero-coupling run"

    async def async_run(self, config: ExperimentConfig) -> int:
        """Run the calibration and write its table."""
        table = calibration_table(config)
        row = table.rows[0]
        print(  # noqa: T201
            f"d0 = {row['d0_hat']:.6e} m +- {row['standard_error']:.2e} m"
        )
        for path in emit(table, config.format, config.output_dir):
            print(path)  # noqa: T201
        return EXIT_OK
