"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..commands import AbstractPostmeterExperimentCommand
from ..const import EXIT_OK, EXIT_PARTIAL_FAILURE, LOGGER
from ..experiment import async_run_sweep
from ..output import emit
from ..util import worker_count

if TYPE_CHECKING:
    from ..config import ExperimentConfig


class PostmeterCommand(AbstractPostmeterExperimentCommand):
    """Estimate g delta over the angle grid and compare with the bounds."""

    command = "sweep"
    description = "Monte-Carlo sweep of every estimator over the angle grid"
    sweeps_estimators = True

    async def async_run(self, config: ExperimentConfig) -> int:
        """Run the sweep and write the table."""
        table = await async_run_sweep(config, worker_count())
        for path in emit(table, config.format, config.output_dir):
            print(path)  # noqa: T201

        if (fraction := table.failure_fraction) > config.failure_threshold:
            LOGGER.warning(
                "Failed trial fraction %.3f exceeds the threshold %.3f",
                fraction,
                config.failure_threshold,
            )
            return EXIT_PARTIAL_FAILURE
        return EXIT_OK
