"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..commands import AbstractPostmeterExperimentCommand
from ..const import EXIT_OK
from ..experiment import async_fisher_curves
from ..output import emit
from ..util import worker_count

if TYPE_CHECKING:
    from ..config import ExperimentConfig


class PostmeterCommand(AbstractPostmeterExperimentCommand):
    """Tabulate forward predictions and Fisher bounds over the angle grid."""

    command = "fisher-curves"
    description = "Fisher information, bounds and efficiency over the angle grid"

    async def async_run(self, config: ExperimentConfig) -> int:
        """Compute the curves and write their table."""
        table = await async_fisher_curves(config, worker_count())
        for path in emit(table, config.format, config.output_dir):
            print(path)  # noqa: T201
        return EXIT_OK
