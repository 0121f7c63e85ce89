"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..commands import AbstractPostmeterCommand
from ..const import EXIT_OK, EXIT_PARTIAL_FAILURE
from ..inspections import PostmeterInspectionManager
from ..util import worker_count

if TYPE_CHECKING:
    import argparse


class PostmeterCommand(AbstractPostmeterCommand):
    """Run every numerical inspection and report the issues found."""

    command = "oracle-check"
    description = "Cross-check closed forms against the grid oracle"
    hidden = True

    async def async_handle(self, args: argparse.Namespace) -> int:  # noqa: ARG002
        """Run the inspections."""
        manager = PostmeterInspectionManager()
        manager.setup()
        issues = await manager.async_run(worker_count())
        for issue in issues:
            print(issue)  # noqa: T201
        print(  # noqa: T201
            f"{len(manager.inspections)} inspections, {len(issues)} issues"
        )
        return EXIT_PARTIAL_FAILURE if issues else EXIT_OK
