"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import asyncio
import logging
from typing import TYPE_CHECKING

from .commands import PostmeterCommandManager

if TYPE_CHECKING:
    from collections.abc import Sequence

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the postmeter command line and return its exit code."""
    manager = PostmeterCommandManager()
    manager.setup()
    args = manager.parse(argv)
    logging.basicConfig(
        level=LOG_LEVELS[min(args.verbose, len(LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return asyncio.run(manager.async_run(args))
