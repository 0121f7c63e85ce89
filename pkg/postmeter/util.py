"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import asyncio
from concurrent.futures import ThreadPoolExecutor
import importlib
import math
import os
from pathlib import Path
from typing import TYPE_CHECKING, TypeVar

import numpy as np

from .const import ENV_WORKERS, LOGGER
from .exceptions import ConfigError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence
    from types import ModuleType

_T = TypeVar("_T")


def derive_seed(master_seed: int, *keys: int) -> int:
    """Return a 64-bit seed for the stream (master_seed, *keys).

    Streams depend only on their keys, never on the order they are drawn.
    """
    sequence = np.random.SeedSequence((master_seed, *keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_generator(seed: int) -> np.random.Generator:
    """Return the PCG64 generator for a derived seed."""
    return np.random.Generator(np.random.PCG64(seed))


def worker_count() -> int:
    """Return the worker count from the environment, serial by default."""
    raw = os.environ.get(ENV_WORKERS, "1")
    try:
        workers = int(raw)
    except ValueError as err:
        msg = f"{ENV_WORKERS} must be a positive integer, got {raw!r}"
        raise ConfigError(msg) from err
    if workers < 1:
        msg = f"{ENV_WORKERS} must be a positive integer, got {raw!r}"
        raise ConfigError(msg)
    return workers


def theta_grid_deg(start: float, stop: float, step: float) -> list[float]:
    """Return an inclusive angle grid in degrees."""
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [start + index * step for index in range(count)]


async def async_gather_in_executor(
    jobs: Sequence[Callable[[], _T]],
    workers: int = 1,
) -> list[_T]:
    """Run blocking jobs on a thread pool, results in submission order."""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(
            await asyncio.gather(
                *(loop.run_in_executor(executor, job) for job in jobs)
            )
        )


def load_plugin_modules(package: str, anchor: Path, pattern: str) -> list[ModuleType]:
    """Import every plugin module below anchor matching pattern, sorted by path."""
    modules: list[ModuleType] = []
    for module_file in sorted(anchor.rglob(pattern)):
        if module_file.name == "__init__.py":
            continue
        module_path = str(module_file.relative_to(anchor))[:-3].replace("/", ".")
        LOGGER.debug("Loading Postmeter plugin: %s", module_path)
        modules.append(importlib.import_module(f".{module_path}", package))
    return modules

