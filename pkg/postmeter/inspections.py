"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any, final

from .const import LOGGER, VALIDATION_G_DELTAS, VALIDATION_THETA_STEP_DEG
from .forward import PERFECT_SETUP, OpticalSetup
from .qcore import SAME, SIGMA3
from .util import async_gather_in_executor, load_plugin_modules, theta_grid_deg

if TYPE_CHECKING:
    from collections.abc import Iterator

    from .qcore import PostSelectionMode

VALIDATION_MODES = (SAME, SIGMA3)
VALIDATION_SETUPS = (("reference", OpticalSetup()), ("perfect", PERFECT_SETUP))


def validation_grid() -> Iterator[tuple[str, OpticalSetup, PostSelectionMode, float, float]]:
    """Yield (setup label, setup, mode, theta_i, g delta) over the validation grid."""
    thetas = theta_grid_deg(0.0, 180.0, VALIDATION_THETA_STEP_DEG)
    for label, setup in VALIDATION_SETUPS:
        for mode in VALIDATION_MODES:
            for theta_deg in thetas:
                for g_delta in VALIDATION_G_DELTAS:
                    yield label, setup, mode, math.radians(theta_deg), g_delta


@dataclass(frozen=True, kw_only=True)
class InspectionIssue:
    """A numerical invariant found violated."""

    inspection: str
    issue_id: str
    message: str
    deviation: float = math.nan
    data: dict[str, Any] = field(default_factory=dict)

    def __str__(self) -> str:
        """Return the issue as one line."""
        return f"{self.inspection}_{self.issue_id}: {self.message}"


class AbstractPostmeterInspection(ABC):
    """Abstract base class to hold a Postmeter inspection."""

    inspection: str
    description: str

    issues: list[InspectionIssue]

    def __init__(self) -> None:
        """Initialize the inspection."""
        self.issues = []

    @final
    def create_issue(
        self,
        *,
        issue_id: str,
        message: str,
        deviation: float = math.nan,
        data: dict[str, Any] | None = None,
    ) -> None:
        """Create an issue."""
        LOGGER.debug("Postmeter inspection %s raised: %s", self.inspection, message)
        self.issues.append(
            InspectionIssue(
                inspection=self.inspection,
                issue_id=issue_id,
                message=message,
                deviation=deviation,
                data=data or {},
            )
        )

    @abstractmethod
    def inspect(self) -> None:
        """Check the invariant and create an issue for every violation."""
        raise NotImplementedError

    @final
    def activate(self) -> list[InspectionIssue]:
        """Run the inspection from scratch and return its issues."""
        self.issues.clear()
        self.inspect()
        LOGGER.debug(
            "Postmeter inspection %s finished with %s issues",
            self.inspection,
            len(self.issues),
        )
        return list(self.issues)


@dataclass
class PostmeterInspectionManager:
    """Class to manage Postmeter inspections."""

    _inspections: list[AbstractPostmeterInspection] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Post initialization."""
        LOGGER.debug("Postmeter inspection manager initialized")

    def setup(self) -> None:
        """Load every inspection module."""
        LOGGER.debug("Setting up Postmeter inspections")
        for module in load_plugin_modules(__package__, Path(__file__).parent, "checks/*.py"):
            self.register_inspection(module.PostmeterInspection())

    def register_inspection(self, inspection: AbstractPostmeterInspection) -> None:
        """Register a Postmeter inspection."""
        LOGGER.debug("Registering Postmeter inspection: %s", inspection.inspection)
        self._inspections.append(inspection)

    @property
    def inspections(self) -> list[AbstractPostmeterInspection]:
        """Return the registered inspections."""
        return list(self._inspections)

    async def async_run(self, workers: int = 1) -> list[InspectionIssue]:
        """Run every inspection and return all issues, in registration order."""
        results = await async_gather_in_executor(
            [inspection.activate for inspection in self._inspections],
            workers,
        )
        return [issue for issues in results for issue in issues]
