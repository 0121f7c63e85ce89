"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..exceptions import InadequateGridError
from ..gridoracle import simulate_on_grid
from ..inspections import (
    VALIDATION_MODES,
    VALIDATION_SETUPS,
    AbstractPostmeterInspection,
)

THETAS_DEG = (60.0, 95.0, 120.0)
G_DELTA = 0.1


class PostmeterInspection(AbstractPostmeterInspection):
    """Check the default grid is converged under doubling."""

    inspection = "grid_convergence"
    description = "Doubling the oracle grid changes nothing above 1e-9"

    def inspect(self) -> None:
        """Run the doubling check on a few representative points."""
        for label, setup in VALIDATION_SETUPS:
            for mode in VALIDATION_MODES:
                for theta_deg in THETAS_DEG:
                    try:
                        simulate_on_grid(G_DELTA, math.radians(theta_deg), mode, setup)
                    except InadequateGridError as err:
                        self.create_issue(
                            issue_id=f"{label}_{mode.name}_{theta_deg:.0f}",
                            message=str(err),
                        )
