"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..const import QCRB_G_DELTA, QCRB_TOLERANCE
from ..fisher import fisher_total
from ..forward import PERFECT_SETUP
from ..inspections import VALIDATION_MODES, AbstractPostmeterInspection
from ..util import theta_grid_deg


class PostmeterInspection(AbstractPostmeterInspection):
    """A pure meter with full readout reaches the quantum limit at weak coupling."""

    inspection = "qcrb_saturation"
    description = "F_total delta^2 = 4 at perfect visibility and small g delta"

    def inspect(self) -> None:
        """Compare the full-readout information with the quantum value."""
        for mode in VALIDATION_MODES:
            for theta_deg in theta_grid_deg(100.0, 170.0, 10.0):
                breakdown = fisher_total(
                    QCRB_G_DELTA, math.radians(theta_deg), mode, PERFECT_SETUP
                )
                deviation = abs(breakdown.f_total - breakdown.f_quantum)
                if deviation > QCRB_TOLERANCE:
                    self.create_issue(
                        issue_id=f"{mode.name}_{theta_deg:.0f}",
                        message=(
                            f"F_total={breakdown.f_total:.6f} misses the quantum "
                            f"value by {deviation:.3e} ({mode.name}, "
                            f"theta_i={theta_deg:.0f} deg)"
                        ),
                        deviation=deviation,
                    )
