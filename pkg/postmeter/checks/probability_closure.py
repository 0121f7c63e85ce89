"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..const import CLOSURE_TOLERANCE
from ..forward import meter_model
from ..inspections import AbstractPostmeterInspection, validation_grid


class PostmeterInspection(AbstractPostmeterInspection):
    """Outcome probabilities add up."""

    inspection = "probability_closure"
    description = "p_L + p_R = p_f and p_f + (1 - p_f) = 1"

    def inspect(self) -> None:
        """Check both closures over the validation grid."""
        for label, setup, mode, theta_i, g_delta in validation_grid():
            model = meter_model(theta_i, mode, setup)
            p_f = float(model.postselection(g_delta))
            p_l, p_r = model.halfplanes(g_delta)
            deviation = max(
                abs(float(p_l) + float(p_r) - p_f),
                abs(p_f + float(model.rejection(g_delta)) - 1.0),
            )
            if deviation > CLOSURE_TOLERANCE:
                theta_deg = math.degrees(theta_i)
                self.create_issue(
                    issue_id=f"{label}_{mode.name}_{theta_deg:.0f}_{g_delta:g}",
                    message=(
                        f"Probabilities miss closure by {deviation:.3e} "
                        f"({label}, {mode.name}, theta_i={theta_deg:.0f} deg, "
                        f"g delta={g_delta:g})"
                    ),
                    deviation=deviation,
                )
