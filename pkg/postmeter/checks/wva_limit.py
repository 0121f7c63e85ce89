"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..const import WVA_G_DELTA, WVA_TOLERANCE
from ..forward import PERFECT_SETUP, meter_model
from ..inspections import AbstractPostmeterInspection, validation_grid
from ..qcore import SAME, SIGMA3
from ..util import theta_grid_deg

# Same post-selection may only reach |g| itself.
SAME_SLACK = 1e-12


class PostmeterInspection(AbstractPostmeterInspection):
    """Mean shifts follow the weak value in the weak regime."""

    inspection = "wva_limit"
    description = "<k>/g = -1/cos(theta_i) for sigma3, |<k>| <= |g| for same"

    def inspect(self) -> None:
        """Check amplification and the unamplified bound."""
        for theta_deg in theta_grid_deg(100.0, 170.0, 10.0):
            theta_i = math.radians(theta_deg)
            model = meter_model(theta_i, SIGMA3, PERFECT_SETUP)
            ratio = float(model.mean_momentum(WVA_G_DELTA)) / WVA_G_DELTA
            expected = -1.0 / math.cos(theta_i)
            if (deviation := abs(ratio - expected) / abs(expected)) > WVA_TOLERANCE:
                self.create_issue(
                    issue_id=f"sigma3_{theta_deg:.0f}",
                    message=(
                        f"Amplification {ratio:.6g} differs from the weak value "
                        f"{expected:.6g} at theta_i={theta_deg:.0f} deg"
                    ),
                    deviation=deviation,
                )

        for label, setup, mode, theta_i, g_delta in validation_grid():
            if mode is not SAME or g_delta == 0.0:
                continue
            shift = abs(float(meter_model(theta_i, mode, setup).mean_momentum(g_delta)))
            if shift > g_delta * (1.0 + SAME_SLACK):
                theta_deg = math.degrees(theta_i)
                self.create_issue(
                    issue_id=f"same_{label}_{theta_deg:.0f}_{g_delta:g}",
                    message=(
                        f"Same post-selection shifted the meter by {shift:.6g} > "
                        f"{g_delta:g} ({label}, theta_i={theta_deg:.0f} deg)"
                    ),
                    deviation=shift - g_delta,
                )
