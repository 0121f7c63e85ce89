"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..const import ORACLE_TOLERANCE, P_FLOOR
from ..forward import meter_model
from ..gridoracle import simulate_on_grid
from ..inspections import AbstractPostmeterInspection, validation_grid


class PostmeterInspection(AbstractPostmeterInspection):
    """Compare the closed forms with the brute-force grid evolution."""

    inspection = "oracle_equivalence"
    description = "Grid oracle matches p_f, <k> and the half-plane probabilities"

    def inspect(self) -> None:
        """Run the oracle over the validation grid."""
        for label, setup, mode, theta_i, g_delta in validation_grid():
            oracle = simulate_on_grid(g_delta, theta_i, mode, setup, check_convergence=False)
            model = meter_model(theta_i, mode, setup)
            p_f = float(model.postselection(g_delta))
            p_l, p_r = model.halfplanes(g_delta)
            deviations = {
                "p_f": abs(oracle.p_f - p_f),
                "p_l": abs(oracle.p_l - float(p_l)),
                "p_r": abs(oracle.p_r - float(p_r)),
            }
            if p_f >= P_FLOOR and math.isfinite(oracle.mean_k_delta):
                deviations["mean_k_delta"] = abs(
                    oracle.mean_k_delta - float(model.mean_momentum(g_delta))
                )

            quantity, deviation = max(deviations.items(), key=lambda item: item[1])
            if deviation > ORACLE_TOLERANCE:
                theta_deg = math.degrees(theta_i)
                self.create_issue(
                    issue_id=f"{label}_{mode.name}_{theta_deg:.0f}_{g_delta:g}",
                    message=(
                        f"{quantity} differs from the grid oracle by {deviation:.3e} "
                        f"({label}, {mode.name}, theta_i={theta_deg:.0f} deg, "
                        f"g delta={g_delta:g})"
                    ),
                    deviation=deviation,
                )
