"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..const import DECOMPOSITION_TOLERANCE, P_FLOOR
from ..exceptions import DegeneratePostSelectionError
from ..fisher import (
    fisher_multinomial,
    fisher_postselection,
    fisher_split_conditional,
)
from ..forward import postselection_probability
from ..inspections import AbstractPostmeterInspection, validation_grid


class PostmeterInspection(AbstractPostmeterInspection):
    """The three-outcome information splits into post-selection and meter parts."""

    inspection = "fisher_decomposition"
    description = "F_multinomial = p_f F_split + F_pf"

    def inspect(self) -> None:
        """Check the identity over the validation grid."""
        for label, setup, mode, theta_i, g_delta in validation_grid():
            p_f = postselection_probability(g_delta, theta_i, mode, setup)
            if p_f < P_FLOOR:
                continue
            try:
                multinomial = fisher_multinomial(g_delta, theta_i, mode, setup)
                decomposed = p_f * fisher_split_conditional(
                    g_delta, theta_i, mode, setup
                ) + fisher_postselection(g_delta, theta_i, mode, setup)
            except DegeneratePostSelectionError:
                continue

            scale = max(abs(multinomial), abs(decomposed), P_FLOOR)
            if (deviation := abs(multinomial - decomposed) / scale) > DECOMPOSITION_TOLERANCE:
                theta_deg = math.degrees(theta_i)
                self.create_issue(
                    issue_id=f"{label}_{mode.name}_{theta_deg:.0f}_{g_delta:g}",
                    message=(
                        f"Information decomposition off by {deviation:.3e} relative "
                        f"({label}, {mode.name}, theta_i={theta_deg:.0f} deg, "
                        f"g delta={g_delta:g})"
                    ),
                    deviation=deviation,
                )
