"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import math

from ..const import (
    CLOSURE_TOLERANCE,
    DEFAULT_NU0,
    DEFAULT_NU_HALF,
    REFERENCE_EPSILON,
    REFERENCE_P_DEPH,
)
from ..forward import OpticalSetup, visibility
from ..inspections import AbstractPostmeterInspection
from ..qcore import noise_from_visibilities


class PostmeterInspection(AbstractPostmeterInspection):
    """Visibilities map onto the noise model and back."""

    inspection = "visibility_roundtrip"
    description = "(nu0, nu_half) -> (epsilon, p) -> (nu0, nu_half)"

    def inspect(self) -> None:
        """Check the mapping at the reference visibilities."""
        noise = noise_from_visibilities(DEFAULT_NU0, DEFAULT_NU_HALF)
        setup = OpticalSetup(nu0=DEFAULT_NU0, nu_half=DEFAULT_NU_HALF)
        checks = {
            "epsilon": (noise.epsilon, REFERENCE_EPSILON),
            "p_deph": (noise.p_deph, REFERENCE_P_DEPH),
            "nu0": (noise.visibilities()[0], DEFAULT_NU0),
            "nu_half": (noise.visibilities()[1], DEFAULT_NU_HALF),
            "visibility_0": (visibility(0.0, setup), DEFAULT_NU0),
            "visibility_half": (visibility(math.pi / 2.0, setup), DEFAULT_NU_HALF),
        }
        for name, (value, expected) in checks.items():
            if (deviation := abs(value - expected)) > CLOSURE_TOLERANCE:
                self.create_issue(
                    issue_id=name,
                    message=f"{name}={value!r} differs from {expected!r} by {deviation:.3e}",
                    deviation=deviation,
                )
