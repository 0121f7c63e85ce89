"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import math
from typing import TYPE_CHECKING

from scipy.integrate import quad

from .const import (
    DECOMPOSITION_TOLERANCE,
    LOGGER,
    P_FLOOR,
    QUADRATURE_HALF_WIDTH,
    QUANTUM_FISHER,
    RICHARDSON_STEP,
    RICHARDSON_TOLERANCE,
)
from .exceptions import (
    DegeneratePostSelectionError,
    FisherDecompositionError,
    ZeroInformationError,
)
from .forward import meter_model

if TYPE_CHECKING:
    from .forward import MeterModel, OpticalSetup
    from .qcore import PostSelectionMode


class MeterKind(StrEnum):
    """Meter readout a bound refers to."""

    FULL_K = "full_k"
    SPLIT = "split"


@dataclass(frozen=True, kw_only=True)
class FisherBreakdown:
    """Information about g delta, every entry reported as F delta^2."""

    f_postselection: float
    f_meter_conditional: float
    f_split_conditional: float
    f_total: float
    f_total_split: float
    f_multinomial: float
    f_quantum: float
    p_f: float
    meter_kind: MeterKind = MeterKind.FULL_K

    @property
    def f_bound(self) -> float:
        """Return the total information for the labelled meter readout."""
        if self.meter_kind is MeterKind.SPLIT:
            return self.f_total_split
        return self.f_total

    @property
    def meter_information_fraction(self) -> float:
        """Return the share of the split total carried by the meter."""
        if self.f_total_split <= 0.0:
            return 0.0
        return self.p_f * self.f_split_conditional / self.f_total_split


def _postselection_information(model: MeterModel, g_delta: float) -> float:
    """Return [dp_f/dx]^2 / [p_f (1 - p_f)], with its limit at x = 0."""
    p_f = float(model.postselection(g_delta))
    q_f = float(model.rejection(g_delta))
    dp_f = float(model.postselection_derivative(g_delta))
    if dp_f == 0.0:
        # Both p_f and its derivative vanish quadratically on a pure
        # outcome, leaving 8 |cross| in the limit.
        if g_delta == 0.0 and p_f * q_f <= P_FLOOR:
            return 8.0 * abs(model.coefficients.cross)
        return 0.0
    if p_f <= 0.0 or q_f <= 0.0:
        msg = f"Post-selection information undefined at p_f={p_f}"
        raise DegeneratePostSelectionError(msg)
    return dp_f**2 / (p_f * q_f)


def fisher_postselection(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return the information carried by the post-selection counts alone."""
    return _postselection_information(meter_model(theta_i, mode, setup), g_delta)


def _density_derivative(model: MeterModel, u: float, g_delta: float, step: float) -> float:
    """Return the central difference of the conditional density."""
    upper = float(model.density(u, g_delta + step))
    lower = float(model.density(u, g_delta - step))
    return (upper - lower) / (2.0 * step)


def _meter_information(model: MeterModel, g_delta: float) -> float:
    """Integrate (d rho / dx)^2 / rho over the conditional meter density."""
    for shifted in (g_delta - RICHARDSON_STEP, g_delta, g_delta + RICHARDSON_STEP):
        if (p_f := float(model.postselection(shifted))) < P_FLOOR:
            msg = f"Meter information undefined at p_f={p_f:.3e}"
            raise DegeneratePostSelectionError(msg)

    disagreement = 0.0

    def _integrand(u: float) -> float:
        nonlocal disagreement
        rho = float(model.density(u, g_delta))
        if rho <= 0.0:
            return 0.0
        coarse = _density_derivative(model, u, g_delta, RICHARDSON_STEP)
        fine = _density_derivative(model, u, g_delta, RICHARDSON_STEP / 2.0)
        extrapolated = (4.0 * fine - coarse) / 3.0
        disagreement = max(disagreement, abs(extrapolated - fine))
        return extrapolated**2 / rho

    half_width = QUADRATURE_HALF_WIDTH + abs(g_delta)
    information, error = quad(
        _integrand,
        -half_width,
        half_width,
        points=sorted({-g_delta, 0.0, g_delta}),
        epsabs=1e-13,
        epsrel=1e-10,
        limit=200,
    )
    if disagreement > RICHARDSON_TOLERANCE:
        LOGGER.debug(
            "Richardson steps disagree by %.3e at g delta=%s",
            disagreement,
            g_delta,
        )
    LOGGER.debug("Meter information %.12g (quadrature error %.3e)", information, error)
    return max(information, 0.0)


def fisher_meter_conditional(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return the information of a full momentum readout after post-selection."""
    return _meter_information(meter_model(theta_i, mode, setup), g_delta)


def _split_information(model: MeterModel, g_delta: float) -> float:
    """Return the binary left/right information of the conditional meter."""
    p_f = float(model.postselection(g_delta))
    if p_f < P_FLOOR:
        msg = f"Split information undefined at p_f={p_f:.3e}"
        raise DegeneratePostSelectionError(msg)
    p_l, p_r = (float(value) for value in model.halfplanes(g_delta))
    _, dp_r = model.halfplane_derivatives(g_delta)
    dp_f = float(model.postselection_derivative(g_delta))
    q_r = p_r / p_f
    q_l = p_l / p_f
    dq_r = (float(dp_r) * p_f - p_r * dp_f) / p_f**2
    if dq_r == 0.0:
        return 0.0
    if q_r * q_l <= 0.0:
        msg = f"Conditional split outcome underflowed at q_L={q_l}, q_R={q_r}"
        raise DegeneratePostSelectionError(msg)
    return dq_r**2 / (q_r * q_l)


def fisher_split_conditional(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return the information of a split-detector readout after post-selection."""
    return _split_information(meter_model(theta_i, mode, setup), g_delta)


def _multinomial_information(model: MeterModel, g_delta: float) -> float:
    """Return the information of the three outcomes {L, R, rejected}."""
    p_l, p_r = model.halfplanes(g_delta)
    dp_l, dp_r = model.halfplane_derivatives(g_delta)
    q_f = float(model.rejection(g_delta))
    dp_f = float(model.postselection_derivative(g_delta))

    information = 0.0
    for probability, derivative in (
        (float(p_l), float(dp_l)),
        (float(p_r), float(dp_r)),
        (q_f, -dp_f),
    ):
        if probability > 0.0:
            information += derivative**2 / probability
        elif derivative != 0.0:
            msg = f"Outcome with zero probability has derivative {derivative}"
            raise DegeneratePostSelectionError(msg)

    if q_f == 0.0 and dp_f == 0.0:
        information += _postselection_information(model, g_delta) * float(
            model.postselection(g_delta)
        )
    return information


def fisher_multinomial(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return the flat information of the three counted outcomes."""
    return _multinomial_information(meter_model(theta_i, mode, setup), g_delta)


def fisher_total(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    meter_kind: MeterKind = MeterKind.FULL_K,
) -> FisherBreakdown:
    """Assemble F_ps = p_f F_m + F_pf and check the split decomposition."""
    model = meter_model(theta_i, mode, setup)
    p_f = float(model.postselection(g_delta))
    f_postselection = _postselection_information(model, g_delta)
    f_meter = _meter_information(model, g_delta)
    f_split = _split_information(model, g_delta)
    f_multinomial = _multinomial_information(model, g_delta)
    f_total_split = p_f * f_split + f_postselection

    scale = max(abs(f_multinomial), abs(f_total_split), P_FLOOR)
    if abs(f_multinomial - f_total_split) > DECOMPOSITION_TOLERANCE * scale:
        msg = (
            f"Multinomial information {f_multinomial!r} differs from "
            f"p_f F_split + F_pf = {f_total_split!r}"
        )
        raise FisherDecompositionError(msg)

    return FisherBreakdown(
        f_postselection=f_postselection,
        f_meter_conditional=f_meter,
        f_split_conditional=f_split,
        f_total=p_f * f_meter + f_postselection,
        f_total_split=f_total_split,
        f_multinomial=f_multinomial,
        f_quantum=quantum_fisher(setup),
        p_f=p_f,
        meter_kind=meter_kind,
    )


def quantum_fisher(setup: OpticalSetup) -> float:  # noqa: ARG001
    """Return 4 <x^2> in units of delta^2, the same for every bench."""
    return QUANTUM_FISHER


def information_efficiency(breakdown: FisherBreakdown) -> float:
    """Return the fraction of the quantum limit the readout reaches."""
    return breakdown.f_bound / breakdown.f_quantum


def crb(fisher_value: float, n_resources: float) -> float:
    """Return the Cramer-Rao bound 1 / sqrt(n F)."""
    if n_resources < 1:
        msg = f"Cramer-Rao bound needs at least one resource, got {n_resources}"
        raise ValueError(msg)
    if not fisher_value > 0.0:
        msg = f"Cramer-Rao bound needs positive information, got {fisher_value}"
        raise ZeroInformationError(msg)
    return 1.0 / math.sqrt(n_resources * fisher_value)
