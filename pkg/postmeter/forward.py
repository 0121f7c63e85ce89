"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import TYPE_CHECKING
import warnings

import numpy as np
from scipy.special import ndtr

from .const import (
    DEFAULT_DELTA,
    DEFAULT_FOCAL_LENGTH,
    DEFAULT_NU0,
    DEFAULT_NU_HALF,
    DEFAULT_WAVELENGTH,
    LINEARIZATION_LIMIT,
    LOGGER,
    P_FLOOR,
    SQRT_2PI,
    TAU,
)
from .exceptions import DegeneratePostSelectionError, InvalidSetupError
from .qcore import (
    SAME,
    NoiseModel,
    PostSelectionKind,
    PostSelectionMode,
    branch_amplitudes,
    make_state,
    noise_from_visibilities,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    FloatArray = NDArray[np.float64]


class LinearizationWarning(UserWarning):
    """The linear split-detector model is used outside its regime."""


@dataclass(frozen=True, kw_only=True)
class OpticalSetup:
    """Optical bench, visibilities and detector offset, in SI units."""

    delta: float = DEFAULT_DELTA
    wavelength: float = DEFAULT_WAVELENGTH
    focal_length: float = DEFAULT_FOCAL_LENGTH
    nu0: float = DEFAULT_NU0
    nu_half: float = DEFAULT_NU_HALF
    d0: float = 0.0
    noise: NoiseModel = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate the bench and derive the noise model."""
        for name in ("delta", "wavelength", "focal_length"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                msg = f"Optical constant {name} must be positive, got {value}"
                raise InvalidSetupError(msg)
        if not math.isfinite(self.d0) or abs(self.d0) >= self.delta_f:
            msg = (
                f"Detector offset d0={self.d0} must be smaller than the focal "
                f"spot delta_f={self.delta_f}"
            )
            raise InvalidSetupError(msg)
        object.__setattr__(
            self, "noise", noise_from_visibilities(self.nu0, self.nu_half)
        )

    @property
    def k0(self) -> float:
        """Return the wave number 2pi/lambda."""
        return TAU / self.wavelength

    @property
    def sigma_k(self) -> float:
        """Return the momentum spread 1/(2 delta)."""
        return 1.0 / (2.0 * self.delta)

    @property
    def delta_f(self) -> float:
        """Return the focal spot size f/(2 k0 delta)."""
        return self.focal_length / (2.0 * self.k0 * self.delta)

    @property
    def offset(self) -> float:
        """Return d0 in units of the focal spot."""
        return self.d0 / self.delta_f

    def with_offset(self, d0: float) -> OpticalSetup:
        """Return the same bench with another detector offset."""
        return replace(self, d0=d0)


PERFECT_SETUP = OpticalSetup(nu0=1.0, nu_half=1.0)


@dataclass(frozen=True, kw_only=True)
class ForwardPoint:
    """All model predictions at one coupling."""

    g: float
    g_delta: float
    p_f: float
    mean_k: float
    d: float
    p_l: float
    p_r: float


@dataclass(frozen=True, kw_only=True)
class MeterCoefficients:
    """Branch sums of the post-selected meter.

    h_weight multiplies the -g displaced Gaussian, v_weight the +g one and
    cross the overlap term exp(-2 (g delta)^2).
    """

    h_weight: float
    v_weight: float
    cross: float
    p_zero: float
    q_zero: float

    @property
    def balance(self) -> float:
        """Return the g independent part of p_f."""
        return self.h_weight + self.v_weight

    @property
    def shift(self) -> float:
        """Return v_weight - h_weight, the numerator of the mean shift."""
        return self.v_weight - self.h_weight


@dataclass(frozen=True)
class MeterModel:
    """Vectorized closed forms over the dimensionless coupling x = g delta.

    Momenta are expressed as u = k delta, where the meter spread is 1/2,
    and the detector offset is measured in focal spots.
    """

    coefficients: MeterCoefficients
    offset: float = 0.0

    def overlap(self, x: ArrayLike) -> FloatArray:
        """Return exp(-2 x^2)."""
        return np.exp(-2.0 * np.square(x))

    def postselection(self, x: ArrayLike) -> FloatArray:
        """Return p_f(x)."""
        c = self.coefficients
        return np.clip(c.p_zero + c.cross * np.expm1(-2.0 * np.square(x)), 0.0, 1.0)

    def rejection(self, x: ArrayLike) -> FloatArray:
        """Return 1 - p_f(x) without cancellation."""
        c = self.coefficients
        return np.clip(c.q_zero - c.cross * np.expm1(-2.0 * np.square(x)), 0.0, 1.0)

    def postselection_derivative(self, x: ArrayLike) -> FloatArray:
        """Return dp_f/dx."""
        x = np.asarray(x, dtype=float)
        return -4.0 * x * self.coefficients.cross * self.overlap(x)

    def mean_momentum(self, x: ArrayLike) -> FloatArray:
        """Return <k> delta, the conditional mean momentum."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return x * self.coefficients.shift / self.postselection(x)

    def halfplanes(self, x: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """Return the exact unconditional (p_L, p_R)."""
        x = np.asarray(x, dtype=float)
        c = self.coefficients
        s0 = self.offset
        cross = c.cross * self.overlap(x)
        p_r = c.h_weight * ndtr(s0 - 2.0 * x) + c.v_weight * ndtr(s0 + 2.0 * x) + cross * ndtr(s0)
        p_l = c.h_weight * ndtr(2.0 * x - s0) + c.v_weight * ndtr(-2.0 * x - s0) + cross * ndtr(-s0)
        return p_l, p_r

    def halfplanes_linearized(self, x: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """Return (p_L, p_R) from the first order split-detector relation."""
        x = np.asarray(x, dtype=float)
        p_f = self.postselection(x)
        p_r = p_f / 2.0 + (2.0 * x * self.coefficients.shift + self.offset * p_f) / SQRT_2PI
        return p_f - p_r, p_r

    def halfplane_derivatives(
        self,
        x: ArrayLike,
        *,
        linearized: bool = False,
    ) -> tuple[FloatArray, FloatArray]:
        """Return (dp_L/dx, dp_R/dx)."""
        x = np.asarray(x, dtype=float)
        c = self.coefficients
        s0 = self.offset
        dp_f = self.postselection_derivative(x)
        if linearized:
            dp_r = dp_f / 2.0 + (2.0 * c.shift + s0 * dp_f) / SQRT_2PI
        else:
            dp_r = (
                -2.0 * c.h_weight * _gaussian(s0 - 2.0 * x)
                + 2.0 * c.v_weight * _gaussian(s0 + 2.0 * x)
                + dp_f * ndtr(s0)
            )
        return dp_f - dp_r, dp_r

    def imbalance(self, x: ArrayLike, *, linearized: bool = False) -> FloatArray:
        """Return the conditional split imbalance (p_R - p_L) / p_f."""
        p_l, p_r = self.halfplanes_linearized(x) if linearized else self.halfplanes(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (p_r - p_l) / (p_r + p_l)

    def density(self, u: ArrayLike, x: float) -> FloatArray:
        """Return the conditional meter density over u = k delta."""
        u = np.asarray(u, dtype=float)
        c = self.coefficients
        mixture = (
            c.h_weight * _meter_profile(u + x)
            + c.v_weight * _meter_profile(u - x)
            + c.cross * math.exp(-2.0 * x**2) * _meter_profile(u)
        )
        return mixture / float(self.postselection(x))


def _gaussian(z: ArrayLike) -> FloatArray:
    """Return the standard normal density."""
    return np.exp(-np.square(z) / 2.0) / SQRT_2PI


def _meter_profile(u: ArrayLike) -> FloatArray:
    """Return the meter momentum density, a normal of deviation 1/2."""
    return np.exp(-2.0 * np.square(u)) * math.sqrt(2.0 / math.pi)


def meter_coefficients(
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> MeterCoefficients:
    """Return the branch sums for an initial angle and post-selection."""
    if not mode.is_closed_form:
        decomposition = branch_amplitudes(make_state(theta_i), mode, setup.noise)
        h_weight, v_weight, cross = decomposition.sums()
        p_zero = h_weight + v_weight + cross
        return MeterCoefficients(
            h_weight=h_weight,
            v_weight=v_weight,
            cross=cross,
            p_zero=min(max(p_zero, 0.0), 1.0),
            q_zero=min(max(1.0 - p_zero, 0.0), 1.0),
        )

    sign = 1.0 if mode.kind is PostSelectionKind.SAME else -1.0
    cos2 = math.cos(theta_i) ** 2
    sin2 = math.sin(theta_i) ** 2
    balance = 0.5 * (1.0 + setup.nu0 * cos2)
    shift = -0.5 * (1.0 + setup.nu0) * math.cos(theta_i)
    return MeterCoefficients(
        h_weight=(balance - shift) / 2.0,
        v_weight=(balance + shift) / 2.0,
        cross=sign * 0.5 * setup.nu_half * sin2,
        p_zero=min(max(0.5 * (1.0 + setup.nu0 * cos2 + sign * setup.nu_half * sin2), 0.0), 1.0),
        q_zero=min(max(0.5 * (1.0 - setup.nu0 * cos2 - sign * setup.nu_half * sin2), 0.0), 1.0),
    )


def meter_model(
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> MeterModel:
    """Return the vectorized closed forms for one configuration."""
    return MeterModel(meter_coefficients(theta_i, mode, setup), setup.offset)


def _require_postselection(p_f: float) -> None:
    """Fail when conditional meter quantities are undefined."""
    if p_f < P_FLOOR:
        msg = f"Post-selection probability {p_f:.3e} is below the floor {P_FLOOR:.0e}"
        raise DegeneratePostSelectionError(msg)


def postselection_probability(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return p_f = 1/2 [1 + nu0 cos^2 +- nu_half sin^2 exp(-2 (g delta)^2)]."""
    return float(meter_model(theta_i, mode, setup).postselection(g_delta))


def postselection_probability_derivative(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return dp_f/d(g delta)."""
    return float(meter_model(theta_i, mode, setup).postselection_derivative(g_delta))


def visibility(theta_i: float, setup: OpticalSetup) -> float:
    """Return the interference visibility of a prepared state, 2 p_f(0) - 1."""
    return 2.0 * postselection_probability(0.0, theta_i, SAME, setup) - 1.0


def expected_postselected_photons(
    n_photons: float,
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return the mean number of photons reaching the meter."""
    return n_photons * postselection_probability(g_delta, theta_i, mode, setup)


def mean_momentum(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> float:
    """Return <k> in the post-selected meter, in 1/m."""
    model = meter_model(theta_i, mode, setup)
    _require_postselection(float(model.postselection(g_delta)))
    return float(model.mean_momentum(g_delta)) / setup.delta


def focal_displacement(mean_k: float, setup: OpticalSetup) -> float:
    """Return the beam center on the detector, f <k> / k0 + d0."""
    return setup.focal_length * mean_k / setup.k0 + setup.d0


def meter_k_density(
    k: ArrayLike,
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> FloatArray:
    """Return the post-selected meter density over k in 1/m, in m."""
    model = meter_model(theta_i, mode, setup)
    _require_postselection(float(model.postselection(g_delta)))
    u = np.asarray(k, dtype=float) * setup.delta
    return model.density(u, g_delta) * setup.delta


def halfplane_probabilities(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> tuple[float, float]:
    """Return the exact unconditional (p_L, p_R)."""
    model = meter_model(theta_i, mode, setup)
    _require_postselection(float(model.postselection(g_delta)))
    p_l, p_r = model.halfplanes(g_delta)
    return float(p_l), float(p_r)


def halfplane_probabilities_linearized(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> tuple[float, float]:
    """Return (p_L, p_R) with P_R = [1/2 + d / (sqrt(2 pi) delta_f)] p_f."""
    model = meter_model(theta_i, mode, setup)
    _require_postselection(float(model.postselection(g_delta)))
    spot_ratio = 2.0 * float(model.mean_momentum(g_delta)) + setup.offset
    if abs(spot_ratio) > LINEARIZATION_LIMIT:
        LOGGER.debug("Linearized split model at d/delta_f=%.3g", spot_ratio)
        warnings.warn(
            f"Linearized split model used at d/delta_f={spot_ratio:.3g}",
            LinearizationWarning,
            stacklevel=2,
        )
    p_l, p_r = model.halfplanes_linearized(g_delta)
    return float(p_l), float(p_r)


def split_imbalance(p_l: float, p_r: float) -> float:
    """Return (p_R - p_L) / (p_R + p_L)."""
    if p_l + p_r <= 0.0:
        msg = f"Split imbalance needs detected photons, got p_L={p_l}, p_R={p_r}"
        raise DegeneratePostSelectionError(msg)
    return (p_r - p_l) / (p_r + p_l)


def forward_point(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> ForwardPoint:
    """Return every model prediction at one coupling."""
    model = meter_model(theta_i, mode, setup)
    p_f = float(model.postselection(g_delta))
    _require_postselection(p_f)
    mean_k = float(model.mean_momentum(g_delta)) / setup.delta
    p_l, p_r = model.halfplanes(g_delta)
    return ForwardPoint(
        g=g_delta / setup.delta,
        g_delta=g_delta,
        p_f=p_f,
        mean_k=mean_k,
        d=focal_displacement(mean_k, setup),
        p_l=float(p_l),
        p_r=float(p_r),
    )
