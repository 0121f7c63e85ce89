"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import math
from typing import TYPE_CHECKING

import numpy as np

from .const import LOGGER, NORM_TOLERANCE, TAU
from .exceptions import InvalidModeError, InvalidStateError, InvalidVisibilityError

if TYPE_CHECKING:
    from numpy.typing import NDArray

IDENTITY = np.eye(2)
PAULI_Z = np.diag([1.0, -1.0])


def _normalize_angle(theta: float) -> float:
    """Fold an angle into [0, 2pi)."""
    normalized = theta % TAU
    # Tiny negative angles round up to 2pi exactly.
    if normalized >= TAU:
        return 0.0
    return normalized


@dataclass(frozen=True)
class PolarizationState:
    """Real superposition cos(theta/2)|H> + sin(theta/2)|V>.

    The components are kept alongside the normalized angle, so a state and
    its negative stay distinguishable when an overlap sign matters.
    """

    theta: float
    h: float
    v: float

    def __post_init__(self) -> None:
        """Validate the state."""
        if not all(math.isfinite(value) for value in (self.theta, self.h, self.v)):
            msg = f"Polarization state must be finite, got {self}"
            raise InvalidStateError(msg)
        if abs(math.hypot(self.h, self.v) - 1.0) > NORM_TOLERANCE:
            msg = f"Polarization state is not normalized: ({self.h}, {self.v})"
            raise InvalidStateError(msg)

    @property
    def vector(self) -> NDArray[np.float64]:
        """Return the (H, V) components."""
        return np.array([self.h, self.v])

    def overlap(self, other: PolarizationState) -> float:
        """Return <self|other>."""
        return self.h * other.h + self.v * other.v

    def orthogonal(self) -> PolarizationState:
        """Return the orthogonal state (-sin(theta/2), cos(theta/2))."""
        return PolarizationState(
            theta=_normalize_angle(self.theta + math.pi),
            h=-self.v,
            v=self.h,
        )


class PostSelectionKind(StrEnum):
    """Post-selection strategies."""

    SAME = "same"
    SIGMA3 = "sigma3"
    CUSTOM = "custom"


@dataclass(frozen=True, kw_only=True)
class PostSelectionMode:
    """Post-selection strategy, with the target angle for custom ones."""

    kind: PostSelectionKind
    theta_f: float | None = None

    def __post_init__(self) -> None:
        """Validate the mode."""
        if self.kind is PostSelectionKind.CUSTOM:
            if self.theta_f is None or not math.isfinite(self.theta_f):
                msg = f"Custom post-selection needs a finite theta_f, got {self.theta_f}"
                raise InvalidModeError(msg)
        elif self.theta_f is not None:
            msg = f"Post-selection mode {self.kind} does not take theta_f"
            raise InvalidModeError(msg)

    @property
    def name(self) -> str:
        """Return the label used in result tables."""
        if self.kind is PostSelectionKind.CUSTOM:
            return f"custom({math.degrees(self.theta_f or 0.0):.6g})"
        return self.kind.value

    @property
    def is_closed_form(self) -> bool:
        """Return if the visibility closed forms apply."""
        return self.kind is not PostSelectionKind.CUSTOM

    @classmethod
    def from_name(cls, name: str) -> PostSelectionMode:
        """Return the named mode, same or sigma3."""
        try:
            kind = PostSelectionKind(name.lower())
        except ValueError as err:
            msg = f"Unknown post-selection mode: {name}"
            raise InvalidModeError(msg) from err
        if kind is PostSelectionKind.CUSTOM:
            msg = "Custom post-selection needs an explicit theta_f"
            raise InvalidModeError(msg)
        return cls(kind=kind)

    @classmethod
    def custom(cls, theta_f: float) -> PostSelectionMode:
        """Return a custom post-selection onto make_state(theta_f)."""
        return cls(kind=PostSelectionKind.CUSTOM, theta_f=theta_f)


SAME = PostSelectionMode(kind=PostSelectionKind.SAME)
SIGMA3 = PostSelectionMode(kind=PostSelectionKind.SIGMA3)


@dataclass(frozen=True, kw_only=True)
class NoiseModel:
    """Depolarized preparation and dephasing strength."""

    epsilon: float = 0.0
    p_deph: float = 0.0

    def __post_init__(self) -> None:
        """Validate the noise parameters."""
        if not 0.0 <= self.epsilon < 0.5:  # noqa: PLR2004
            msg = f"Depolarization weight must lie in [0, 1/2), got {self.epsilon}"
            raise InvalidVisibilityError(msg)
        if not 0.0 <= self.p_deph <= 1.0:
            msg = f"Dephasing strength must lie in [0, 1], got {self.p_deph}"
            raise InvalidVisibilityError(msg)

    def visibilities(self) -> tuple[float, float]:
        """Return (nu0, nu_half) reproduced by this noise."""
        nu0 = 1.0 - 2.0 * self.epsilon
        return nu0, nu0 * (1.0 - self.p_deph)

    def kraus_operators(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Return the dephasing Kraus pair."""
        return (
            math.sqrt(1.0 - self.p_deph / 2.0) * IDENTITY,
            math.sqrt(self.p_deph / 2.0) * PAULI_Z,
        )


@dataclass(frozen=True)
class Branch:
    """One weighted two-Gaussian superposition a|-g> + b|+g>."""

    weight: float
    a: float
    b: float


@dataclass(frozen=True)
class BranchDecomposition:
    """Post-selected meter state as a mixture of branches."""

    branches: tuple[Branch, ...]

    def __post_init__(self) -> None:
        """Validate the weights."""
        weights = [branch.weight for branch in self.branches]
        if min(weights) < 0.0 or abs(math.fsum(weights) - 1.0) > NORM_TOLERANCE:
            msg = f"Branch weights must be a probability vector, got {weights}"
            raise InvalidVisibilityError(msg)

    @property
    def effective_branches(self) -> tuple[Branch, ...]:
        """Return the branches with nonzero weight."""
        return tuple(branch for branch in self.branches if branch.weight > 0.0)

    def sums(self) -> tuple[float, float, float]:
        """Return (sum w a^2, sum w b^2, sum w 2ab)."""
        return (
            math.fsum(branch.weight * branch.a**2 for branch in self.branches),
            math.fsum(branch.weight * branch.b**2 for branch in self.branches),
            math.fsum(2.0 * branch.weight * branch.a * branch.b for branch in self.branches),
        )

    def postselection_probability(self, g_delta: float) -> float:
        """Assemble p_f from the branches."""
        overlap = math.exp(-2.0 * g_delta**2)
        return math.fsum(
            branch.weight * (branch.a**2 + branch.b**2 + 2.0 * branch.a * branch.b * overlap)
            for branch in self.branches
        )


def make_state(theta: float) -> PolarizationState:
    """Return cos(theta/2)|H> + sin(theta/2)|V>."""
    if not math.isfinite(theta):
        msg = f"State angle must be finite, got {theta}"
        raise InvalidStateError(msg)
    return PolarizationState(
        theta=_normalize_angle(theta),
        h=math.cos(theta / 2.0),
        v=math.sin(theta / 2.0),
    )


def resolve_postselection(
    mode: PostSelectionMode,
    psi_i: PolarizationState,
) -> PolarizationState:
    """Return the state the qubit is projected onto."""
    if mode.kind is PostSelectionKind.SAME:
        return psi_i
    if mode.kind is PostSelectionKind.SIGMA3:
        return PolarizationState(
            theta=_normalize_angle(-psi_i.theta),
            h=psi_i.h,
            v=-psi_i.v,
        )
    return make_state(mode.theta_f or 0.0)


def weak_value(psi_i: PolarizationState, psi_f: PolarizationState) -> float:
    """Return <psi_f|sigma3|psi_i> / <psi_f|psi_i>.

    Orthogonal states give an infinity signed like the numerator.
    """
    numerator = psi_f.h * psi_i.h - psi_f.v * psi_i.v
    denominator = psi_f.overlap(psi_i)
    if denominator == 0.0:
        return math.copysign(math.inf, numerator)
    return numerator / denominator


def noise_from_visibilities(nu0: float, nu_half: float) -> NoiseModel:
    """Return the noise model reproducing the two visibilities."""
    for name, value in (("nu0", nu0), ("nu_half", nu_half)):
        if not math.isfinite(value):
            msg = f"Visibility {name} must be finite, got {value}"
            raise InvalidVisibilityError(msg)
    if not 0.0 < nu0 <= 1.0:
        msg = f"Visibility nu0={nu0} must lie in (0, 1]"
        raise InvalidVisibilityError(msg)
    if nu_half <= 0.0:
        msg = f"Visibility nu_half={nu_half} must be positive"
        raise InvalidVisibilityError(msg)
    if nu_half > nu0:
        msg = f"Visibility nu_half={nu_half} exceeds nu0={nu0}"
        raise InvalidVisibilityError(msg)

    noise = NoiseModel(epsilon=(1.0 - nu0) / 2.0, p_deph=1.0 - nu_half / nu0)
    LOGGER.debug("Noise from visibilities (%s, %s): %s", nu0, nu_half, noise)
    return noise


def branch_amplitudes(
    psi_i: PolarizationState,
    mode: PostSelectionMode,
    noise: NoiseModel,
) -> BranchDecomposition:
    """Decompose the post-selected meter into its four noise branches.

    Branches come in the order identity and sigma3 dephasing on the
    prepared state, then the same pair on its orthogonal complement.
    """
    psi_f = resolve_postselection(mode, psi_i)
    keep = 1.0 - noise.p_deph / 2.0
    flip = noise.p_deph / 2.0

    branches: list[Branch] = []
    for prepared_weight, prepared in (
        (1.0 - noise.epsilon, psi_i),
        (noise.epsilon, psi_i.orthogonal()),
    ):
        for kraus_weight, v_sign in ((keep, 1.0), (flip, -1.0)):
            branches.append(
                Branch(
                    weight=prepared_weight * kraus_weight,
                    a=psi_f.h * prepared.h,
                    b=v_sign * psi_f.v * prepared.v,
                )
            )
    return BranchDecomposition(tuple(branches))
