"""Postmeter - Post-selected metrology toolkit.

Brute force reference for the closed forms. The meter is sampled on a
position grid, the coupling is applied as an elementwise phase, the noise as
explicit Kraus matrices and the post-selection as a projection. Momentum
quantities come from Fourier transforms of the grid field, never from the
error-function formulas they are meant to check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math
from typing import TYPE_CHECKING

import numpy as np

from .const import GRID_CONVERGENCE_TOLERANCE, LOGGER, NORM_TOLERANCE, P_FLOOR
from .exceptions import InadequateGridError
from .qcore import make_state, resolve_postselection

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .forward import OpticalSetup
    from .qcore import PostSelectionMode

MIN_POINTS = 256
MIN_EXTENT = 6.0
MAX_SPACING = 1.0 / 16.0
MOMENTUM_CUTOFF = 12.0
QUADRATURE_NODES = 200


@dataclass(frozen=True, kw_only=True)
class GridSpec:
    """Position grid, with the half-width in units of delta."""

    n_points: int = 4096
    x_extent: float = 16.0

    def __post_init__(self) -> None:
        """Check the grid resolves the meter."""
        if self.n_points < MIN_POINTS:
            msg = f"Grid needs at least {MIN_POINTS} points, got {self.n_points}"
            raise InadequateGridError(msg)
        if self.x_extent < MIN_EXTENT:
            msg = f"Grid extent {self.x_extent} is below {MIN_EXTENT} delta"
            raise InadequateGridError(msg)
        if self.spacing > MAX_SPACING:
            msg = f"Grid spacing {self.spacing:.4g} exceeds delta/16"
            raise InadequateGridError(msg)

    @property
    def spacing(self) -> float:
        """Return the position step in units of delta."""
        return 2.0 * self.x_extent / self.n_points

    @property
    def positions(self) -> NDArray[np.float64]:
        """Return the grid nodes."""
        return -self.x_extent + self.spacing * np.arange(self.n_points)

    def doubled(self) -> GridSpec:
        """Return the grid with twice the points over the same extent."""
        return GridSpec(n_points=2 * self.n_points, x_extent=self.x_extent)


@dataclass(frozen=True, kw_only=True)
class OracleResult:
    """Forward quantities recomputed on the grid."""

    p_f: float
    mean_k: float
    mean_k_delta: float
    p_l: float
    p_r: float
    momenta: NDArray[np.float64]
    density: NDArray[np.float64]
    norm_deviation: float

    def deviation(self, other: OracleResult) -> float:
        """Return the largest change of any scalar between two results."""
        deviations = [
            abs(self.p_f - other.p_f),
            abs(self.p_l - other.p_l),
            abs(self.p_r - other.p_r),
        ]
        if math.isfinite(self.mean_k_delta) and math.isfinite(other.mean_k_delta):
            deviations.append(abs(self.mean_k_delta - other.mean_k_delta))
        return max(deviations)


def meter_wavefunction(positions: NDArray[np.float64]) -> NDArray[np.float64]:
    """Return the meter amplitude with unit position variance."""
    return (2.0 * math.pi) ** -0.25 * np.exp(-np.square(positions) / 4.0)


@lru_cache(maxsize=32)
def _halfplane_transform(
    boundary: float,
    n_points: int,
    x_extent: float,
) -> tuple[NDArray[np.float64], NDArray[np.complex128], NDArray[np.float64], NDArray[np.complex128]]:
    """Return Gauss-Legendre weights and Fourier rows for both half-lines."""
    positions = GridSpec(n_points=n_points, x_extent=x_extent).positions
    spacing = 2.0 * x_extent / n_points
    nodes, weights = np.polynomial.legendre.leggauss(QUADRATURE_NODES)

    def _rows(lower: float, upper: float) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
        half = (upper - lower) / 2.0
        momenta = lower + half * (nodes + 1.0)
        transform = np.exp(-1j * np.outer(momenta, positions)) * spacing / math.sqrt(2.0 * math.pi)
        return half * weights, transform

    left_weights, left = _rows(-MOMENTUM_CUTOFF, boundary)
    right_weights, right = _rows(boundary, MOMENTUM_CUTOFF)
    return left_weights, left, right_weights, right


def _simulate(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    grid: GridSpec,
) -> OracleResult:
    """Run the grid pipeline once."""
    positions = grid.positions
    spacing = grid.spacing
    meter = meter_wavefunction(positions)
    phase = np.exp(-1j * g_delta * positions)

    psi_i = make_state(theta_i)
    psi_f = resolve_postselection(mode, psi_i)
    kraus = setup.noise.kraus_operators()
    prepared = (
        (1.0 - setup.noise.epsilon, psi_i),
        (setup.noise.epsilon, psi_i.orthogonal()),
    )

    # The right half-plane on the detector is u > -d0 / (2 delta_f).
    left_weights, left, right_weights, right = _halfplane_transform(
        -setup.offset / 2.0, grid.n_points, grid.x_extent
    )
    momenta = 2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(grid.n_points, d=spacing))
    momentum_step = 2.0 * math.pi / (grid.n_points * spacing)

    position_density = np.zeros(grid.n_points)
    momentum_density = np.zeros(grid.n_points)
    p_l = p_r = 0.0
    norm_deviation = 0.0
    for weight, state in prepared:
        if weight == 0.0:
            continue
        field = np.stack([state.h * meter * phase, state.v * meter * np.conj(phase)])
        before = float(np.sum(np.square(meter))) * spacing
        after = float(np.sum(np.abs(field) ** 2)) * spacing
        norm_deviation = max(norm_deviation, abs(after - before))
        for operator in kraus:
            projected = psi_f.vector @ (operator @ field)
            position_density += weight * np.abs(projected) ** 2
            spectrum = np.fft.fftshift(np.fft.fft(projected)) * spacing / math.sqrt(2.0 * math.pi)
            momentum_density += weight * np.abs(spectrum) ** 2
            p_l += weight * float(left_weights @ (np.abs(left @ projected) ** 2))
            p_r += weight * float(right_weights @ (np.abs(right @ projected) ** 2))

    if norm_deviation > NORM_TOLERANCE:
        msg = f"Phase step changed the field norm by {norm_deviation:.3e}"
        raise InadequateGridError(msg)

    p_f = float(np.sum(position_density)) * spacing
    if p_f < P_FLOOR:
        mean_k_delta = math.nan
        density = np.full(grid.n_points, math.nan)
    else:
        mean_k_delta = float(np.sum(momenta * momentum_density)) * momentum_step / p_f
        density = momentum_density / p_f

    return OracleResult(
        p_f=p_f,
        mean_k=mean_k_delta / setup.delta,
        mean_k_delta=mean_k_delta,
        p_l=p_l,
        p_r=p_r,
        momenta=momenta,
        density=density,
        norm_deviation=norm_deviation,
    )


def simulate_on_grid(  # noqa: PLR0913
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    grid: GridSpec | None = None,
    *,
    check_convergence: bool = True,
) -> OracleResult:
    """Recompute p_f, <k>, p_L and p_R by explicit grid evolution."""
    grid = grid or GridSpec()
    result = _simulate(g_delta, theta_i, mode, setup, grid)
    if not check_convergence:
        return result

    finer = _simulate(g_delta, theta_i, mode, setup, grid.doubled())
    if (deviation := result.deviation(finer)) > GRID_CONVERGENCE_TOLERANCE:
        msg = (
            f"Grid of {grid.n_points} points did not converge, doubling changed "
            f"results by {deviation:.3e}"
        )
        raise InadequateGridError(msg)
    LOGGER.debug(
        "Grid oracle converged at %s points (deviation %.3e)",
        grid.n_points,
        deviation,
    )
    return result
