"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import xlogy

from .const import (
    BRANCH_SCAN_STEP,
    G_DELTA_BOUND,
    ILL_CONDITIONED_SLOPE,
    INVERSION_RESIDUAL,
    LOGGER,
    MLE_GRID_POINTS,
    MLE_SCORE_TOLERANCE,
    MLE_STARTS,
    MLE_XATOL,
    NO_INFORMATION_FLOOR,
    P_FLOOR,
    ROOT_XTOL,
)
from .exceptions import (
    DegeneratePostSelectionError,
    EstimationError,
    IllConditionedError,
    ImpossibleOutcomeError,
    NoInformationError,
    NonConvergenceError,
    NoPostSelectedPhotonsError,
    OutOfRangeError,
    TooFewTrialsError,
)
from .forward import meter_model

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import ArrayLike, NDArray

    from .forward import MeterModel, OpticalSetup
    from .qcore import PostSelectionMode
    from .sampler import CountRecord

ROOT_RTOL = 1e-15
SPLIT_GAIN = math.sqrt(math.pi / 2.0)


class EstimatorKind(StrEnum):
    """Which statistics an estimator uses."""

    POSTSELECTION = "ps"
    METER = "meter"
    JOINT = "joint"


class LikelihoodVariant(StrEnum):
    """Half-plane model behind the meter readout and the likelihood."""

    EXACT = "exact"
    LINEARIZED = "linearized"


@dataclass(frozen=True, kw_only=True)
class EstimateResult:
    """Estimate of g delta from one record.

    The post-selection estimator reports a magnitude, the others are signed.
    """

    g_delta_hat: float
    estimator_kind: EstimatorKind
    variant: LikelihoodVariant = LikelihoodVariant.EXACT
    converged: bool = True
    log_likelihood_at_max: float = math.nan
    n_used: float = 0.0
    residual: float = 0.0
    clamped: bool = False
    failure: str | None = None
    trial_seed: int | None = None

    @classmethod
    def failed(
        cls,
        kind: EstimatorKind,
        variant: LikelihoodVariant,
        error: Exception,
        record: CountRecord,
    ) -> EstimateResult:
        """Return the result recording a failed trial."""
        return cls(
            g_delta_hat=math.nan,
            estimator_kind=kind,
            variant=variant,
            converged=False,
            failure=type(error).__name__,
            trial_seed=record.trial_seed,
        )


@dataclass(frozen=True, kw_only=True)
class EnsembleSummary:
    """Statistics of the converged estimates of an ensemble."""

    estimator_kind: EstimatorKind
    reference: float
    mean: float
    std: float
    bias: float
    three_sigma: float
    n_trials: int
    n_failed: int

    @property
    def n_converged(self) -> int:
        """Return the number of estimates the statistics are over."""
        return self.n_trials - self.n_failed


def _record_photons(rec: CountRecord) -> float:
    if rec.n_total <= 0:
        msg = "Record holds no photons"
        raise NoInformationError(msg)
    return rec.n_total


def estimate_from_postselection(
    rec: CountRecord,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    *,
    clamp: bool = False,
) -> EstimateResult:
    """Invert p_f for |g delta| from the post-selected fraction."""
    model = meter_model(theta_i, mode, setup)
    coefficients = model.coefficients
    if abs(coefficients.cross) <= NO_INFORMATION_FLOOR:
        msg = f"Post-selection carries no information at theta_i={theta_i}"
        raise NoInformationError(msg)
    n_total = _record_photons(rec)
    p_hat = rec.n_postselected / n_total

    # p_f = p_f(0) + cross * expm1(-2 x^2), so shrink must lie in (-1, 0].
    shrink = (p_hat - coefficients.p_zero) / coefficients.cross
    clamped = False
    if shrink > 0.0:
        if shrink > INVERSION_RESIDUAL and not clamp:
            msg = f"Post-selected fraction {p_hat} lies beyond p_f(0)"
            raise OutOfRangeError(msg)
        clamped = shrink > INVERSION_RESIDUAL
        g_delta_hat = 0.0
    elif shrink <= -1.0:
        if not clamp:
            msg = f"Post-selected fraction {p_hat} lies beyond the model range"
            raise OutOfRangeError(msg)
        clamped = True
        g_delta_hat = G_DELTA_BOUND
    else:
        g_delta_hat = math.sqrt(-math.log1p(shrink) / 2.0)

    p_f = float(model.postselection(g_delta_hat))
    q_f = float(model.rejection(g_delta_hat))
    return EstimateResult(
        g_delta_hat=g_delta_hat,
        estimator_kind=EstimatorKind.POSTSELECTION,
        log_likelihood_at_max=float(
            xlogy(rec.n_postselected, p_f) + xlogy(rec.n_perp, q_f)
        ),
        n_used=n_total,
        residual=abs(p_f - p_hat),
        clamped=clamped,
        trial_seed=rec.trial_seed,
    )


@dataclass(frozen=True)
class _MeterReadout:
    """Meter response and its target, both in focal spots."""

    model: MeterModel
    variant: LikelihoodVariant

    def response(self, x: ArrayLike) -> NDArray[np.float64]:
        """Return the predicted readout d / delta_f."""
        if self.variant is LikelihoodVariant.LINEARIZED:
            return 2.0 * self.model.mean_momentum(x)
        return SPLIT_GAIN * self.model.imbalance(x)

    def slope(self, x: float) -> float:
        """Return d(response)/dx."""
        p_f = float(self.model.postselection(x))
        dp_f = float(self.model.postselection_derivative(x))
        if self.variant is LikelihoodVariant.LINEARIZED:
            shift = self.model.coefficients.shift
            return 2.0 * shift * (p_f - x * dp_f) / p_f**2
        _, p_r = self.model.halfplanes(x)
        _, dp_r = self.model.halfplane_derivatives(x)
        return SPLIT_GAIN * 2.0 * (float(dp_r) * p_f - float(p_r) * dp_f) / p_f**2

    def target(self, rec: CountRecord) -> float:
        """Return the observed readout d / delta_f."""
        imbalance = (rec.n_right - rec.n_left) / rec.n_postselected
        if self.variant is LikelihoodVariant.LINEARIZED:
            return SPLIT_GAIN * imbalance - self.model.offset
        return SPLIT_GAIN * imbalance


def _invert_weak_branch(readout: _MeterReadout, target: float) -> float:
    """Solve response(x) = target on the monotone branch through x = 0."""
    if float(readout.model.postselection(0.0)) < P_FLOOR:
        msg = "Meter response undefined at zero coupling"
        raise DegeneratePostSelectionError(msg)
    slope = readout.slope(0.0)
    if abs(slope) < ILL_CONDITIONED_SLOPE:
        msg = f"Meter sensitivity {slope:.3e} is below {ILL_CONDITIONED_SLOPE:.0e}"
        raise IllConditionedError(msg)

    origin = float(readout.response(0.0))
    side = 1.0 if (target - origin) * slope >= 0.0 else -1.0
    grid = side * np.arange(0.0, G_DELTA_BOUND + BRANCH_SCAN_STEP / 2.0, BRANCH_SCAN_STEP)
    values = readout.response(grid)

    # Keep the prefix where the response moves monotonically away from origin.
    steps = np.diff(values) * side * math.copysign(1.0, slope)
    broken = np.flatnonzero(~(steps > 0.0))
    end = int(broken[0]) if broken.size else grid.size - 1

    offsets = values[: end + 1] - target
    crossings = np.flatnonzero(offsets[:-1] * offsets[1:] <= 0.0)
    if not crossings.size:
        if end == grid.size - 1:
            msg = f"Meter readout {target:.6g} lies beyond |g delta| = {G_DELTA_BOUND}"
            raise OutOfRangeError(msg)
        msg = (
            f"Meter readout {target:.6g} lies beyond the amplification peak at "
            f"g delta={grid[end]:.3g}"
        )
        raise IllConditionedError(msg)

    cell = int(crossings[0])
    lower, upper = sorted((float(grid[cell]), float(grid[cell + 1])))
    if offsets[cell] == 0.0:
        return float(grid[cell])
    return float(
        brentq(
            lambda x: float(readout.response(x)) - target,
            lower,
            upper,
            xtol=ROOT_XTOL,
            rtol=ROOT_RTOL,
        )
    )


def estimate_from_meter(
    rec: CountRecord,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    *,
    variant: LikelihoodVariant = LikelihoodVariant.EXACT,
) -> EstimateResult:
    """Estimate signed g delta from the split imbalance of post-selected photons."""
    if rec.n_postselected <= 0:
        msg = "No photon reached the split detector"
        raise NoPostSelectedPhotonsError(msg)

    readout = _MeterReadout(meter_model(theta_i, mode, setup), variant)
    target = readout.target(rec)
    g_delta_hat = _invert_weak_branch(readout, target)
    residual = abs(float(readout.response(g_delta_hat)) - target)
    if residual > INVERSION_RESIDUAL:
        msg = f"Meter inversion residual {residual:.3e} exceeds {INVERSION_RESIDUAL:.0e}"
        raise NonConvergenceError(msg)

    p_f = float(readout.model.postselection(g_delta_hat))
    p_l, p_r = (
        readout.model.halfplanes_linearized(g_delta_hat)
        if variant is LikelihoodVariant.LINEARIZED
        else readout.model.halfplanes(g_delta_hat)
    )
    return EstimateResult(
        g_delta_hat=g_delta_hat,
        estimator_kind=EstimatorKind.METER,
        variant=variant,
        log_likelihood_at_max=float(
            xlogy(rec.n_right, float(p_r) / p_f) + xlogy(rec.n_left, float(p_l) / p_f)
        ),
        n_used=rec.n_postselected,
        residual=residual,
        trial_seed=rec.trial_seed,
    )


def _outcome_probabilities(
    model: MeterModel,
    x: ArrayLike,
    variant: LikelihoodVariant,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Return (P_L, P_R, 1 - p_f) under a likelihood variant."""
    if variant is LikelihoodVariant.LINEARIZED:
        p_l, p_r = model.halfplanes_linearized(x)
    else:
        p_l, p_r = model.halfplanes(x)
    return p_l, p_r, model.rejection(x)


def _log_likelihood(
    model: MeterModel,
    rec: CountRecord,
    x: float,
    variant: LikelihoodVariant,
) -> float:
    """Return ln L at one coupling."""
    total = 0.0
    for count, probability in zip(
        (rec.n_left, rec.n_right, rec.n_perp),
        _outcome_probabilities(model, x, variant),
        strict=True,
    ):
        if count > 0 and probability <= 0.0:
            msg = f"Observed {count} photons in an outcome of probability {float(probability)}"
            raise ImpossibleOutcomeError(msg)
        total += float(xlogy(count, probability))
    return total


def _log_likelihood_grid(
    model: MeterModel,
    rec: CountRecord,
    grid: NDArray[np.float64],
    variant: LikelihoodVariant,
) -> NDArray[np.float64]:
    """Return ln L over a grid, -inf where an observed outcome is impossible."""
    total = np.zeros_like(grid)
    for count, probability in zip(
        (rec.n_left, rec.n_right, rec.n_perp),
        _outcome_probabilities(model, grid, variant),
        strict=True,
    ):
        if count <= 0:
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            total += np.where(probability > 0.0, xlogy(count, probability), -np.inf)
    return total


def _score(
    model: MeterModel,
    rec: CountRecord,
    x: float,
    variant: LikelihoodVariant,
) -> float:
    """Return d ln L / dx."""
    linearized = variant is LikelihoodVariant.LINEARIZED
    probabilities = _outcome_probabilities(model, x, variant)
    dp_l, dp_r = model.halfplane_derivatives(x, linearized=linearized)
    derivatives = (dp_l, dp_r, -model.postselection_derivative(x))
    total = 0.0
    for count, probability, derivative in zip(
        (rec.n_left, rec.n_right, rec.n_perp),
        probabilities,
        derivatives,
        strict=True,
    ):
        if count <= 0:
            continue
        if probability <= 0.0:
            msg = f"Score undefined, observed outcome has probability {float(probability)}"
            raise ImpossibleOutcomeError(msg)
        total += count * float(derivative) / float(probability)
    return total


def log_likelihood(  # noqa: PLR0913
    g_delta: float,
    rec: CountRecord,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    variant: LikelihoodVariant = LikelihoodVariant.EXACT,
) -> float:
    """Return ln L = N_R ln P_R + N_L ln P_L + N_perp ln(1 - p_f)."""
    return _log_likelihood(meter_model(theta_i, mode, setup), rec, g_delta, variant)


def score(  # noqa: PLR0913
    g_delta: float,
    rec: CountRecord,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    variant: LikelihoodVariant = LikelihoodVariant.EXACT,
) -> float:
    """Return the analytic d ln L / d(g delta)."""
    return _score(meter_model(theta_i, mode, setup), rec, g_delta, variant)


def _descend(values: NDArray[np.float64], index: int) -> int:
    """Walk to the neighbouring grid point with the lowest value until stuck."""
    while True:
        best = index
        for neighbour in (index - 1, index + 1):
            if 0 <= neighbour < values.size and values[neighbour] < values[best]:
                best = neighbour
        if best == index:
            return index
        index = best


def _polish(
    objective: Callable[[float], float],
    gradient: Callable[[float], float],
    lower: float,
    upper: float,
) -> float:
    """Refine a grid minimum by bounded search, then by a root of the score."""
    result = minimize_scalar(
        objective,
        bounds=(lower, upper),
        method="bounded",
        options={"xatol": MLE_XATOL},
    )
    x = float(result.x)
    try:
        # Narrow around the bounded optimum so the root is the one found.
        left = max(lower, x - 100.0 * MLE_XATOL)
        right = min(upper, x + 100.0 * MLE_XATOL)
        if gradient(left) * gradient(right) < 0.0:
            return float(brentq(gradient, left, right, xtol=ROOT_XTOL, rtol=ROOT_RTOL))
        if gradient(lower) * gradient(upper) < 0.0:
            return float(brentq(gradient, lower, upper, xtol=ROOT_XTOL, rtol=ROOT_RTOL))
    except ImpossibleOutcomeError:
        LOGGER.debug("Score undefined near %s, keeping bounded optimum", x)
    return x


def estimate_joint_mle(
    rec: CountRecord,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    variant: LikelihoodVariant = LikelihoodVariant.EXACT,
) -> EstimateResult:
    """Maximize the three-outcome likelihood over g delta in [-1, 1]."""
    n_total = _record_photons(rec)
    model = meter_model(theta_i, mode, setup)
    counts = (rec.n_left, rec.n_right, rec.n_perp)
    saturated = math.fsum(float(xlogy(count, count / n_total)) for count in counts)

    grid = np.linspace(-G_DELTA_BOUND, G_DELTA_BOUND, MLE_GRID_POINTS)
    values = saturated - _log_likelihood_grid(model, rec, grid, variant)
    finite = np.isfinite(values)
    if not finite.any():
        msg = "Every coupling makes an observed outcome impossible"
        raise ImpossibleOutcomeError(msg)
    if np.ptp(values[finite]) <= NO_INFORMATION_FLOOR * max(1.0, n_total):
        msg = f"Likelihood is flat at theta_i={theta_i}"
        raise NoInformationError(msg)

    def _objective(x: float) -> float:
        try:
            return saturated - _log_likelihood(model, rec, x, variant)
        except ImpossibleOutcomeError:
            return math.inf

    def _gradient(x: float) -> float:
        return _score(model, rec, x, variant)

    starts = {int(np.argmin(np.abs(grid - start))) for start in MLE_STARTS}
    candidates = {_descend(values, index) for index in starts}
    candidates.add(int(np.argmin(np.where(finite, values, np.inf))))

    best_x, best_value = math.nan, math.inf
    for index in sorted(candidates):
        if not finite[index]:
            continue
        lower = float(grid[max(index - 1, 0)])
        upper = float(grid[min(index + 1, grid.size - 1)])
        x = _polish(_objective, _gradient, lower, upper)
        if (value := _objective(x)) < best_value:
            best_x, best_value = x, value

    try:
        residual = abs(_gradient(best_x))
    except ImpossibleOutcomeError:
        residual = math.inf
    converged = residual <= MLE_SCORE_TOLERANCE
    if not converged:
        LOGGER.debug(
            "Joint likelihood not stationary at g delta=%s (score %.3e)",
            best_x,
            residual,
        )
    return EstimateResult(
        g_delta_hat=best_x,
        estimator_kind=EstimatorKind.JOINT,
        variant=variant,
        converged=converged,
        log_likelihood_at_max=saturated - best_value,
        n_used=n_total,
        residual=residual,
        failure=None if converged else NonConvergenceError.__name__,
        trial_seed=rec.trial_seed,
    )


def estimate(  # noqa: PLR0913
    kind: EstimatorKind,
    rec: CountRecord,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    *,
    variant: LikelihoodVariant = LikelihoodVariant.EXACT,
    clamp: bool = False,
) -> EstimateResult:
    """Dispatch to the estimator of the given kind."""
    if kind is EstimatorKind.POSTSELECTION:
        return estimate_from_postselection(rec, theta_i, mode, setup, clamp=clamp)
    if kind is EstimatorKind.METER:
        return estimate_from_meter(rec, theta_i, mode, setup, variant=variant)
    return estimate_joint_mle(rec, theta_i, mode, setup, variant)


def estimate_many(  # noqa: PLR0913
    records: Sequence[CountRecord],
    kind: EstimatorKind,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    *,
    variant: LikelihoodVariant = LikelihoodVariant.EXACT,
    clamp: bool = False,
    workers: int = 1,
) -> list[EstimateResult]:
    """Estimate every record, recording failures instead of raising."""

    def _estimate(rec: CountRecord) -> EstimateResult:
        try:
            return estimate(
                kind, rec, theta_i, mode, setup, variant=variant, clamp=clamp
            )
        except (EstimationError, DegeneratePostSelectionError) as err:
            LOGGER.debug("Estimate of trial %s failed: %s", rec.trial_seed, err)
            return EstimateResult.failed(kind, variant, err, rec)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_estimate, records))


def summarize(estimates: Sequence[EstimateResult], g_true: float) -> EnsembleSummary:
    """Return mean, unbiased std, bias and 3 sigma of the converged estimates.

    Post-selection estimates are magnitudes and are compared with |g_true|.
    """
    converged = [result for result in estimates if result.converged]
    if len(converged) < 2:  # noqa: PLR2004
        msg = f"Need at least 2 converged estimates, got {len(converged)}"
        raise TooFewTrialsError(msg)

    kind = converged[0].estimator_kind
    reference = abs(g_true) if kind is EstimatorKind.POSTSELECTION else g_true
    values = np.array([result.g_delta_hat for result in converged])
    mean = float(values.mean())
    std = float(values.std(ddof=1))
    return EnsembleSummary(
        estimator_kind=kind,
        reference=reference,
        mean=mean,
        std=std,
        bias=mean - reference,
        three_sigma=3.0 * std,
        n_trials=len(estimates),
        n_failed=len(estimates) - len(converged),
    )
