"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

import asyncio
from collections import Counter
from dataclasses import dataclass, field
from importlib import metadata as importlib_metadata
import math
from typing import TYPE_CHECKING, Any

from .const import (
    CALIBRATION_COLUMNS,
    CALIBRATION_STREAM,
    FISHER_CURVE_COLUMNS,
    LOGGER,
    P_FLOOR,
    RNG_ALGORITHM,
    SWEEP_COLUMNS,
    UNRELIABLE_METER_FRACTION,
)
from .estimator import EstimatorKind, estimate_many, summarize
from .exceptions import (
    DegeneratePostSelectionError,
    FisherDecompositionError,
    IllConditionedError,
    NoPostSelectedPhotonsError,
    TooFewTrialsError,
    ZeroInformationError,
)
from .fisher import MeterKind, crb, fisher_total, information_efficiency
from .forward import forward_point, meter_model
from .qcore import SAME, make_state, resolve_postselection, weak_value
from .sampler import run_repetitions, sample_counts
from .util import async_gather_in_executor, derive_seed, worker_count

if TYPE_CHECKING:
    from .config import ExperimentConfig
    from .fisher import FisherBreakdown
    from .forward import OpticalSetup
    from .qcore import PostSelectionMode

SPLIT_GAIN = math.sqrt(math.pi / 2.0)


@dataclass
class ResultTable:
    """Rows of one result file with the metadata written next to them.

    Rows may carry keys beyond columns; those reach JSON output only.
    """

    name: str
    columns: tuple[str, ...]
    rows: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def failure_fraction(self) -> float:
        """Return the share of failed trials across every row."""
        trials = self.metadata.get("n_trials_total", 0)
        if not trials:
            return 0.0
        return self.metadata.get("n_failed_total", 0) / trials


@dataclass(frozen=True, kw_only=True)
class CalibrationResult:
    """Detector offset recovered from a calibration run."""

    d0_true: float
    d0_hat: float
    standard_error: float
    imbalance: float
    n_left: int
    n_right: int
    n_photons: int
    seed: int

    def as_row(self) -> dict[str, Any]:
        """Return the table row."""
        return {column: getattr(self, column) for column in CALIBRATION_COLUMNS}


def _package_version() -> str:
    try:
        return importlib_metadata.version("postmeter")
    except importlib_metadata.PackageNotFoundError:
        return "unknown"


def table_metadata(config: ExperimentConfig, **extra: Any) -> dict[str, Any]:
    """Return the reproducibility block shared by every output."""
    return {
        "config": config.as_dict(),
        "master_seed": config.master_seed,
        "rng_algorithm": RNG_ALGORITHM,
        "version": _package_version(),
        **extra,
    }


def calibrate_reference(config: ExperimentConfig) -> CalibrationResult:
    """Emulate the zero-coupling calibration run and estimate the offset.

    The diagonal state is prepared and post-selected with no coupling, so any
    split imbalance comes from the detector offset alone.
    """
    setup = config.setup(d0=config.calibration_offset)
    seed = derive_seed(config.master_seed, CALIBRATION_STREAM)
    rec = sample_counts(
        0.0, math.pi / 2.0, SAME, setup, config.calibration_photons, seed
    )
    if rec.n_postselected <= 0:
        msg = "No photon reached the split detector during calibration"
        raise NoPostSelectedPhotonsError(msg)

    imbalance = (rec.n_right - rec.n_left) / rec.n_postselected
    d0_hat = SPLIT_GAIN * setup.delta_f * imbalance
    standard_error = (
        SPLIT_GAIN
        * setup.delta_f
        * math.sqrt((1.0 - imbalance**2) / rec.n_postselected)
    )
    LOGGER.info(
        "Calibrated detector offset %.6g m +- %.3g m (injected %.6g m)",
        d0_hat,
        standard_error,
        config.calibration_offset,
    )
    return CalibrationResult(
        d0_true=config.calibration_offset,
        d0_hat=d0_hat,
        standard_error=standard_error,
        imbalance=imbalance,
        n_left=int(rec.n_left),
        n_right=int(rec.n_right),
        n_photons=config.calibration_photons,
        seed=seed,
    )


def calibration_table(config: ExperimentConfig) -> ResultTable:
    """Run the calibration and wrap it in a one-row table."""
    result = calibrate_reference(config)
    return ResultTable(
        name="calibration",
        columns=CALIBRATION_COLUMNS,
        rows=[result.as_row()],
        metadata=table_metadata(config),
    )


def _fisher_or_none(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    meter_kind: MeterKind,
) -> FisherBreakdown | None:
    try:
        return fisher_total(g_delta, theta_i, mode, setup, meter_kind)
    except (DegeneratePostSelectionError, FisherDecompositionError) as err:
        LOGGER.warning(
            "No Fisher information at theta_i=%.6g, %s: %s", theta_i, mode.name, err
        )
        return None


def _crb_or_nan(fisher_value: float, n_resources: float) -> float:
    try:
        return crb(fisher_value, n_resources)
    except ZeroInformationError:
        return math.nan


def _estimator_information(kind: EstimatorKind, breakdown: FisherBreakdown) -> float:
    """Return the information the given estimator can reach per photon."""
    if kind is EstimatorKind.POSTSELECTION:
        return breakdown.f_postselection
    if kind is EstimatorKind.METER:
        return breakdown.p_f * breakdown.f_split_conditional
    return breakdown.f_total_split


def _sweep_cell(
    config: ExperimentConfig,
    theta_index: int,
    mode_index: int,
) -> list[dict[str, Any]]:
    """Simulate one (theta_i, mode) cell and estimate with every estimator."""
    theta_deg = config.theta_grid_deg[theta_index]
    theta_i = config.theta_grid[theta_index]
    mode = config.postselection_modes[mode_index]
    setup = config.setup()
    g_true = config.g_delta_true
    seed = derive_seed(config.master_seed, theta_index, mode_index)
    LOGGER.debug("Running sweep cell: theta_i=%s deg, %s", theta_deg, mode.name)

    try:
        records = run_repetitions(
            g_true, theta_i, mode, setup, config.n_photons, config.n_reps, seed
        )
    except DegeneratePostSelectionError as err:
        LOGGER.warning(
            "Sweep cell theta_i=%s deg, %s cannot be sampled: %s", theta_deg, mode.name, err
        )
        records = []
    model = meter_model(theta_i, mode, setup)
    p_f = float(model.postselection(g_true))
    mean_k = float(model.mean_momentum(g_true)) / setup.delta if p_f >= P_FLOOR else math.nan
    breakdown = _fisher_or_none(g_true, theta_i, mode, setup, MeterKind.SPLIT)

    rows: list[dict[str, Any]] = []
    for kind in config.estimator_kinds:
        estimates = estimate_many(
            records,
            kind,
            theta_i,
            mode,
            setup,
            variant=config.likelihood_variant,
            clamp=config.clamp_out_of_range,
        )
        failures = Counter(result.failure for result in estimates if not result.converged)
        if not records:
            failures[DegeneratePostSelectionError.__name__] = config.n_reps
        try:
            summary = summarize(estimates, g_true)
            mean, std, bias, three_sigma = (
                summary.mean,
                summary.std,
                summary.bias,
                summary.three_sigma,
            )
        except TooFewTrialsError as err:
            LOGGER.warning(
                "Sweep cell theta_i=%s deg, %s, %s: %s", theta_deg, mode.name, kind, err
            )
            mean = std = bias = three_sigma = math.nan

        fraction = breakdown.meter_information_fraction if breakdown else math.nan
        row: dict[str, Any] = {
            "theta_deg": theta_deg,
            "mode": mode.name,
            "estimator": kind.value,
            "variant": config.variant,
            "g_true": g_true,
            "g_hat_mean": mean,
            "g_hat_std": std,
            "bias": bias,
            "three_sigma": three_sigma,
            "n_failed": sum(failures.values()),
            "p_f_model": p_f,
            "mean_k_model": mean_k,
            "F_pf": breakdown.f_postselection if breakdown else math.nan,
            "F_m": breakdown.f_meter_conditional if breakdown else math.nan,
            "F_split": breakdown.f_split_conditional if breakdown else math.nan,
            "F_total": breakdown.f_total if breakdown else math.nan,
            "F_total_split": breakdown.f_total_split if breakdown else math.nan,
            "F_quantum": breakdown.f_quantum if breakdown else math.nan,
            "crb": (
                _crb_or_nan(_estimator_information(kind, breakdown), config.n_photons)
                if breakdown
                else math.nan
            ),
            "seed": seed,
            "meter_information_fraction": fraction,
            "failures": dict(sorted(failures.items())),
        }
        if kind is EstimatorKind.METER:
            ill_conditioned = failures.get(IllConditionedError.__name__, 0)
            row["unreliable"] = bool(
                not fraction >= UNRELIABLE_METER_FRACTION
                or 2 * ill_conditioned >= len(estimates)
            )
        rows.append(row)
    return rows


async def async_run_sweep(
    config: ExperimentConfig,
    workers: int | None = None,
) -> ResultTable:
    """Run every (theta_i, mode) cell on a worker pool."""
    workers = workers or worker_count()
    cells = [
        (theta_index, mode_index)
        for theta_index in range(len(config.theta_grid_deg))
        for mode_index in range(len(config.modes))
    ]
    LOGGER.info("Running %s sweep cells on %s workers", len(cells), workers)
    results = await async_gather_in_executor(
        [
            lambda theta_index=theta_index, mode_index=mode_index: _sweep_cell(
                config, theta_index, mode_index
            )
            for theta_index, mode_index in cells
        ],
        workers,
    )

    rows = [row for cell_rows in results for row in cell_rows]
    n_failed = sum(row["n_failed"] for row in rows)
    n_trials = len(rows) * config.n_reps
    if n_failed:
        LOGGER.warning("%s of %s trials failed", n_failed, n_trials)
    return ResultTable(
        name="sweep",
        columns=SWEEP_COLUMNS,
        rows=rows,
        metadata=table_metadata(
            config, n_trials_total=n_trials, n_failed_total=n_failed
        ),
    )


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Run the sweep to completion."""
    return asyncio.run(async_run_sweep(config, workers))


def _curve_row(
    config: ExperimentConfig,
    theta_deg: float,
    theta_i: float,
    mode: PostSelectionMode,
) -> dict[str, Any]:
    """Return the forward predictions and bounds at one angle."""
    setup = config.setup()
    g_delta = config.g_delta_true
    row: dict[str, Any] = dict.fromkeys(FISHER_CURVE_COLUMNS, math.nan)
    psi_i = make_state(theta_i)
    row.update(
        theta_deg=theta_deg,
        mode=mode.name,
        g_true=g_delta,
        weak_value=weak_value(psi_i, resolve_postselection(mode, psi_i)),
    )
    row["p_f_model"] = float(meter_model(theta_i, mode, setup).postselection(g_delta))

    try:
        point = forward_point(g_delta, theta_i, mode, setup)
    except DegeneratePostSelectionError as err:
        LOGGER.warning("No forward point at theta_i=%s deg, %s: %s", theta_deg, mode.name, err)
        return row
    row.update(
        mean_k_delta=point.mean_k * setup.delta,
        d_over_delta_f=point.d / setup.delta_f,
    )

    if (breakdown := _fisher_or_none(g_delta, theta_i, mode, setup, MeterKind.FULL_K)) is None:
        return row
    row.update(
        F_pf=breakdown.f_postselection,
        F_m=breakdown.f_meter_conditional,
        F_split=breakdown.f_split_conditional,
        F_total=breakdown.f_total,
        F_total_split=breakdown.f_total_split,
        F_multinomial=breakdown.f_multinomial,
        F_quantum=breakdown.f_quantum,
        crb_total=_crb_or_nan(breakdown.f_total, config.n_photons),
        crb_total_split=_crb_or_nan(breakdown.f_total_split, config.n_photons),
        efficiency=information_efficiency(breakdown),
    )
    return row


async def async_fisher_curves(
    config: ExperimentConfig,
    workers: int | None = None,
) -> ResultTable:
    """Tabulate predictions and information bounds over the angle grid."""
    workers = workers or worker_count()
    jobs = [
        lambda theta_deg=theta_deg, theta_i=theta_i, mode=mode: _curve_row(
            config, theta_deg, theta_i, mode
        )
        for theta_deg, theta_i in zip(config.theta_grid_deg, config.theta_grid, strict=True)
        for mode in config.postselection_modes
    ]
    return ResultTable(
        name="fisher_curves",
        columns=FISHER_CURVE_COLUMNS,
        rows=await async_gather_in_executor(jobs, workers),
        metadata=table_metadata(config),
    )


def fisher_curves(config: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Tabulate the curves to completion."""
    return asyncio.run(async_fisher_curves(config, workers))
