"""Postmeter - Post-selected metrology toolkit."""

import logging
import math
from typing import Final

LOGGER = logging.getLogger(__package__)

TAU: Final = 2.0 * math.pi
SQRT_2PI: Final = math.sqrt(2.0 * math.pi)

# Optical bench and visibilities of the reference experiment.
DEFAULT_DELTA: Final = 286e-6
DEFAULT_WAVELENGTH: Final = 650e-9
DEFAULT_FOCAL_LENGTH: Final = 0.25
DEFAULT_NU0: Final = 0.998
DEFAULT_NU_HALF: Final = 0.966
DEFAULT_N_PHOTONS: Final = 100_000
DEFAULT_N_REPS: Final = 100

# Tooling defaults, no experimental counterpart.
DEFAULT_G_DELTA: Final = 0.1
DEFAULT_THETA_STEP_DEG: Final = 5.0
DEFAULT_CALIBRATION_PHOTONS: Final = 1_000_000
DEFAULT_FAILURE_THRESHOLD: Final = 0.25
DEFAULT_OUTPUT_DIR: Final = "output"

# Numerical floors and tolerances.
P_FLOOR: Final = 1e-12
NORM_TOLERANCE: Final = 1e-12
NO_INFORMATION_FLOOR: Final = 1e-12
LINEARIZATION_LIMIT: Final = 0.5
ILL_CONDITIONED_SLOPE: Final = 1e-6
DECOMPOSITION_TOLERANCE: Final = 1e-9
RICHARDSON_STEP: Final = 1e-4
RICHARDSON_TOLERANCE: Final = 1e-6
QUADRATURE_HALF_WIDTH: Final = 5.0
GRID_CONVERGENCE_TOLERANCE: Final = 1e-9
UNRELIABLE_METER_FRACTION: Final = 0.2

# Estimation.
G_DELTA_BOUND: Final = 1.0
BRANCH_SCAN_STEP: Final = 0.005
MLE_GRID_POINTS: Final = 401
MLE_STARTS: Final = (-0.5, 0.0, 0.5)
MLE_XATOL: Final = 1e-10
MLE_SCORE_TOLERANCE: Final = 1e-8
ROOT_XTOL: Final = 1e-14
INVERSION_RESIDUAL: Final = 1e-12

QUANTUM_FISHER: Final = 4.0

RNG_ALGORITHM: Final = "PCG64"
CALIBRATION_STREAM: Final = 0xCA11B
ENV_WORKERS: Final = "POSTMETER_WORKERS"

EXIT_OK: Final = 0
EXIT_FAILURE: Final = 1
EXIT_CONFIG_ERROR: Final = 2
EXIT_PARTIAL_FAILURE: Final = 3

SWEEP_COLUMNS: Final = (
    "theta_deg",
    "mode",
    "estimator",
    "variant",
    "g_true",
    "g_hat_mean",
    "g_hat_std",
    "bias",
    "three_sigma",
    "n_failed",
    "p_f_model",
    "mean_k_model",
    "F_pf",
    "F_m",
    "F_split",
    "F_total",
    "F_total_split",
    "F_quantum",
    "crb",
    "seed",
)

FISHER_CURVE_COLUMNS: Final = (
    "theta_deg",
    "mode",
    "g_true",
    "p_f_model",
    "mean_k_delta",
    "d_over_delta_f",
    "weak_value",
    "F_pf",
    "F_m",
    "F_split",
    "F_total",
    "F_total_split",
    "F_multinomial",
    "F_quantum",
    "crb_total",
    "crb_total_split",
    "efficiency",
)

CALIBRATION_COLUMNS: Final = (
    "d0_true",
    "d0_hat",
    "standard_error",
    "imbalance",
    "n_left",
    "n_right",
    "n_photons",
    "seed",
)

TEXT_COLUMNS: Final = frozenset({"mode", "estimator", "variant"})
INTEGER_COLUMNS: Final = frozenset({"n_failed", "seed", "n_left", "n_right", "n_photons"})

# Grid the numerical inspections run over.
VALIDATION_THETA_STEP_DEG: Final = 5.0
VALIDATION_G_DELTAS: Final = (0.0, 0.01, 0.05, 0.1, 0.3)
ORACLE_TOLERANCE: Final = 1e-8
CLOSURE_TOLERANCE: Final = 1e-12
QCRB_G_DELTA: Final = 1e-3
QCRB_TOLERANCE: Final = 1e-3
WVA_G_DELTA: Final = 1e-4
WVA_TOLERANCE: Final = 1e-3
REFERENCE_EPSILON: Final = 0.001
REFERENCE_P_DEPH: Final = 1.0 - DEFAULT_NU_HALF / DEFAULT_NU0
