"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from dataclasses import asdict, dataclass
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

import voluptuous as vol
import yaml

from .const import (
    DEFAULT_CALIBRATION_PHOTONS,
    DEFAULT_DELTA,
    DEFAULT_FAILURE_THRESHOLD,
    DEFAULT_FOCAL_LENGTH,
    DEFAULT_G_DELTA,
    DEFAULT_N_PHOTONS,
    DEFAULT_N_REPS,
    DEFAULT_NU0,
    DEFAULT_NU_HALF,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_THETA_STEP_DEG,
    DEFAULT_WAVELENGTH,
    LOGGER,
)
from .estimator import EstimatorKind, LikelihoodVariant
from .exceptions import ConfigError, InvalidSetupError, InvalidVisibilityError
from .forward import OpticalSetup
from .qcore import PostSelectionMode
from .util import theta_grid_deg

if TYPE_CHECKING:
    from collections.abc import Mapping

MODE_NAMES = ("same", "sigma3")
ESTIMATOR_NAMES = tuple(kind.value for kind in EstimatorKind)
VARIANT_NAMES = tuple(variant.value for variant in LikelihoodVariant)
FORMATS = ("csv", "json")
MAX_SEED = 2**64 - 1


def _expand(everything: tuple[str, ...], *aliases: str) -> vol.Schema:
    """Accept a name, an alias for every name, or a list of names."""

    def _validate(value: Any) -> list[str]:
        if isinstance(value, str):
            if value.lower() in aliases:
                return list(everything)
            return [value.lower()]
        if isinstance(value, list | tuple):
            return [str(item).lower() for item in value]
        msg = f"Expected a name or a list of names, got {value!r}"
        raise vol.Invalid(msg)

    return vol.All(_validate, [vol.In(everything)], vol.Length(min=1), vol.Unique())


def _finite(value: Any) -> float:
    number = float(value)
    if not math.isfinite(number):
        msg = f"Expected a finite number, got {value!r}"
        raise vol.Invalid(msg)
    return number


_ANGLE = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=180.0))
_POSITIVE = vol.All(_finite, vol.Range(min=0.0, min_included=False))
_FINITE = vol.All(vol.Coerce(float), _finite)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(
            "theta_grid_deg",
            default=lambda: theta_grid_deg(0.0, 180.0, DEFAULT_THETA_STEP_DEG),
        ): vol.All([_ANGLE], vol.Length(min=1)),
        vol.Optional("modes", default=list(MODE_NAMES)): _expand(MODE_NAMES, "both"),
        vol.Optional("estimators", default=list(ESTIMATOR_NAMES)): _expand(
            ESTIMATOR_NAMES, "all"
        ),
        vol.Optional("variant", default=LikelihoodVariant.EXACT.value): vol.All(
            vol.Lower, vol.In(VARIANT_NAMES)
        ),
        vol.Optional("g_delta_true", default=DEFAULT_G_DELTA): _FINITE,
        vol.Optional("n_photons", default=DEFAULT_N_PHOTONS): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional("n_reps", default=DEFAULT_N_REPS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional("nu0", default=DEFAULT_NU0): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False)
        ),
        vol.Optional("nu_half", default=DEFAULT_NU_HALF): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False)
        ),
        vol.Optional("delta", default=DEFAULT_DELTA): _POSITIVE,
        vol.Optional("wavelength", default=DEFAULT_WAVELENGTH): _POSITIVE,
        vol.Optional("focal_length", default=DEFAULT_FOCAL_LENGTH): _POSITIVE,
        vol.Optional("d0", default=0.0): _FINITE,
        vol.Optional("master_seed", default=0): vol.All(
            vol.Coerce(int), vol.Range(min=0, max=MAX_SEED)
        ),
        vol.Optional("clamp_out_of_range", default=False): vol.Boolean(),
        vol.Optional("failure_threshold", default=DEFAULT_FAILURE_THRESHOLD): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0)
        ),
        vol.Optional("calibration_photons", default=DEFAULT_CALIBRATION_PHOTONS): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional("calibration_offset", default=0.0): _FINITE,
        vol.Optional("output_dir", default=DEFAULT_OUTPUT_DIR): vol.All(
            str, vol.Length(min=1)
        ),
        vol.Optional("format", default="csv"): vol.All(vol.Lower, vol.In(FORMATS)),
    },
    extra=vol.PREVENT_EXTRA,
)


@dataclass(frozen=True, kw_only=True)
class ExperimentConfig:
    """Validated experiment configuration."""

    theta_grid_deg: tuple[float, ...]
    modes: tuple[str, ...]
    estimators: tuple[str, ...]
    variant: str
    g_delta_true: float
    n_photons: int
    n_reps: int
    nu0: float
    nu_half: float
    delta: float
    wavelength: float
    focal_length: float
    d0: float
    master_seed: int
    clamp_out_of_range: bool
    failure_threshold: float
    calibration_photons: int
    calibration_offset: float
    output_dir: str
    format: str

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> ExperimentConfig:
        """Validate a raw mapping and build the configuration."""
        try:
            data = CONFIG_SCHEMA(dict(raw))
        except vol.Invalid as err:
            msg = f"Invalid configuration: {err}"
            raise ConfigError(msg) from err

        config = cls(
            **{
                **data,
                "theta_grid_deg": tuple(data["theta_grid_deg"]),
                "modes": tuple(data["modes"]),
                "estimators": tuple(data["estimators"]),
            }
        )
        # Building the bench checks visibilities and offsets together.
        config.setup()
        config.setup(d0=config.calibration_offset)
        return config

    @property
    def theta_grid(self) -> tuple[float, ...]:
        """Return the initial state angles in radians."""
        return tuple(math.radians(theta) for theta in self.theta_grid_deg)

    @property
    def postselection_modes(self) -> tuple[PostSelectionMode, ...]:
        """Return the configured post-selection modes."""
        return tuple(PostSelectionMode.from_name(name) for name in self.modes)

    @property
    def estimator_kinds(self) -> tuple[EstimatorKind, ...]:
        """Return the configured estimators."""
        return tuple(EstimatorKind(name) for name in self.estimators)

    @property
    def likelihood_variant(self) -> LikelihoodVariant:
        """Return the configured likelihood variant."""
        return LikelihoodVariant(self.variant)

    def setup(self, *, d0: float | None = None) -> OpticalSetup:
        """Return the optical bench, optionally with another detector offset."""
        try:
            return OpticalSetup(
                delta=self.delta,
                wavelength=self.wavelength,
                focal_length=self.focal_length,
                nu0=self.nu0,
                nu_half=self.nu_half,
                d0=self.d0 if d0 is None else d0,
            )
        except (InvalidSetupError, InvalidVisibilityError) as err:
            msg = f"Invalid optical setup: {err}"
            raise ConfigError(msg) from err

    def as_dict(self) -> dict[str, Any]:
        """Return every field, for the output metadata."""
        data = asdict(self)
        for key in ("theta_grid_deg", "modes", "estimators"):
            data[key] = list(data[key])
        return data


def read_config_file(path: Path) -> dict[str, Any]:
    """Read the raw mapping of a YAML configuration file."""
    try:
        with Path(path).open(encoding="utf-8") as file:
            raw = yaml.safe_load(file)
    except OSError as err:
        msg = f"Could not read configuration {path}: {err}"
        raise ConfigError(msg) from err
    except yaml.YAMLError as err:
        msg = f"Configuration {path} is not valid YAML: {err}"
        raise ConfigError(msg) from err

    if raw is None:
        return {}
    if not isinstance(raw, dict):
        msg = f"Configuration {path} must hold a mapping, got {type(raw).__name__}"
        raise ConfigError(msg)
    return raw


def load_config(
    path: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ExperimentConfig:
    """Load a configuration file and apply flag overrides on top."""
    raw = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    LOGGER.debug("Loading configuration from %s with overrides %s", path, overrides)
    return ExperimentConfig.from_mapping(raw)
