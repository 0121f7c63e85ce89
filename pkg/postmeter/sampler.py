"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import TYPE_CHECKING

import numpy as np

from .const import LOGGER
from .forward import halfplane_probabilities, meter_model
from .util import derive_seed, make_generator

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .forward import OpticalSetup
    from .qcore import PostSelectionMode


@dataclass(frozen=True, kw_only=True)
class CountRecord:
    """Photon counts of one trial.

    Counts are integers for sampled trials; expected counts used as noiseless
    data may be fractional.
    """

    n_left: float
    n_right: float
    n_perp: float
    trial_seed: int | None = None

    def __post_init__(self) -> None:
        """Validate the counts."""
        for name in ("n_left", "n_right", "n_perp"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                msg = f"Count {name} must be nonnegative, got {value}"
                raise ValueError(msg)

    @property
    def n_postselected(self) -> float:
        """Return N_f = N_L + N_R."""
        return self.n_left + self.n_right

    @property
    def n_total(self) -> float:
        """Return N_L + N_R + N_perp."""
        return self.n_left + self.n_right + self.n_perp


def outcome_probabilities(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
) -> NDArray[np.float64]:
    """Return the exact probabilities of (L, R, rejected)."""
    p_l, p_r = halfplane_probabilities(g_delta, theta_i, mode, setup)
    q_f = float(meter_model(theta_i, mode, setup).rejection(g_delta))
    probabilities = np.clip(np.array([p_l, p_r, q_f]), 0.0, None)
    return probabilities / probabilities.sum()


def _draw(probabilities: NDArray[np.float64], n_photons: int, seed: int) -> CountRecord:
    """Draw one multinomial record."""
    n_left, n_right, n_perp = make_generator(seed).multinomial(n_photons, probabilities)
    return CountRecord(
        n_left=int(n_left),
        n_right=int(n_right),
        n_perp=int(n_perp),
        trial_seed=seed,
    )


def _check_photons(n_photons: int) -> None:
    if n_photons < 1:
        msg = f"At least one photon is needed per trial, got {n_photons}"
        raise ValueError(msg)


def sample_counts(  # noqa: PLR0913
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    n_photons: int,
    seed: int,
) -> CountRecord:
    """Sample one trial of n_photons over the outcomes (L, R, rejected)."""
    _check_photons(n_photons)
    return _draw(outcome_probabilities(g_delta, theta_i, mode, setup), n_photons, seed)


def run_repetitions(  # noqa: PLR0913
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    n_photons: int,
    n_reps: int,
    master_seed: int,
    *,
    workers: int = 1,
) -> list[CountRecord]:
    """Sample n_reps independent trials seeded from (master_seed, index)."""
    _check_photons(n_photons)
    if n_reps < 1:
        msg = f"At least one repetition is needed, got {n_reps}"
        raise ValueError(msg)

    probabilities = outcome_probabilities(g_delta, theta_i, mode, setup)
    seeds = [derive_seed(master_seed, index) for index in range(n_reps)]
    LOGGER.debug(
        "Sampling %s repetitions of %s photons, outcome probabilities %s",
        n_reps,
        n_photons,
        probabilities,
    )
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(
            executor.map(lambda seed: _draw(probabilities, n_photons, seed), seeds)
        )


def expected_record(
    g_delta: float,
    theta_i: float,
    mode: PostSelectionMode,
    setup: OpticalSetup,
    n_photons: float,
) -> CountRecord:
    """Return the noiseless, fractional expected counts."""
    n_left, n_right, n_perp = n_photons * outcome_probabilities(
        g_delta, theta_i, mode, setup
    )
    return CountRecord(n_left=float(n_left), n_right=float(n_right), n_perp=float(n_perp))
