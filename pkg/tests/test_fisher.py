"""Tests for the Fisher information budget."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import rel_entr

from postmeter.exceptions import ZeroInformationError
from postmeter.fisher import (
    MeterKind,
    crb,
    fisher_meter_conditional,
    fisher_multinomial,
    fisher_postselection,
    fisher_split_conditional,
    fisher_total,
    information_efficiency,
    quantum_fisher,
)
from postmeter.forward import halfplane_probabilities, postselection_probability
from postmeter.qcore import SAME, SIGMA3


def test_postselection_information(perfect_setup):
    assert fisher_postselection(0.1, math.pi / 2.0, SIGMA3, perfect_setup) == pytest.approx(
        3.9205, abs=1e-4
    )
    assert fisher_postselection(0.1, math.pi, SIGMA3, perfect_setup) == pytest.approx(
        0.0, abs=1e-12
    )


def test_postselection_information_limit_on_pure_outcome(perfect_setup):
    at_zero = fisher_postselection(0.0, math.pi / 2.0, SIGMA3, perfect_setup)
    assert at_zero == pytest.approx(4.0)
    assert fisher_postselection(1e-5, math.pi / 2.0, SIGMA3, perfect_setup) == pytest.approx(
        at_zero, rel=1e-6
    )


def test_meter_information_of_undisturbed_pointer(perfect_setup):
    assert fisher_meter_conditional(0.1, 0.0, SAME, perfect_setup) == pytest.approx(
        4.0, rel=1e-6
    )


def test_split_readout_keeps_two_over_pi(perfect_setup):
    full = fisher_meter_conditional(1e-4, 0.0, SAME, perfect_setup)
    split = fisher_split_conditional(1e-4, 0.0, SAME, perfect_setup)
    assert split / full == pytest.approx(2.0 / math.pi, rel=1e-4)


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
@pytest.mark.parametrize("theta", [2.0 * math.pi / 3.0, 3.0 * math.pi / 4.0])
def test_total_reaches_quantum_limit(mode, theta, perfect_setup):
    breakdown = fisher_total(1e-3, theta, mode, perfect_setup)
    assert breakdown.f_total == pytest.approx(4.0, abs=1e-3)
    assert information_efficiency(breakdown) == pytest.approx(1.0, abs=1e-3)


def test_quantum_limit_gap_closes_quadratically(perfect_setup):
    theta = 3.0 * math.pi / 4.0
    coarse = abs(fisher_total(1e-2, theta, SIGMA3, perfect_setup).f_total - 4.0)
    fine = abs(fisher_total(1e-3, theta, SIGMA3, perfect_setup).f_total - 4.0)
    assert fine <= coarse / 25.0 + 1e-9


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
@pytest.mark.parametrize("degrees", [30.0, 100.0, 120.0, 160.0])
def test_information_ordering(mode, degrees, reference_setup, perfect_setup):
    theta = math.radians(degrees)
    noisy = fisher_total(0.1, theta, mode, reference_setup)
    pure = fisher_total(0.1, theta, mode, perfect_setup)
    assert noisy.f_split_conditional <= noisy.f_meter_conditional * (1.0 + 1e-9)
    assert pure.f_total <= 4.0 * (1.0 + 1e-9)
    assert noisy.f_total < 4.0
    assert noisy.f_multinomial == pytest.approx(noisy.f_total_split, rel=1e-9)
    assert 0.0 <= noisy.meter_information_fraction <= 1.0


def test_breakdown_labels_its_bound(reference_setup):
    breakdown = fisher_total(0.1, 2.0, SIGMA3, reference_setup, MeterKind.SPLIT)
    assert breakdown.f_bound == breakdown.f_total_split
    assert breakdown.f_quantum == 4.0
    assert quantum_fisher(reference_setup) == breakdown.f_quantum
    assert fisher_multinomial(0.1, 2.0, SIGMA3, reference_setup) == pytest.approx(
        breakdown.f_multinomial
    )


@pytest.mark.parametrize(
    ("information", "n_photons", "expected"),
    [(4.0, 100_000, 1.5811e-3), (3.9205, 100_000, 1.5971e-3), (4.0, 1, 0.5)],
)
def test_crb(information, n_photons, expected):
    assert crb(information, n_photons) == pytest.approx(expected, rel=1e-4)


def test_crb_rejects_missing_information():
    with pytest.raises(ZeroInformationError):
        crb(0.0, 100)
    with pytest.raises(ValueError, match="resource"):
        crb(4.0, 0)


KL_POINTS = [
    (SAME, 120.0, 0.1),
    (SAME, 150.0, 0.05),
    (SIGMA3, 100.0, 0.1),
    (SIGMA3, 130.0, 0.2),
    (SIGMA3, 160.0, 0.3),
]


def _kl_curvature(distribution, g_delta, step=1e-4):
    """Return the second difference of KL(p(g) || p(g + h)) at h = 0."""
    centre = np.asarray(distribution(g_delta))
    divergence = [
        float(np.sum(rel_entr(centre, np.asarray(distribution(g_delta + shift)))))
        for shift in (step, -step)
    ]
    return sum(divergence) / step**2


@pytest.mark.parametrize(("mode", "degrees", "g_delta"), KL_POINTS)
def test_split_information_is_kl_curvature(mode, degrees, g_delta, reference_setup):
    theta = math.radians(degrees)

    def conditional_split(x):
        p_l, p_r = halfplane_probabilities(x, theta, mode, reference_setup)
        return (p_l / (p_l + p_r), p_r / (p_l + p_r))

    assert fisher_split_conditional(g_delta, theta, mode, reference_setup) == pytest.approx(
        _kl_curvature(conditional_split, g_delta), rel=1e-5
    )


@pytest.mark.parametrize(("mode", "degrees", "g_delta"), KL_POINTS)
def test_postselection_information_is_kl_curvature(mode, degrees, g_delta, reference_setup):
    theta = math.radians(degrees)

    def postselection(x):
        p_f = postselection_probability(x, theta, mode, reference_setup)
        return (p_f, 1.0 - p_f)

    assert fisher_postselection(g_delta, theta, mode, reference_setup) == pytest.approx(
        _kl_curvature(postselection, g_delta), rel=1e-5
    )
