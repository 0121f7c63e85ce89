"""Tests for the coupling estimators."""

from __future__ import annotations

import math

import numpy as np
import pytest

from postmeter.exceptions import (
    IllConditionedError,
    NoInformationError,
    NoPostSelectedPhotonsError,
    OutOfRangeError,
    TooFewTrialsError,
)
from postmeter.estimator import (
    EstimateResult,
    EstimatorKind,
    LikelihoodVariant,
    estimate,
    estimate_from_meter,
    estimate_from_postselection,
    estimate_joint_mle,
    estimate_many,
    log_likelihood,
    score,
    summarize,
)
from postmeter.fisher import crb, fisher_postselection, fisher_total
from postmeter.qcore import SAME, SIGMA3
from postmeter.sampler import CountRecord, expected_record, run_repetitions

TWO_THIRDS_PI = 2.0 * math.pi / 3.0


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
def test_postselection_round_trip(mode, reference_setup):
    record = expected_record(0.1, TWO_THIRDS_PI, mode, reference_setup, 100_000)
    result = estimate_from_postselection(record, TWO_THIRDS_PI, mode, reference_setup)
    assert result.g_delta_hat == pytest.approx(0.1, abs=1e-6)
    assert result.estimator_kind is EstimatorKind.POSTSELECTION
    assert result.converged
    assert not result.clamped
    assert result.residual <= 1e-12


def test_postselection_reports_magnitude(reference_setup):
    record = expected_record(-0.1, TWO_THIRDS_PI, SIGMA3, reference_setup, 100_000)
    result = estimate_from_postselection(record, TWO_THIRDS_PI, SIGMA3, reference_setup)
    assert result.g_delta_hat == pytest.approx(0.1, abs=1e-6)


def test_postselection_at_zero_coupling(reference_setup):
    record = CountRecord(n_left=491_500, n_right=491_500, n_perp=17_000)
    result = estimate_from_postselection(record, math.pi / 2.0, SAME, reference_setup)
    assert result.g_delta_hat == pytest.approx(0.0, abs=1e-6)


def test_postselection_without_information(reference_setup):
    record = CountRecord(n_left=500, n_right=499, n_perp=1)
    with pytest.raises(NoInformationError):
        estimate_from_postselection(record, math.pi, SAME, reference_setup)


@pytest.mark.parametrize(
    ("n_postselected", "expected"),
    [(200, 0.0), (700, 1.0)],
)
def test_postselection_out_of_range(n_postselected, expected, reference_setup):
    record = CountRecord(n_left=n_postselected, n_right=0, n_perp=1000 - n_postselected)
    with pytest.raises(OutOfRangeError):
        estimate_from_postselection(record, TWO_THIRDS_PI, SIGMA3, reference_setup)
    result = estimate_from_postselection(
        record, TWO_THIRDS_PI, SIGMA3, reference_setup, clamp=True
    )
    assert result.g_delta_hat == expected
    assert result.clamped
    assert result.converged


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
@pytest.mark.parametrize("g_delta", [0.1, -0.1])
def test_meter_round_trip_keeps_sign(mode, g_delta, reference_setup):
    record = expected_record(g_delta, TWO_THIRDS_PI, mode, reference_setup, 100_000)
    result = estimate_from_meter(record, TWO_THIRDS_PI, mode, reference_setup)
    assert result.g_delta_hat == pytest.approx(g_delta, abs=1e-6)
    assert result.n_used == pytest.approx(record.n_postselected)


def test_linearized_meter_readout(perfect_setup):
    theta = 3.0 * math.pi / 4.0
    record = expected_record(0.1, theta, SAME, perfect_setup, 100_000)
    result = estimate_from_meter(
        record, theta, SAME, perfect_setup, variant=LikelihoodVariant.LINEARIZED
    )
    assert result.variant is LikelihoodVariant.LINEARIZED
    assert result.g_delta_hat == pytest.approx(0.1, rel=1e-2)


def test_meter_without_sensitivity(reference_setup):
    record = expected_record(0.1, math.pi / 2.0, SAME, reference_setup, 100_000)
    with pytest.raises(IllConditionedError):
        estimate_from_meter(record, math.pi / 2.0, SAME, reference_setup)


def test_meter_without_postselected_photons(reference_setup):
    record = CountRecord(n_left=0, n_right=0, n_perp=100)
    with pytest.raises(NoPostSelectedPhotonsError):
        estimate_from_meter(record, TWO_THIRDS_PI, SAME, reference_setup)


def test_log_likelihood_of_empty_record(reference_setup):
    record = CountRecord(n_left=0, n_right=0, n_perp=0)
    assert log_likelihood(0.1, record, TWO_THIRDS_PI, SAME, reference_setup) == 0.0


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
def test_score_vanishes_in_expectation(mode, reference_setup):
    record = expected_record(0.1, TWO_THIRDS_PI, mode, reference_setup, 1.0)
    assert score(0.1, record, TWO_THIRDS_PI, mode, reference_setup) == pytest.approx(0.0, abs=1e-12)


def test_score_matches_likelihood_difference(reference_setup):
    record = CountRecord(n_left=3000, n_right=4000, n_perp=3000)
    step = 1e-6
    difference = (
        log_likelihood(0.2 + step, record, 2.0, SIGMA3, reference_setup)
        - log_likelihood(0.2 - step, record, 2.0, SIGMA3, reference_setup)
    ) / (2.0 * step)
    assert score(0.2, record, 2.0, SIGMA3, reference_setup) == pytest.approx(difference, rel=1e-5)


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
@pytest.mark.parametrize("g_delta", [0.1, -0.1])
def test_joint_round_trip(mode, g_delta, reference_setup):
    record = expected_record(g_delta, TWO_THIRDS_PI, mode, reference_setup, 100_000)
    result = estimate_joint_mle(record, TWO_THIRDS_PI, mode, reference_setup)
    assert result.converged
    assert result.failure is None
    assert result.g_delta_hat == pytest.approx(g_delta, abs=1e-6)
    assert result.log_likelihood_at_max == pytest.approx(
        log_likelihood(result.g_delta_hat, record, TWO_THIRDS_PI, mode, reference_setup)
    )


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
def test_joint_score_vanishes_on_sampled_records(mode, reference_setup):
    theta = math.radians(120.0)
    for record in run_repetitions(0.1, theta, mode, reference_setup, 100_000, 10, 2021):
        result = estimate_joint_mle(record, theta, mode, reference_setup)
        assert result.converged
        assert result.residual <= 1e-8


def test_joint_linearized_agrees_with_exact_in_weak_regime(perfect_setup):
    theta = 3.0 * math.pi / 4.0
    record = expected_record(0.01, theta, SAME, perfect_setup, 100_000)
    exact = estimate_joint_mle(record, theta, SAME, perfect_setup)
    linearized = estimate_joint_mle(
        record, theta, SAME, perfect_setup, variant=LikelihoodVariant.LINEARIZED
    )
    assert exact.converged
    assert linearized.converged
    assert linearized.variant is LikelihoodVariant.LINEARIZED
    assert abs(linearized.g_delta_hat - exact.g_delta_hat) < 1e-4


@pytest.mark.parametrize("g_delta", [0.01, -0.01])
def test_joint_round_trip_linearized(g_delta, perfect_setup):
    theta = 3.0 * math.pi / 4.0
    record = expected_record(g_delta, theta, SAME, perfect_setup, 100_000)
    result = estimate_joint_mle(
        record, theta, SAME, perfect_setup, variant=LikelihoodVariant.LINEARIZED
    )
    assert result.converged
    assert result.g_delta_hat == pytest.approx(g_delta, abs=1e-5)
    assert result.log_likelihood_at_max == pytest.approx(
        log_likelihood(
            result.g_delta_hat,
            record,
            theta,
            SAME,
            perfect_setup,
            LikelihoodVariant.LINEARIZED,
        )
    )


def test_linearized_score_matches_likelihood_difference(perfect_setup):
    theta = 3.0 * math.pi / 4.0
    record = CountRecord(n_left=4000, n_right=3500, n_perp=2500)
    variant = LikelihoodVariant.LINEARIZED
    step = 1e-6
    difference = (
        log_likelihood(0.05 + step, record, theta, SAME, perfect_setup, variant)
        - log_likelihood(0.05 - step, record, theta, SAME, perfect_setup, variant)
    ) / (2.0 * step)
    assert score(0.05, record, theta, SAME, perfect_setup, variant) == pytest.approx(
        difference, rel=1e-5
    )


def test_joint_reduces_to_postselection_without_meter(reference_setup):
    theta = math.pi / 2.0
    record = expected_record(0.1, theta, SIGMA3, reference_setup, 100_000)
    joint = estimate_joint_mle(record, theta, SIGMA3, reference_setup)
    postselection = estimate_from_postselection(record, theta, SIGMA3, reference_setup)
    assert abs(joint.g_delta_hat) == pytest.approx(postselection.g_delta_hat, abs=1e-6)


def test_joint_without_information(reference_setup):
    record = CountRecord(n_left=0, n_right=0, n_perp=100)
    with pytest.raises(NoInformationError):
        estimate_joint_mle(record, math.pi, SAME, reference_setup)


def test_dispatch_and_failure_capture(reference_setup):
    record = expected_record(0.1, TWO_THIRDS_PI, SAME, reference_setup, 100_000)
    for kind in EstimatorKind:
        assert estimate(kind, record, TWO_THIRDS_PI, SAME, reference_setup).estimator_kind is kind

    records = run_repetitions(0.1, math.pi / 2.0, SAME, reference_setup, 1000, 4, 3)
    results = estimate_many(records, EstimatorKind.METER, math.pi / 2.0, SAME, reference_setup)
    assert [result.failure for result in results] == ["IllConditionedError"] * 4
    assert all(math.isnan(result.g_delta_hat) for result in results)
    assert [result.trial_seed for result in results] == [rec.trial_seed for rec in records]


def test_summary_of_identical_estimates():
    results = [
        EstimateResult(g_delta_hat=0.1, estimator_kind=EstimatorKind.JOINT) for _ in range(5)
    ]
    summary = summarize(results, 0.1)
    assert summary.mean == pytest.approx(0.1)
    assert summary.std == pytest.approx(0.0, abs=1e-12)
    assert summary.bias == pytest.approx(0.0, abs=1e-12)
    assert summary.n_trials == 5
    assert summary.n_failed == 0


def test_summary_skips_failures():
    record = CountRecord(n_left=0, n_right=0, n_perp=1)
    failed = EstimateResult.failed(
        EstimatorKind.POSTSELECTION,
        LikelihoodVariant.EXACT,
        OutOfRangeError("beyond"),
        record,
    )
    good = [
        EstimateResult(g_delta_hat=value, estimator_kind=EstimatorKind.POSTSELECTION)
        for value in (0.09, 0.1, 0.11)
    ]
    summary = summarize([failed, *good, failed, failed], -0.1)
    assert summary.reference == 0.1
    assert summary.n_trials == 6
    assert summary.n_failed == 3
    assert summary.n_converged == 3
    assert summary.std == pytest.approx(0.01)
    assert summary.three_sigma == pytest.approx(0.03)


def test_summary_needs_two_estimates():
    with pytest.raises(TooFewTrialsError):
        summarize([EstimateResult(g_delta_hat=0.1, estimator_kind=EstimatorKind.METER)], 0.1)


@pytest.mark.slow
@pytest.mark.parametrize("mode", [SAME, SIGMA3])
@pytest.mark.parametrize("degrees", [110.0, 120.0, 150.0, 170.0])
def test_joint_spread_tracks_cramer_rao(mode, degrees, reference_setup):
    theta = math.radians(degrees)
    records = run_repetitions(0.1, theta, mode, reference_setup, 100_000, 100, 2021)
    summary = summarize(
        estimate_many(records, EstimatorKind.JOINT, theta, mode, reference_setup, workers=4), 0.1
    )
    bound = crb(fisher_total(0.1, theta, mode, reference_setup).f_total_split, 100_000)
    assert summary.n_failed == 0
    assert 0.8 * bound <= summary.std <= 1.5 * bound


@pytest.mark.slow
def test_postselection_beats_meter_near_orthogonality(reference_setup):
    """Run inside the breakdown region at 92 degrees.

    At 95 degrees the meter spread is about three times the post-selection
    spread, right at the asserted ratio, so the outcome would hinge on the
    seed. The 95 degree cell is covered by the unreliable flag of the sweep.
    """
    theta = math.radians(92.0)
    records = run_repetitions(0.1, theta, SIGMA3, reference_setup, 100_000, 100, 77)

    postselection = summarize(
        estimate_many(records, EstimatorKind.POSTSELECTION, theta, SIGMA3, reference_setup), 0.1
    )
    assert abs(postselection.bias) <= postselection.three_sigma
    bound = crb(fisher_postselection(0.1, theta, SIGMA3, reference_setup), 100_000)
    assert postselection.std <= 1.5 * bound

    meter = estimate_many(records, EstimatorKind.METER, theta, SIGMA3, reference_setup)
    ill = sum(result.failure == "IllConditionedError" for result in meter)
    if ill < len(meter) / 2:
        assert summarize(meter, 0.1).std >= 3.0 * postselection.std


@pytest.mark.slow
def test_postselection_spread_scales_with_photons(reference_setup):
    spreads = []
    for n_photons, master_seed in ((100_000, 11), (200_000, 12)):
        records = run_repetitions(
            0.1, TWO_THIRDS_PI, SIGMA3, reference_setup, n_photons, 1000, master_seed
        )
        results = estimate_many(
            records, EstimatorKind.POSTSELECTION, TWO_THIRDS_PI, SIGMA3, reference_setup
        )
        spreads.append(summarize(results, 0.1).std)
    assert spreads[1] / spreads[0] == pytest.approx(1.0 / np.sqrt(2.0), rel=0.15)
