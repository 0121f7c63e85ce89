"""Tests for the polarization states, post-selection and noise."""

from __future__ import annotations

import math

import pytest

from postmeter.exceptions import (
    InvalidModeError,
    InvalidStateError,
    InvalidVisibilityError,
)
from postmeter.forward import postselection_probability
from postmeter.qcore import (
    SAME,
    SIGMA3,
    NoiseModel,
    PostSelectionKind,
    PostSelectionMode,
    branch_amplitudes,
    make_state,
    noise_from_visibilities,
    resolve_postselection,
    weak_value,
)


@pytest.mark.parametrize(
    ("theta", "expected"),
    [
        (0.0, (1.0, 0.0)),
        (math.pi / 2.0, (math.sqrt(2.0) / 2.0, math.sqrt(2.0) / 2.0)),
        (math.pi, (0.0, 1.0)),
    ],
)
def test_make_state_components(theta, expected):
    state = make_state(theta)
    assert state.h == pytest.approx(expected[0], abs=1e-15)
    assert state.v == pytest.approx(expected[1], abs=1e-15)
    assert math.hypot(state.h, state.v) == pytest.approx(1.0, abs=1e-15)


def test_make_state_normalizes_angle():
    assert make_state(-0.1).theta == pytest.approx(2.0 * math.pi - 0.1)
    assert 0.0 <= make_state(7.0).theta < 2.0 * math.pi


@pytest.mark.parametrize("theta", [math.nan, math.inf])
def test_make_state_rejects_non_finite(theta):
    with pytest.raises(InvalidStateError):
        make_state(theta)


def test_same_resolves_to_initial_state():
    psi_i = make_state(2.0 * math.pi / 3.0)
    psi_f = resolve_postselection(SAME, psi_i)
    assert psi_f.theta == pytest.approx(2.0 * math.pi / 3.0)
    assert psi_f.overlap(psi_i) == pytest.approx(1.0)


def test_sigma3_overlaps():
    diagonal = make_state(math.pi / 2.0)
    assert resolve_postselection(SIGMA3, diagonal).overlap(diagonal) == pytest.approx(
        0.0, abs=1e-15
    )
    psi_i = make_state(2.0 * math.pi / 3.0)
    assert resolve_postselection(SIGMA3, psi_i).overlap(psi_i) == pytest.approx(-0.5)


def test_sigma3_overlap_law_on_degree_grid():
    for degrees in range(361):
        theta = math.radians(degrees)
        psi_i = make_state(theta)
        psi_f = resolve_postselection(SIGMA3, psi_i)
        assert psi_f.overlap(psi_i) == pytest.approx(math.cos(theta), abs=1e-15)
        assert psi_f.theta == pytest.approx((-psi_i.theta) % (2.0 * math.pi), abs=1e-12)


@pytest.mark.parametrize(
    ("theta", "mode", "expected"),
    [
        (0.0, SIGMA3, 1.0),
        (2.0 * math.pi / 3.0, SIGMA3, -2.0),
        (math.pi / 2.0, SAME, 0.0),
    ],
)
def test_weak_value(theta, mode, expected):
    psi_i = make_state(theta)
    assert weak_value(psi_i, resolve_postselection(mode, psi_i)) == pytest.approx(
        expected, abs=1e-12
    )


def test_weak_value_diverges_towards_orthogonality():
    magnitudes = []
    for degrees in range(91, 136):
        psi_i = make_state(math.radians(degrees))
        magnitudes.append(abs(weak_value(psi_i, resolve_postselection(SIGMA3, psi_i))))
    assert all(a > b for a, b in zip(magnitudes, magnitudes[1:], strict=False))
    assert magnitudes[0] > 50.0


def test_noise_from_perfect_visibilities():
    noise = noise_from_visibilities(1.0, 1.0)
    assert noise.epsilon == 0.0
    assert noise.p_deph == 0.0


def test_noise_from_reference_visibilities():
    noise = noise_from_visibilities(0.998, 0.966)
    assert noise.epsilon == pytest.approx(0.001, abs=1e-15)
    assert noise.p_deph == pytest.approx(0.0320641, abs=1e-7)
    nu0, nu_half = noise.visibilities()
    assert nu0 == pytest.approx(0.998, abs=1e-12)
    assert nu_half == pytest.approx(0.966, abs=1e-12)


@pytest.mark.parametrize(
    ("nu0", "nu_half", "name"),
    [(0.9, 0.95, "nu_half"), (1.2, 0.9, "nu0"), (0.9, -0.1, "nu_half"), (math.nan, 0.5, "nu0")],
)
def test_noise_rejects_bad_visibilities(nu0, nu_half, name):
    with pytest.raises(InvalidVisibilityError, match=name):
        noise_from_visibilities(nu0, nu_half)


def test_noiseless_branches():
    decomposition = branch_amplitudes(make_state(1.0), SAME, NoiseModel())
    assert len(decomposition.effective_branches) == 1
    assert decomposition.effective_branches[0].weight == 1.0


def test_dephasing_branches_flip_sign():
    decomposition = branch_amplitudes(
        make_state(math.pi / 2.0), SAME, NoiseModel(epsilon=0.0, p_deph=0.032)
    )
    keep, flip = decomposition.effective_branches
    assert keep.weight == pytest.approx(0.984)
    assert flip.weight == pytest.approx(0.016)
    assert keep.a == pytest.approx(flip.a)
    assert keep.b == pytest.approx(-flip.b)


@pytest.mark.parametrize("mode", [SAME, SIGMA3])
@pytest.mark.parametrize("degrees", [0, 35, 90, 120, 165, 180])
def test_branches_reproduce_postselection(mode, degrees, reference_setup):
    theta = math.radians(degrees)
    decomposition = branch_amplitudes(make_state(theta), mode, reference_setup.noise)
    assert math.fsum(branch.weight for branch in decomposition.branches) == pytest.approx(
        1.0, abs=1e-12
    )
    for g_delta in (0.0, 0.1, 0.3):
        assert decomposition.postselection_probability(g_delta) == pytest.approx(
            postselection_probability(g_delta, theta, mode, reference_setup), abs=1e-12
        )


def test_mode_validation():
    assert SAME.name == "same"
    assert PostSelectionMode.from_name("SIGMA3") == SIGMA3
    assert PostSelectionMode.custom(0.5).kind is PostSelectionKind.CUSTOM
    with pytest.raises(InvalidModeError):
        PostSelectionMode.from_name("custom")
    with pytest.raises(InvalidModeError):
        PostSelectionMode.from_name("bogus")
    with pytest.raises(InvalidModeError):
        PostSelectionMode(kind=PostSelectionKind.CUSTOM)
    with pytest.raises(InvalidModeError):
        PostSelectionMode(kind=PostSelectionKind.SAME, theta_f=0.1)
