"""Tests for grid states, Fubini-Study geometry and squeeze-translate orbits."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collapse_lab.hilbert import (
    BoundaryMass,
    GaussianParams,
    Grid,
    GridMismatch,
    GridTooCoarse,
    GridWavefunction,
    ManifoldState,
    ResolutionLoss,
    SupportClipped,
    Tangent,
    UntrustedQuadrature,
    derivative,
    fubini_study_distance,
    gaussian_overlap_analytic,
    inner_product,
    log_overlap,
    make_gaussian,
    manifold_metric,
    moments,
    squeeze_translate,
    step_orthogonality,
    superposition,
    superposition_centers,
    superposition_moments,
    tangent_s,
    tangent_tau,
)

GRID = Grid(-20.0, 20.0, 4096)


def _two_slits(alpha_sq=0.25, a=-5.0, b=5.0, width=0.25, phase=0.0):
    alpha = math.sqrt(alpha_sq)
    beta = math.sqrt(1.0 - alpha_sq) * np.exp(1j * phase)
    return superposition(
        [(alpha, GaussianParams(a, width)), (beta, GaussianParams(b, width))],
        GRID,
    )


def test_grid_basics():
    grid = Grid(0.0, 1.0, 101)
    assert grid.dz == pytest.approx(0.01)
    assert grid.z[0] == 0.0
    assert grid.z[-1] == 1.0
    assert not grid.spectral
    assert Grid(0.0, 1.0, 1024).spectral
    assert grid.contains(0.2, 0.8)
    assert not grid.contains(-0.1, 0.5)
    with pytest.raises(ValueError, match="at least"):
        Grid(0.0, 1.0, 8)
    with pytest.raises(ValueError, match="z_min < z_max"):
        Grid(1.0, 0.0, 64)


def test_grid_covering():
    grid = Grid.covering([-3.0, 4.0], 0.5, 256)
    assert grid.z_min == pytest.approx(-9.0)
    assert grid.z_max == pytest.approx(10.0)
    assert grid.n_points == 256


def test_gaussian_is_normalized():
    psi = make_gaussian(GaussianParams(1.0, 0.5, momentum=2.0), GRID)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    mu, delta = moments(psi)
    assert mu == pytest.approx(1.0, abs=1e-9)
    assert delta == pytest.approx(0.5, rel=1e-9)


def test_gaussian_errors():
    with pytest.raises(GridTooCoarse):
        make_gaussian(GaussianParams(0.0, 0.01), GRID)
    with pytest.raises(SupportClipped):
        make_gaussian(GaussianParams(19.0, 1.0), GRID)
    with pytest.raises(ValueError, match="width"):
        GaussianParams(0.0, 0.0)


def test_wavefunction_requires_unit_norm():
    with pytest.raises(ValueError, match="not normalized"):
        GridWavefunction(GRID, np.full(GRID.n_points, 2.0))
    with pytest.raises(ValueError, match="vanishing"):
        GridWavefunction.normalized(GRID, np.zeros(GRID.n_points))
    amps = np.exp(-(GRID.z**2))
    psi = GridWavefunction.normalized(GRID, amps)
    assert psi.norm == pytest.approx(1.0)
    assert not psi.amplitudes.flags.writeable


def test_inner_product_grid_mismatch():
    psi = make_gaussian(GaussianParams(0.0, 1.0), GRID)
    other = make_gaussian(GaussianParams(0.0, 1.0), Grid(-20.0, 20.0, 2048))
    with pytest.raises(GridMismatch):
        inner_product(psi, other)


def test_distance_to_self_is_zero():
    psi = _two_slits()
    assert fubini_study_distance(psi, psi) < 1e-7
    assert fubini_study_distance(psi, psi.with_phase(1.3)) < 1e-7


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.0, max_value=2.0 * math.pi))
def test_distance_is_phase_invariant(theta):
    psi = make_gaussian(GaussianParams(0.0, 1.0, momentum=0.3), GRID)
    phi = make_gaussian(GaussianParams(1.5, 0.8), GRID)
    expected = fubini_study_distance(psi, phi)
    assert fubini_study_distance(psi.with_phase(theta), phi) == pytest.approx(
        expected, abs=1e-12
    )


def test_orthogonal_states_are_a_right_angle_apart():
    psi = make_gaussian(GaussianParams(-10.0, 0.5), GRID)
    phi = make_gaussian(GaussianParams(10.0, 0.5), GRID)
    assert fubini_study_distance(psi, phi) == pytest.approx(math.pi / 2)


def test_log_overlap_above_the_quadrature_floor():
    psi = make_gaussian(GaussianParams(0.0, 1.0), GRID)
    phi = make_gaussian(GaussianParams(4.0, 1.0), GRID)
    assert log_overlap(psi, phi) == pytest.approx(-2.0, abs=1e-8)


def test_log_overlap_below_the_quadrature_floor():
    p1, p2 = GaussianParams(-10.0, 1.0), GaussianParams(10.0, 1.0)
    psi, phi = make_gaussian(p1, GRID), make_gaussian(p2, GRID)
    analytic, _ = gaussian_overlap_analytic(p1, p2)
    assert analytic == pytest.approx(-50.0)
    with pytest.raises(UntrustedQuadrature, match="floor"):
        log_overlap(psi, phi)
    assert log_overlap(psi, phi, log_floor=-60.0) == pytest.approx(analytic, abs=1e-6)


def test_analytic_overlap_matches_grid():
    p1 = GaussianParams(-0.5, 0.7, momentum=0.4)
    p2 = GaussianParams(0.8, 1.1, momentum=-0.3)
    log_mag, phase = gaussian_overlap_analytic(p1, p2)
    numeric = inner_product(make_gaussian(p1, GRID), make_gaussian(p2, GRID))
    assert math.log(abs(numeric)) == pytest.approx(log_mag, abs=1e-10)
    assert np.angle(numeric) == pytest.approx(phase, abs=1e-9)


def test_widths_one_hundred_apart():
    b, delta = 1e-5, 1e-9
    log_mag, _ = gaussian_overlap_analytic(
        GaussianParams(b, delta), GaussianParams(b, 100 * delta)
    )
    assert math.acos(math.exp(log_mag)) == pytest.approx(1.429, abs=2e-3)


def test_widths_one_hundred_apart_on_grid():
    grid = Grid(-1250.0, 1250.0, 16384)
    narrow = make_gaussian(GaussianParams(0.0, 1.0), grid)
    wide = make_gaussian(GaussianParams(0.0, 100.0), grid)
    expected = math.acos(math.sqrt(200.0 / 10001.0))
    assert fubini_study_distance(narrow, wide) == pytest.approx(expected, abs=1e-6)


def test_shift_of_ten_widths():
    b, delta = 1e-5, 1e-9
    log_mag, _ = gaussian_overlap_analytic(
        GaussianParams(b, delta), GaussianParams(b - 10 * delta, delta)
    )
    assert log_mag == pytest.approx(-12.5, abs=0.01)


def test_cross_slit_overlap_stays_in_log_space():
    a, b, delta = 0.0, 1e-5, 1e-9
    wide = 100 * delta
    log_mag, _ = gaussian_overlap_analytic(
        GaussianParams(a, delta), GaussianParams(b, wide)
    )
    var_sum = delta**2 + wide**2
    expected = 0.5 * math.log(2 * delta * wide / var_sum) - (a - b) ** 2 / (
        4 * var_sum
    )
    assert log_mag == pytest.approx(expected, rel=1e-9)
    # far below the smallest representable double
    assert log_mag < -745.0
    assert math.exp(log_mag) < 1e-15


def test_moments_match_superposition_formulas():
    rng = np.random.default_rng(12)
    for _ in range(20):
        width = rng.uniform(0.2, 0.5)
        a = rng.uniform(-8.0, -2.0)
        b = a + rng.uniform(20.0, 30.0) * width
        alpha_sq = rng.uniform(0.05, 0.95)
        psi = _two_slits(alpha_sq, a, b, width, phase=rng.uniform(0, 6.28))
        mu, delta = moments(psi)
        mu_ref, delta_ref = superposition_moments(alpha_sq, a, b, width)
        assert mu == pytest.approx(mu_ref, abs=1e-6)
        assert delta == pytest.approx(delta_ref, abs=1e-6)


def test_superposition_centers_inverts_moments():
    mu, delta = superposition_moments(0.3, -4.0, 6.0, 0.5)
    c, d = superposition_centers(mu, delta, 0.3, 0.5)
    assert c == pytest.approx(-4.0)
    assert d == pytest.approx(6.0)
    assert superposition_centers(2.0, 0.5, 1.0) == (2.0, 2.0)


def test_moments_reject_boundary_mass():
    amps = np.ones(GRID.n_points)
    with pytest.raises(BoundaryMass):
        moments(GridWavefunction.normalized(GRID, amps))


@pytest.mark.parametrize("n_points", [4096, 4001])
def test_derivative_of_gaussian(n_points):
    grid = Grid(-20.0, 20.0, n_points)
    psi = make_gaussian(GaussianParams(0.0, 1.0), grid)
    exact = -grid.z / 2.0 * psi.amplitudes
    assert np.max(np.abs(derivative(psi, grid) - exact)) < 1e-6
    exact2 = (grid.z**2 / 4.0 - 0.5) * psi.amplitudes
    assert np.max(np.abs(derivative(psi, grid, order=2) - exact2)) < 1e-5


def test_step_orthogonality_two_and_three_packets():
    assert abs(step_orthogonality(_two_slits(0.3, phase=0.7))) < 1e-6
    three = superposition(
        [
            (0.5, GaussianParams(-10.0, 0.3)),
            (0.5j, GaussianParams(0.0, 0.3)),
            (math.sqrt(0.5), GaussianParams(10.0, 0.3)),
        ],
        GRID,
    )
    assert abs(step_orthogonality(three)) < 1e-6


def test_tangents_are_horizontal():
    phi = _two_slits(0.4, phase=1.1)
    i_phi = GridWavefunction(GRID, 1j * phi.amplitudes)
    for tangent in (tangent_tau(phi), tangent_s(phi)):
        assert abs(inner_product(i_phi, tangent).real) < 1e-8


def test_manifold_metric_of_a_gaussian():
    width = 0.8
    phi = make_gaussian(GaussianParams(1.0, width), GRID)
    g_tau, g_s = manifold_metric(phi)
    assert g_tau == pytest.approx(1.0 / (4.0 * width**2), rel=1e-6)
    assert g_s == pytest.approx(0.5, rel=1e-6)


def test_squeeze_translate_moves_moments():
    phi = _two_slits(0.25, a=-4.0, b=4.0, width=0.4)
    state = ManifoldState(phi).step(1.5, math.log(2.0))
    mu, delta = moments(state.realized)
    assert mu == pytest.approx(state.mu_z, abs=1e-5)
    assert delta == pytest.approx(state.delta_z, rel=1e-5)
    assert state.realized.norm == pytest.approx(1.0)


def test_squeeze_translate_identity():
    phi = _two_slits()
    same = squeeze_translate(phi, 0.0, 1.0)
    assert np.allclose(same.amplitudes, phi.amplitudes, atol=1e-12)


def test_squeeze_translate_errors():
    phi = make_gaussian(GaussianParams(0.0, 0.5), GRID)
    with pytest.raises(ResolutionLoss):
        squeeze_translate(phi, 0.0, 100.0)
    with pytest.raises(SupportClipped):
        squeeze_translate(phi, 19.0, 1.0)
    with pytest.raises(ValueError, match="lambda"):
        squeeze_translate(phi, 0.0, -1.0)


@pytest.mark.parametrize(
    "phi",
    [
        make_gaussian(GaussianParams(1.0, 0.8), GRID),
        _two_slits(0.3, a=-4.0, b=4.0, width=0.8, phase=0.5),
    ],
    ids=["gaussian", "two-slit"],
)
def test_tangents_match_finite_differences(phi):
    h = 1e-3
    moved = (
        squeeze_translate(phi, h, 1.0).amplitudes
        - squeeze_translate(phi, -h, 1.0).amplitudes
    ) / (2.0 * h)
    squeezed = (
        squeeze_translate(phi, 0.0, math.exp(h)).amplitudes
        - squeeze_translate(phi, 0.0, math.exp(-h)).amplitudes
    ) / (2.0 * h)
    pairs = ((moved, tangent_tau(phi)), (squeezed, tangent_s(phi)))
    for difference, tangent in pairs:
        gap = Tangent(GRID, difference - tangent.amplitudes)
        assert gap.norm < 1e-3 * tangent.norm


@pytest.mark.parametrize("dtau, ds", [(0.005, 0.0), (0.0, 0.005), (0.004, -0.003)])
@pytest.mark.parametrize(
    "phi",
    [
        make_gaussian(GaussianParams(1.0, 0.8), GRID),
        _two_slits(0.3, a=-4.0, b=4.0, width=0.8, phase=0.5),
    ],
    ids=["gaussian", "two-slit"],
)
def test_small_steps_follow_the_metric(phi, dtau, ds):
    # endpoints symmetric about phi, so the distance is second-order exact
    before = squeeze_translate(phi, -dtau / 2.0, math.exp(-ds / 2.0))
    after = squeeze_translate(phi, dtau / 2.0, math.exp(ds / 2.0))
    g_tau, g_s = manifold_metric(phi)
    expected = g_tau * dtau**2 + g_s * ds**2
    assert fubini_study_distance(before, after) ** 2 == pytest.approx(
        expected, rel=2e-3
    )
