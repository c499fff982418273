"""Tests for packet speeds, free spreading, screen patterns and the sphere."""

import math

import numpy as np
import pytest

from collapse_lab.hilbert import (
    GaussianParams,
    Grid,
    GridTooCoarse,
    derivative,
    make_gaussian,
    moments,
    superposition,
)
from collapse_lab.semiclassics import (
    NotNormalized,
    OutOfRange,
    ParticleParams,
    SemiclassicalBreakdown,
    SpherePoint,
    evolve_free,
    free_spread,
    fringe_visibility,
    harmonic_potential,
    pattern_mass,
    projective_speed_sq,
    rescale_to_unit_interval,
    screen_pattern,
    sphere_walk_view,
    spread_packets,
    to_sphere,
    velocity_decomposition,
)


def test_free_packet_at_rest_only_spreads():
    params = ParticleParams(1.0, 1.0, GaussianParams(0.0, 0.5))
    result = velocity_decomposition(params)
    assert result.classical == 0.0
    assert result.acceleration == 0.0
    assert result.spreading == pytest.approx(0.5)
    assert result.relative_error < 1e-6


def test_moving_packet_adds_classical_term():
    params = ParticleParams(1.0, 1.0, GaussianParams(0.0, 0.5, momentum=2.0))
    result = velocity_decomposition(params)
    assert params.velocity == 2.0
    assert result.classical == pytest.approx(4.0)
    assert result.analytic_total == pytest.approx(4.5)
    assert result.numeric_total == pytest.approx(4.5, rel=1e-6)


def test_slowly_varying_potential_adds_acceleration_term():
    omega = 0.1
    params = ParticleParams(
        1.0,
        1.0,
        GaussianParams(1.0, 0.5),
        potential=harmonic_potential(1.0, omega),
    )
    assert params.acceleration() == pytest.approx(-(omega**2), rel=1e-6)
    assert params.curvature() == pytest.approx(omega**2, rel=1e-6)
    result = velocity_decomposition(params)
    assert result.acceleration == pytest.approx(omega**4 * 0.25, rel=1e-6)
    assert result.relative_error < 0.01


def test_decomposition_closes_on_random_packets():
    rng = np.random.default_rng(2024)
    closed = 0
    for _ in range(500):
        mass = rng.uniform(0.5, 2.0)
        width = rng.uniform(0.3, 0.8)
        omega = rng.uniform(0.0, 0.3)
        packet = GaussianParams(
            rng.uniform(-2.0, 2.0), width, momentum=rng.uniform(-2.0, 2.0)
        )
        params = ParticleParams(
            mass, 1.0, packet, potential=harmonic_potential(mass, omega)
        )
        try:
            result = velocity_decomposition(params)
        except SemiclassicalBreakdown:
            continue
        assert result.relative_error < 0.011
        closed += 1
        if closed == 10:
            break
    assert closed == 10


@pytest.mark.parametrize(
    "omega, center, momentum", [(0.5, 2.0, 0.0), (1.0, 2.0, 0.0), (1.0, 2.0, 1.0)]
)
def test_curved_potential_is_outside_the_decomposition(omega, center, momentum):
    params = ParticleParams(
        1.0,
        1.0,
        GaussianParams(center, 0.5, momentum=momentum),
        potential=harmonic_potential(1.0, omega),
    )
    with pytest.raises(SemiclassicalBreakdown, match="curvature"):
        velocity_decomposition(params)


def test_curvature_terms_account_for_the_gap():
    # grid speed of a packet in a stiff trap, compared with the three terms
    # plus the two curvature pieces
    omega, sigma = 1.0, 0.5
    grid = Grid(-10.0, 14.0, 4096)
    psi = make_gaussian(GaussianParams(2.0, sigma), grid)
    potential = harmonic_potential(1.0, omega)(grid.z)
    h_psi = -0.5 * derivative(psi, grid, order=2) + potential * psi.amplitudes
    three_terms = (omega**2 * 2.0 * sigma) ** 2 + 1.0 / (32.0 * sigma**4)
    curvature = omega**4 * sigma**4 / 2.0 - omega**2 / 4.0
    speed_sq = projective_speed_sq(psi, h_psi, 1.0)
    assert speed_sq == pytest.approx(three_terms + curvature, rel=1e-6)


def test_constant_potential_does_not_change_the_speed():
    packet = GaussianParams(0.5, 0.5, momentum=1.0)
    free = velocity_decomposition(ParticleParams(1.0, 1.0, packet))
    shifted = velocity_decomposition(
        ParticleParams(
            1.0, 1.0, packet, potential=lambda z: np.full(np.shape(z), 3.0)
        )
    )
    assert shifted.acceleration == 0.0
    assert shifted.numeric_total == pytest.approx(free.numeric_total, rel=1e-9)


def test_global_phase_does_not_change_the_speed():
    grid = Grid(-10.0, 10.0, 4096)
    psi = make_gaussian(GaussianParams(1.0, 0.5, momentum=0.7), grid)
    potential = harmonic_potential(1.0, 0.2)(grid.z)

    def _speed_sq(state):
        h_state = -0.5 * derivative(state, grid, order=2)
        return projective_speed_sq(
            state, h_state + potential * state.amplitudes, 1.0
        )

    assert _speed_sq(psi.with_phase(2.1)) == pytest.approx(_speed_sq(psi), rel=1e-10)


def test_eigenstate_does_not_move():
    # ground state of the oscillator with omega = hbar / (2 m sigma**2)
    grid = Grid(-8.0, 8.0, 4096)
    psi = make_gaussian(GaussianParams(0.0, 0.5), grid)
    potential = harmonic_potential(1.0, 2.0)(grid.z)
    h_psi = -0.5 * derivative(psi, grid, order=2) + potential * psi.amplitudes
    assert projective_speed_sq(psi, h_psi, 1.0) == pytest.approx(0.0, abs=1e-8)


def test_decomposition_errors():
    packet = GaussianParams(4.0, 0.5)
    with pytest.raises(OutOfRange):
        velocity_decomposition(ParticleParams(1.0, 1.0, packet), Grid(-5.0, 5.0, 4096))
    with pytest.raises(GridTooCoarse):
        velocity_decomposition(
            ParticleParams(1.0, 1.0, GaussianParams(0.0, 0.5)), Grid(-10.0, 10.0, 64)
        )
    with pytest.raises(ValueError, match="positive"):
        ParticleParams(0.0, 1.0, packet)


def test_free_spread():
    after = free_spread(GaussianParams(1.0, 0.5, momentum=1.0), 1.0, 1.0, 2.0)
    assert after.center == pytest.approx(3.0)
    assert after.width == pytest.approx(math.sqrt(0.25 + 4.0))
    assert after.momentum == 1.0
    with pytest.raises(ValueError):
        free_spread(GaussianParams(0.0, 1.0), 1.0, 1.0, -1.0)


def test_evolve_free_matches_free_spread():
    grid = Grid(-40.0, 40.0, 4096)
    packet = GaussianParams(0.0, 0.5, momentum=1.0)
    evolved = evolve_free(make_gaussian(packet, grid), 1.0, 1.0, 2.0)
    expected = free_spread(packet, 1.0, 1.0, 2.0)
    mu, delta = moments(evolved)
    assert mu == pytest.approx(expected.center, abs=1e-8)
    assert delta == pytest.approx(expected.width, rel=1e-8)


def _packets(t=80.0, n_points=16384):
    spread = free_spread(GaussianParams(-10.0, 0.5), 1.0, 1.0, t).width
    grid = Grid.covering([-10.0, 10.0], spread, n_points)
    return grid, spread_packets(-10.0, 10.0, 0.5, 1.0, 1.0, t, grid)


def test_coherent_pattern_has_full_visibility():
    grid, (packet_a, packet_b) = _packets()
    amp = math.sqrt(0.5)
    pattern = screen_pattern(amp, amp, packet_a, packet_b, detector_present=False)
    assert pattern_mass(pattern, grid) == pytest.approx(1.0)
    assert fringe_visibility(pattern, grid, (-15.0, 15.0)) == pytest.approx(
        1.0, abs=1e-3
    )


def test_detector_washes_out_fringes():
    grid, (packet_a, packet_b) = _packets()
    pattern = screen_pattern(
        math.sqrt(0.3), math.sqrt(0.7), packet_a, packet_b, detector_present=True
    )
    assert pattern_mass(pattern, grid) == pytest.approx(1.0)
    assert fringe_visibility(pattern, grid, (-15.0, 15.0)) < 0.05
    both = 0.3 * packet_a.density + 0.7 * packet_b.density
    assert np.allclose(pattern, both)


def test_coherent_pattern_is_renormalized_sum():
    grid, (packet_a, packet_b) = _packets(t=1.0, n_points=4096)
    alpha, beta = math.sqrt(0.3), 1j * math.sqrt(0.7)
    pattern = screen_pattern(alpha, beta, packet_a, packet_b, detector_present=False)
    raw = abs(alpha * packet_a.amplitudes + beta * packet_b.amplitudes) ** 2
    assert np.allclose(pattern, raw / pattern_mass(raw, grid), rtol=1e-10)


def test_screen_pattern_errors():
    grid, (packet_a, packet_b) = _packets(t=1.0, n_points=4096)
    with pytest.raises(NotNormalized):
        screen_pattern(1.0, 1.0, packet_a, packet_b, detector_present=False)
    other = make_gaussian(GaussianParams(0.0, 1.0), Grid(-30.0, 30.0, 4096))
    with pytest.raises(ValueError, match="share a grid"):
        screen_pattern(1.0, 0.0, packet_a, other, detector_present=True)
    with pytest.raises(OutOfRange):
        fringe_visibility(packet_a.density, grid, (1e6, 2e6))


@pytest.mark.parametrize(
    "alpha, beta, point",
    [
        (1.0, 0.0, (0.0, 0.0, -1.0)),
        (0.0, 1.0, (0.0, 0.0, 1.0)),
        (math.sqrt(0.5), math.sqrt(0.5), (1.0, 0.0, 0.0)),
        (math.sqrt(0.5), 1j * math.sqrt(0.5), (0.0, 1.0, 0.0)),
    ],
)
def test_to_sphere(alpha, beta, point):
    result = to_sphere(alpha, beta)
    assert (result.x, result.y, result.z) == pytest.approx(point, abs=1e-12)


@pytest.mark.parametrize(
    "alpha, beta",
    [(1.0, 0.0), (math.sqrt(0.2), math.sqrt(0.8)), (0.6, 0.8j), (0.8, -0.6)],
)
def test_sphere_matches_packet_moments(alpha, beta):
    a, b, width = -5.0, 5.0, 0.25
    psi = superposition(
        [(alpha, GaussianParams(a, width)), (beta, GaussianParams(b, width))],
        Grid(-20.0, 20.0, 4096),
    )
    mu, delta = moments(psi)
    point = to_sphere(alpha, beta)
    assert rescale_to_unit_interval(mu, a, b) == pytest.approx(point.z, abs=1e-9)
    transverse = (2.0 / (b - a)) ** 2 * (delta**2 - width**2)
    assert transverse == pytest.approx(point.x**2 + point.y**2, abs=1e-9)


def test_sphere_point_must_be_on_sphere():
    with pytest.raises(NotNormalized):
        SpherePoint(1.0, 1.0, 0.0)
    with pytest.raises(NotNormalized):
        to_sphere(0.5, 0.5)


def test_sphere_walk_view():
    mu = rescale_to_unit_interval(np.array([-10.0, 5.0, 10.0]), -10.0, 10.0)
    assert mu == pytest.approx([-1.0, 0.5, 1.0])
    points = sphere_walk_view(mu)
    assert [p.z for p in points] == pytest.approx(list(mu))
    assert all(p.y == 0.0 for p in points)
    turned = sphere_walk_view([0.0], theta=[math.pi / 2])
    assert turned[0].y == pytest.approx(1.0)
    with pytest.raises(OutOfRange):
        sphere_walk_view([1.5])
