"""Semiclassical checks: the speed of a Gaussian packet, free spreading,
screen patterns with and without a which-slit detector, and the Bloch-sphere
view of the manifold walk."""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .config import _update_with_defaults
from .hilbert import (
    GaussianParams,
    Grid,
    GridTooCoarse,
    GridWavefunction,
    Tangent,
    derivative,
    inner_product,
    make_gaussian,
)

NORM_TOLERANCE = 1e-12
# relative gap between grid speed and three-term sum treated as a grid failure
DECOMPOSITION_TOLERANCE = 0.05
# share of the squared speed the three terms may miss through curvature of V
VALIDITY_TOLERANCE = 0.01
# clearance, in widths, between the packet and the grid ends
PACKET_CLEARANCE = 8.0

Potential = Callable[[np.ndarray], np.ndarray]


class NotNormalized(ValueError):
    """Raised when amplitudes do not satisfy ``|alpha|**2 + |beta|**2 = 1``."""

    pass


class OutOfRange(ValueError):
    """Raised when a position lies outside its admissible range."""

    pass


class SemiclassicalBreakdown(ValueError):
    """Raised when the potential is too curved across a packet for the
    three-term speed decomposition."""

    pass


def harmonic_potential(mass: float, omega: float) -> Potential:
    """``V(z) = m omega**2 z**2 / 2``."""

    def _potential(z):
        return 0.5 * mass * omega**2 * np.asarray(z) ** 2

    return _potential


@dataclass(frozen=True)
class ParticleParams:
    mass: float
    hbar: float
    packet: GaussianParams
    potential: Optional[Potential] = None

    def __post_init__(self):
        if not self.mass > 0 or not self.hbar > 0:
            raise ValueError("mass and hbar must be positive")

    @property
    def velocity(self) -> float:
        return self.packet.momentum / self.mass

    def potential_on(self, z: np.ndarray) -> np.ndarray:
        if self.potential is None:
            return np.zeros_like(z)
        values = np.asarray(self.potential(z), dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("potential must be finite on the grid")
        return values

    def _potential_near_center(self, h: float) -> Tuple[float, float, float]:
        a = self.packet.center
        values = np.asarray(self.potential(np.array([a - h, a, a + h])), dtype=float)
        return float(values[0]), float(values[1]), float(values[2])

    def acceleration(self) -> float:
        """``w = -V'(a) / m`` by a central difference at the packet center."""
        if self.potential is None:
            return 0.0
        h = 1e-4 * self.packet.width
        left, _, right = self._potential_near_center(h)
        return -(right - left) / (2.0 * h) / self.mass

    def curvature(self) -> float:
        """``V''(a)`` by a central difference at the packet center."""
        if self.potential is None:
            return 0.0
        h = 1e-2 * self.packet.width
        left, mid, right = self._potential_near_center(h)
        return (left - 2.0 * mid + right) / h**2


class Decomposition(NamedTuple):
    classical: float
    acceleration: float
    spreading: float
    numeric_total: float

    @property
    def analytic_total(self) -> float:
        return self.classical + self.acceleration + self.spreading

    @property
    def relative_error(self) -> float:
        return abs(self.numeric_total - self.analytic_total) / self.numeric_total


def projective_speed_sq(
    psi: GridWavefunction, hamiltonian_psi: np.ndarray, hbar: float
) -> float:
    """Fubini-Study squared speed ``|psi'|**2 - |<psi, psi'>|**2`` of
    ``psi' = -(i / hbar) H psi``."""
    velocity = Tangent(psi.grid, -1j / hbar * np.asarray(hamiltonian_psi))
    return velocity.norm_sq - abs(inner_product(psi, velocity)) ** 2


def velocity_decomposition(
    params: ParticleParams, grid: Optional[Grid] = None
) -> Decomposition:
    """Split the squared speed of a Gaussian packet into three terms.

    The analytic terms are ``v**2 / (4 sigma**2)``,
    ``m**2 w**2 sigma**2 / hbar**2`` and ``hbar**2 / (32 sigma**4 m**2)``.
    The total is recomputed independently on the grid from the Hamiltonian
    ``-hbar**2 / (2 m) d**2/dz**2 + V``.

    The three terms treat ``V`` as linear across the packet. With curvature
    ``kappa = V''(a)`` the exact squared speed has two more pieces,
    ``kappa**2 sigma**4 / (2 hbar**2) - kappa / (4 m)``; the split is only
    offered while they stay within 1% of the total.

    Raises
    ------
    OutOfRange
        If the packet sits closer than eight widths to a grid end.
    SemiclassicalBreakdown
        If the potential curves too much across the packet for the split.
    GridTooCoarse
        If grid and analytic totals differ by more than 5%.

    """
    packet, m, hbar = params.packet, params.mass, params.hbar
    if grid is None:
        grid = Grid.covering(
            [packet.center],
            packet.width,
            _update_with_defaults(None, "n_points"),
        )
    clearance = PACKET_CLEARANCE * packet.width
    if not grid.contains(packet.center - clearance, packet.center + clearance):
        raise OutOfRange(
            f"packet at {packet.center} is within {PACKET_CLEARANCE} widths "
            "of the grid ends"
        )
    sigma = packet.width
    classical = params.velocity**2 / (4.0 * sigma**2)
    acceleration = (m * params.acceleration() * sigma / hbar) ** 2
    spreading = hbar**2 / (32.0 * sigma**4 * m**2)
    kappa = params.curvature()
    neglected = kappa**2 * sigma**4 / (2.0 * hbar**2) - kappa / (4.0 * m)
    exact = classical + acceleration + spreading + neglected
    if abs(neglected) > VALIDITY_TOLERANCE * abs(exact):
        raise SemiclassicalBreakdown(
            f"curvature V''={kappa:.3g} across the packet shifts the squared "
            f"speed by {neglected:.3g} out of {exact:.3g}"
        )

    psi = make_gaussian(packet, grid, hbar)
    h_psi = -(hbar**2) / (2.0 * m) * derivative(
        psi, grid, order=2
    ) + params.potential_on(grid.z) * psi.amplitudes
    numeric = projective_speed_sq(psi, h_psi, hbar)
    result = Decomposition(classical, acceleration, spreading, numeric)
    if result.relative_error > DECOMPOSITION_TOLERANCE:
        raise GridTooCoarse(
            f"grid speed {numeric:.6g} is {result.relative_error:.1%} away "
            f"from the three-term sum {result.analytic_total:.6g}"
        )
    return result


def free_spread(
    packet: GaussianParams, mass: float, hbar: float, t: float
) -> GaussianParams:
    """Parameters of ``packet`` after free flight for time ``t``."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    width = math.sqrt(
        packet.width**2 + (hbar * t / (2.0 * mass * packet.width)) ** 2
    )
    return GaussianParams(
        packet.center + packet.momentum / mass * t, width, packet.momentum
    )


def evolve_free(
    psi: GridWavefunction, mass: float, hbar: float, t: float
) -> GridWavefunction:
    """Exact free evolution of the grid state, taken in momentum space."""
    grid = psi.grid
    k = 2.0 * math.pi * np.fft.fftfreq(grid.n_points, d=grid.dz)
    phase = np.exp(-1j * hbar * k**2 * t / (2.0 * mass))
    return GridWavefunction.normalized(
        grid, np.fft.ifft(phase * np.fft.fft(psi.amplitudes))
    )


def spread_packets(
    a: float,
    b: float,
    width: float,
    mass: float,
    hbar: float,
    t: float,
    grid: Optional[Grid] = None,
) -> Tuple[GridWavefunction, GridWavefunction]:
    """Packets that left the slits at ``a`` and ``b`` with ``width``, after
    free flight for ``t``."""
    if grid is None:
        spread = free_spread(GaussianParams(a, width), mass, hbar, t).width
        grid = Grid.covering(
            [a, b], spread, _update_with_defaults(None, "n_points")
        )
    return tuple(
        evolve_free(
            make_gaussian(GaussianParams(center, width), grid, hbar),
            mass,
            hbar,
            t,
        )
        for center in (a, b)
    )


def _check_amplitudes(alpha: complex, beta: complex) -> float:
    total = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(total - 1.0) > NORM_TOLERANCE:
        raise NotNormalized(f"|alpha|^2 + |beta|^2 = {total!r}")
    return total


def screen_pattern(
    alpha: complex,
    beta: complex,
    packet_a: GridWavefunction,
    packet_b: GridWavefunction,
    detector_present: bool,
) -> np.ndarray:
    """Density on the screen behind the two slits.

    With a which-slit detector the packets add incoherently; without one the
    amplitudes add and the pattern shows interference fringes. The coherent
    pattern is ``|alpha g_a + beta g_b|**2`` rescaled to unit mass on the
    grid, so packets that still overlap lose their cross-term mass.

    """
    _check_amplitudes(alpha, beta)
    if packet_a.grid != packet_b.grid:
        raise ValueError("packets must share a grid")
    if detector_present:
        return abs(alpha) ** 2 * packet_a.density + abs(beta) ** 2 * packet_b.density
    coherent = alpha * packet_a.amplitudes + beta * packet_b.amplitudes
    return GridWavefunction.normalized(packet_a.grid, coherent).density


def fringe_visibility(
    pattern: np.ndarray, grid: Grid, window: Tuple[float, float]
) -> float:
    """``(P_max - P_min) / (P_max + P_min)`` over the nodes in ``window``."""
    inside = (grid.z >= window[0]) & (grid.z <= window[1])
    if not inside.any():
        raise OutOfRange(f"window {window} holds no grid nodes")
    values = np.asarray(pattern)[inside]
    top, bottom = values.max(), values.min()
    return float((top - bottom) / (top + bottom))


def pattern_mass(pattern: np.ndarray, grid: Grid) -> float:
    return float(trapezoid(pattern, dx=grid.dz))


@dataclass(frozen=True)
class SpherePoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm_sq = self.x**2 + self.y**2 + self.z**2
        if abs(norm_sq - 1.0) > NORM_TOLERANCE:
            raise NotNormalized(f"point is off the unit sphere ({norm_sq!r})")


def to_sphere(alpha: complex, beta: complex) -> SpherePoint:
    """Bundle projection of ``alpha e_a + beta e_b`` onto the unit sphere."""
    total = _check_amplitudes(alpha, beta)
    scale = 1.0 / math.sqrt(total)
    alpha, beta = complex(alpha) * scale, complex(beta) * scale
    cross = alpha * beta.conjugate()
    return SpherePoint(
        x=2.0 * cross.real,
        y=-2.0 * cross.imag,
        z=abs(beta) ** 2 - abs(alpha) ** 2,
    )


def rescale_to_unit_interval(tau, a: float, b: float):
    """Affine map of ``[a, b]`` onto ``[-1, 1]``."""
    return (2.0 * np.asarray(tau) - a - b) / (b - a)


def sphere_walk_view(
    mu_z: Sequence[float], theta: Optional[Sequence[float]] = None
) -> List[SpherePoint]:
    """Lift a walk of ``mu_z`` in ``[-1, 1]`` to the sphere.

    Uses ``delta_z**2 = 1 - mu_z**2``; the azimuth ``theta`` stays at zero
    unless given.

    """
    mu = np.asarray(mu_z, dtype=float)
    if mu.size and (mu.min() < -1.0 or mu.max() > 1.0):
        raise OutOfRange("mu_z must lie in [-1, 1]; rescale first")
    angle = np.zeros_like(mu) if theta is None else np.asarray(theta, float)
    radius = np.sqrt(1.0 - mu**2)
    return [
        SpherePoint(float(r * math.cos(t)), float(r * math.sin(t)), float(m))
        for m, r, t in zip(mu, radius, angle)
    ]
