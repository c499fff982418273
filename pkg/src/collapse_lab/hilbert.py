"""Wavefunctions on a uniform 1-D grid and their squeeze-translate geometry.

States are complex amplitude vectors on a :class:`Grid`, normalized with the
trapezoid rule. Geometry is Fubini-Study: the distance between two unit
states is ``arccos |<psi, phi>|``. The squeeze-translate orbit of a reference state
is the two-parameter family of its translated (``tau``) and squeezed
(``lambda = e**s``) copies.
"""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline
from scipy.special import erfc

from .config import _update_with_defaults

MIN_POINTS = 16
MIN_NODES_PER_WIDTH = 4
NORM_TOLERANCE = 1e-10
CLIP_TOLERANCE = 1e-8
# separation, in widths, above which Gaussian cross terms are ignored
WELL_SEPARATED = 8.0
DEFAULT_MARGIN = 12.0


class GridMismatch(ValueError):
    """Raised when two grid vectors do not live on the same grid."""

    pass


class GridTooCoarse(ValueError):
    """Raised when a feature is narrower than the grid can resolve."""

    pass


class SupportClipped(ValueError):
    """Raised when a state has non-negligible mass outside the grid."""

    pass


class BoundaryMass(ValueError):
    """Raised when moments are requested for a state touching the edges."""

    pass


class ResolutionLoss(ValueError):
    """Raised when squeezing would leave the state under-resolved."""

    pass


class UntrustedQuadrature(ArithmeticError):
    """Raised when an overlap is too small for grid quadrature to resolve."""

    pass


@dataclass(frozen=True)
class Grid:
    """Uniform discretization of ``[z_min, z_max]`` with both ends included."""

    z_min: float
    z_max: float
    n_points: int = 4096

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ValueError(
                f"grid needs z_min < z_max, got {self.z_min} >= {self.z_max}"
            )
        if self.n_points < MIN_POINTS:
            raise ValueError(
                f"grid needs at least {MIN_POINTS} points, got {self.n_points}"
            )

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.n_points - 1)

    @cached_property
    def z(self) -> np.ndarray:
        nodes = np.linspace(self.z_min, self.z_max, self.n_points)
        nodes.setflags(write=False)
        return nodes

    @property
    def spectral(self) -> bool:
        """Whether derivatives are taken spectrally (power-of-two sizes)."""
        return self.n_points & (self.n_points - 1) == 0

    def contains(self, lo: float, hi: float) -> bool:
        return self.z_min <= lo and hi <= self.z_max

    @classmethod
    def covering(
        cls,
        centers: Iterable[float],
        width: float,
        n_points: int = 4096,
        margin: float = DEFAULT_MARGIN,
    ) -> "Grid":
        """Return a grid spanning all ``centers`` plus ``margin`` widths."""
        centers = list(centers)
        return cls(
            min(centers) - margin * width,
            max(centers) + margin * width,
            n_points,
        )


@dataclass(frozen=True, eq=False)
class _GridVector:
    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} amplitudes, got {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_sq(self) -> float:
        return float(trapezoid(np.abs(self.amplitudes) ** 2, dx=self.grid.dz))

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)


@dataclass(frozen=True, eq=False)
class Tangent(_GridVector):
    """A tangent vector at a grid state (not normalized)."""


@dataclass(frozen=True, eq=False)
class GridWavefunction(_GridVector):
    """A unit-norm state on a grid."""

    def __post_init__(self):
        super().__post_init__()
        if abs(self.norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(
                f"state is not normalized (norm = {self.norm!r}); "
                "use GridWavefunction.normalized"
            )

    @classmethod
    def normalized(cls, grid: Grid, amplitudes) -> "GridWavefunction":
        """Build a state from arbitrary amplitudes, rescaling to unit norm."""
        amps = np.asarray(amplitudes, dtype=complex)
        norm_sq = trapezoid(np.abs(amps) ** 2, dx=grid.dz)
        if not norm_sq > 0:
            raise ValueError("cannot normalize a vanishing state")
        return cls(grid, amps / math.sqrt(norm_sq))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_phase(self, theta: float) -> "GridWavefunction":
        """Return ``e**(i theta) psi``."""
        return GridWavefunction(self.grid, np.exp(1j * theta) * self.amplitudes)


@dataclass(frozen=True)
class GaussianParams:
    """A Gaussian packet: ``|psi|**2`` is normal with mean ``center``.

    ``width`` is the standard deviation of ``|psi|**2`` and ``momentum`` the
    momentum of the plane-wave factor ``exp(i p z / hbar)``.
    """

    center: float
    width: float
    momentum: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")


def _gaussian_mass_outside(params: GaussianParams, grid: Grid) -> float:
    scale = params.width * math.sqrt(2.0)
    return 0.5 * (
        erfc((params.center - grid.z_min) / scale)
        + erfc((grid.z_max - params.center) / scale)
    )


def make_gaussian(
    params: GaussianParams, grid: Grid, hbar: float = 1.0
) -> GridWavefunction:
    """Realize ``g_{a,sigma} exp(i p z / hbar)`` on ``grid``.

    Raises
    ------
    GridTooCoarse
        If the width spans fewer than four grid spacings.
    SupportClipped
        If more than 1e-8 of the probability lies outside the grid.

    """
    if params.width < MIN_NODES_PER_WIDTH * grid.dz:
        raise GridTooCoarse(
            f"width {params.width} is below {MIN_NODES_PER_WIDTH} grid "
            f"spacings ({grid.dz})"
        )
    outside = _gaussian_mass_outside(params, grid)
    if outside > CLIP_TOLERANCE:
        raise SupportClipped(
            f"Gaussian at {params.center} loses {outside:.3g} of its mass "
            f"outside [{grid.z_min}, {grid.z_max}]"
        )
    z = grid.z
    amps = (2.0 * math.pi * params.width**2) ** -0.25 * np.exp(
        -((z - params.center) ** 2) / (4.0 * params.width**2)
        + 1j * params.momentum * z / hbar
    )
    return GridWavefunction.normalized(grid, amps)


def superposition(
    components: Sequence[Tuple[complex, GaussianParams]],
    grid: Grid,
    hbar: float = 1.0,
) -> GridWavefunction:
    """Return the normalized sum of weighted Gaussians."""
    if not components:
        raise ValueError("need at least one component")
    amps = sum(
        coef * make_gaussian(params, grid, hbar).amplitudes
        for coef, params in components
    )
    return GridWavefunction.normalized(grid, amps)


def _check_same_grid(first: _GridVector, second: _GridVector) -> None:
    if first.grid != second.grid:
        raise GridMismatch(f"{first.grid} != {second.grid}")


def inner_product(psi: _GridVector, phi: _GridVector) -> complex:
    """Trapezoid-rule quadrature of ``conj(psi) * phi``."""
    _check_same_grid(psi, phi)
    return complex(
        trapezoid(np.conj(psi.amplitudes) * phi.amplitudes, dx=psi.grid.dz)
    )


def fubini_study_distance(psi: _GridVector, phi: _GridVector) -> float:
    """Return ``arccos |<psi, phi>|`` in ``[0, pi/2]``.

    Close states go through the chord ``2 arcsin(|psi - c phi| / 2)`` with the
    optimal phase ``c``, which avoids the loss of precision of ``arccos`` near
    one.

    Overlaps below the quadrature floor leave the result within that floor of
    ``pi/2``; use :func:`log_overlap` when their size matters.

    """
    overlap = inner_product(psi, phi)
    norms = psi.norm * phi.norm
    magnitude = min(abs(overlap) / norms, 1.0)
    if magnitude < 0.5:
        return math.acos(magnitude)
    phase = np.conj(overlap) / abs(overlap)
    diff = psi.amplitudes / psi.norm - phase * phi.amplitudes / phi.norm
    chord = math.sqrt(trapezoid(np.abs(diff) ** 2, dx=psi.grid.dz))
    return 2.0 * math.asin(min(chord / 2.0, 1.0))


def log_overlap(
    psi: _GridVector, phi: _GridVector, log_floor: Optional[float] = None
) -> float:
    """Return ``log |<psi, phi>|`` of the normalized states by quadrature.

    Grid quadrature is trusted down to ``log_floor`` (the global
    ``quadrature_log_floor`` by default). Smaller overlaps raise
    :class:`UntrustedQuadrature`; take Gaussian pairs that far apart from
    :func:`gaussian_overlap_analytic` instead.

    """
    log_floor = _update_with_defaults(log_floor, "quadrature_log_floor")
    magnitude = abs(inner_product(psi, phi)) / (psi.norm * phi.norm)
    if magnitude == 0.0 or math.log(magnitude) <= log_floor:
        raise UntrustedQuadrature(
            f"overlap {magnitude:.3g} is below the quadrature floor "
            f"exp({log_floor})"
        )
    return math.log(magnitude)


def gaussian_overlap_analytic(
    p1: GaussianParams, p2: GaussianParams, hbar: float = 1.0
) -> Tuple[float, float]:
    """Return ``(log |<g1, g2>|, arg <g1, g2>)`` of two Gaussian packets.

    The overlap is integrated in closed form and never exponentiated, so
    separations whose overlap underflows a double stay representable. With
    equal widths the squared magnitude is
    ``exp(-(a - b)**2 / (4 sigma**2) - (p - q)**2 sigma**2 / hbar**2)``.

    """
    k1, k2 = p1.momentum / hbar, p2.momentum / hbar
    v1, v2 = p1.width**2, p2.width**2
    quad = 1.0 / (4.0 * v1) + 1.0 / (4.0 * v2)
    lin = p1.center / (2.0 * v1) + p2.center / (2.0 * v2) + 1j * (k2 - k1)
    const = p1.center**2 / (4.0 * v1) + p2.center**2 / (4.0 * v2)
    log_overlap = (
        0.5 * math.log(math.pi / quad)
        - 0.25 * math.log(2.0 * math.pi * v1)
        - 0.25 * math.log(2.0 * math.pi * v2)
        + lin**2 / (4.0 * quad)
        - const
    )
    phase = math.remainder(log_overlap.imag, 2.0 * math.pi)
    return float(log_overlap.real), phase


def moments(psi: GridWavefunction) -> Tuple[float, float]:
    """Return the mean ``mu_z`` and standard deviation ``delta_z`` of z.

    Raises
    ------
    BoundaryMass
        If the outermost nodes carry more than 1e-8 of the probability, in
        which case the second moment is not trustworthy.

    """
    grid = psi.grid
    density = psi.density / psi.norm_sq
    edge = max(2, grid.n_points // 100)
    boundary = (
        trapezoid(density[:edge], dx=grid.dz)
        + trapezoid(density[-edge:], dx=grid.dz)
    )
    if boundary > CLIP_TOLERANCE:
        raise BoundaryMass(
            f"{boundary:.3g} of the probability sits at the grid edges"
        )
    z = grid.z
    mu = float(trapezoid(z * density, dx=grid.dz))
    var = float(trapezoid((z - mu) ** 2 * density, dx=grid.dz))
    return mu, math.sqrt(var)


def superposition_moments(
    alpha_sq: float, a: float, b: float, width: float = 0.0
) -> Tuple[float, float]:
    """Moments of ``alpha g_a + beta g_b`` for orthogonal Gaussians.

    ``mu_z = |alpha|**2 a + |beta|**2 b`` and
    ``delta_z**2 = |alpha|**2 |beta|**2 (a - b)**2 + width**2``; the last term
    is the intrinsic spread of each packet and vanishes for narrow states.

    """
    beta_sq = 1.0 - alpha_sq
    mu = alpha_sq * a + beta_sq * b
    var = alpha_sq * beta_sq * (a - b) ** 2 + width**2
    return mu, math.sqrt(var)


def superposition_centers(
    mu_z: float, delta_z: float, alpha_sq: float, width: float = 0.0
) -> Tuple[float, float]:
    """Invert :func:`superposition_moments` for the centers ``c <= d``."""
    if alpha_sq <= 0.0 or alpha_sq >= 1.0:
        return mu_z, mu_z
    spread = math.sqrt(max(delta_z**2 - width**2, 0.0))
    alpha, beta = math.sqrt(alpha_sq), math.sqrt(1.0 - alpha_sq)
    return mu_z - beta * spread / alpha, mu_z + alpha * spread / beta


def derivative(
    vector: Union[_GridVector, np.ndarray], grid: Grid, order: int = 1
) -> np.ndarray:
    """Differentiate grid amplitudes ``order`` times (1 or 2).

    Spectral on power-of-two grids, fourth-order central differences
    otherwise. Both assume amplitudes vanish at the grid ends.

    """
    amps = np.asarray(getattr(vector, "amplitudes", vector), dtype=complex)
    dz = grid.dz
    if grid.spectral:
        k = 2.0 * math.pi * np.fft.fftfreq(grid.n_points, d=dz)
        factor = (1j * k) ** order
        if order % 2:
            factor[grid.n_points // 2] = 0.0
        return np.fft.ifft(factor * np.fft.fft(amps))
    f = np.pad(amps, 2)
    if order == 1:
        return (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * dz)
    if order == 2:
        return (
            -f[4:] + 16.0 * f[3:-1] - 30.0 * f[2:-2] + 16.0 * f[1:-3] - f[:-4]
        ) / (12.0 * dz**2)
    raise ValueError(f"unsupported derivative order: {order}")


def squeeze_translate(
    phi: GridWavefunction, tau: float, lam: float
) -> GridWavefunction:
    """Return ``sqrt(lam) phi(lam (z - mu_z - tau) + mu_z)``.

    Moves the mean by ``tau`` and divides the spread by ``lam``. Values come
    from cubic splines of the real and imaginary parts; the result is
    renormalized.

    Raises
    ------
    SupportClipped
        If the transformed state would lose mass outside the grid.
    ResolutionLoss
        If the squeezed spread drops below four grid spacings.

    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    grid = phi.grid
    mu, delta = moments(phi)
    if delta / lam < MIN_NODES_PER_WIDTH * grid.dz:
        raise ResolutionLoss(
            f"spread {delta / lam:.3g} under-resolved on spacing {grid.dz:.3g}"
        )
    z = grid.z
    # mass of phi that lands outside the grid after the map
    lo = lam * (grid.z_min - mu - tau) + mu
    hi = lam * (grid.z_max - mu - tau) + mu
    cumulative = cumulative_trapezoid(phi.density, z, initial=0.0)
    kept = np.interp(min(hi, grid.z_max), z, cumulative) - np.interp(
        max(lo, grid.z_min), z, cumulative
    )
    if 1.0 - kept > CLIP_TOLERANCE:
        raise SupportClipped(
            f"translate {tau} / squeeze {lam} pushes {1.0 - kept:.3g} of "
            "the probability off the grid"
        )
    source = lam * (z - mu - tau) + mu
    inside = (source >= grid.z_min) & (source <= grid.z_max)
    real = CubicSpline(z, phi.amplitudes.real)
    imag = CubicSpline(z, phi.amplitudes.imag)
    values = np.zeros(grid.n_points, dtype=complex)
    values[inside] = math.sqrt(lam) * (
        real(source[inside]) + 1j * imag(source[inside])
    )
    return GridWavefunction.normalized(grid, values)


def tangent_tau(phi: GridWavefunction) -> Tangent:
    """Tangent of the translation path at ``tau = 0``: ``-dphi/dz``."""
    return Tangent(phi.grid, -derivative(phi, phi.grid))


def tangent_s(phi: GridWavefunction) -> Tangent:
    """Tangent of the squeeze path at ``s = 0``.

    Equals ``phi / 2 + (z - mu_z) dphi/dz``.
    """
    mu, _ = moments(phi)
    dphi = derivative(phi, phi.grid)
    return Tangent(
        phi.grid, 0.5 * phi.amplitudes + (phi.grid.z - mu) * dphi
    )


def step_orthogonality(phi: GridWavefunction) -> float:
    """Normalized ``Re <tangent_s, tangent_tau>``; ~0 on separated packets."""
    t_s, t_tau = tangent_s(phi), tangent_tau(phi)
    return inner_product(t_s, t_tau).real / (t_s.norm * t_tau.norm)


def manifold_metric(phi: GridWavefunction) -> Tuple[float, float]:
    """Fubini-Study metric coefficients ``(g_tau_tau, g_s_s)`` at ``phi``.

    Each is the squared norm of the tangent with its component along ``phi``
    removed. The off-diagonal term vanishes by :func:`step_orthogonality`, so
    ``(sqrt(g_tau_tau) tau, sqrt(g_s_s) s)`` are Cartesian coordinates.

    """
    coefficients = []
    for tangent in (tangent_tau(phi), tangent_s(phi)):
        along = inner_product(phi, tangent)
        coefficients.append(tangent.norm_sq - abs(along) ** 2)
    return coefficients[0], coefficients[1]


@dataclass(frozen=True, eq=False)
class ManifoldState:
    """A point ``(tau, s)`` on the squeeze-translate orbit of ``reference``."""

    reference: GridWavefunction
    tau: float = 0.0
    s: float = 0.0

    @cached_property
    def _reference_moments(self) -> Tuple[float, float]:
        return moments(self.reference)

    @cached_property
    def realized(self) -> GridWavefunction:
        return squeeze_translate(self.reference, self.tau, math.exp(self.s))

    @property
    def mu_z(self) -> float:
        return self._reference_moments[0] + self.tau

    @property
    def delta_z(self) -> float:
        return self._reference_moments[1] * math.exp(-self.s)

    def step(self, dtau: float, ds: float) -> "ManifoldState":
        return replace(self, tau=self.tau + dtau, s=self.s + ds)
