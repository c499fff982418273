"""A detector of finite resolution and the physical eigenstates it defines.

The detector splits an interval ``D`` into cells of size ``d_eta``. A state
``phi`` is registered with probability ``sum_k |<phi, eta_k>|**2``, where
``eta_k`` is the normalized indicator of cell ``k``. States whose detection
probability is within ``epsilon`` of a reference Gaussian's are
indistinguishable to the detector: they form one equivalence class, the
physical eigenstate.
"""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize

from .config import _update_with_defaults
from .hilbert import (
    MIN_NODES_PER_WIDTH,
    GaussianParams,
    Grid,
    GridWavefunction,
    ResolutionLoss,
    SupportClipped,
    fubini_study_distance,
    inner_product,
    make_gaussian,
    moments,
    squeeze_translate,
)


class DetectorOutsideGrid(ValueError):
    """Raised when the detector interval is not covered by the grid."""

    pass


@dataclass(frozen=True)
class DetectorConfig:
    """The interval ``[center - length / 2, center + length / 2]`` split
    into ``round(length / cell_size)`` equal cells."""

    center: float
    length: float
    cell_size: float
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.length > 0 or not self.cell_size > 0:
            raise ValueError("detector length and cell size must be positive")
        if self.cell_size > self.length:
            raise ValueError(
                f"cell size {self.cell_size} exceeds length {self.length}"
            )
        epsilon = _update_with_defaults(self.epsilon, "epsilon")
        if not 0 < epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
        object.__setattr__(self, "epsilon", epsilon)

    @property
    def lo(self) -> float:
        return self.center - self.length / 2.0

    @property
    def hi(self) -> float:
        return self.center + self.length / 2.0

    @property
    def n_cells(self) -> int:
        return max(1, round(self.length / self.cell_size))

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_cells + 1)


def _cell_integrals(phi: GridWavefunction, edges: np.ndarray) -> np.ndarray:
    z = phi.grid.z
    running = cumulative_trapezoid(phi.amplitudes, z, initial=0.0)
    at_edges = np.interp(edges, z, running.real) + 1j * np.interp(
        edges, z, running.imag
    )
    return np.diff(at_edges)


def detection_probability(phi: GridWavefunction, det: DetectorConfig) -> float:
    """Return ``sum_k |<phi, eta_k>|**2`` over the cells of ``det``.

    Cells may be narrower than the grid spacing; cell integrals come from
    the running integral of ``phi`` interpolated at the cell edges.

    Raises
    ------
    DetectorOutsideGrid
        If ``det`` reaches beyond the grid of ``phi``.

    """
    if not phi.grid.contains(det.lo, det.hi):
        raise DetectorOutsideGrid(
            f"detector [{det.lo}, {det.hi}] is not inside "
            f"[{phi.grid.z_min}, {phi.grid.z_max}]"
        )
    edges = det.edges
    cells = _cell_integrals(phi, edges)
    total = float(np.sum(np.abs(cells) ** 2 / np.diff(edges)))
    return min(max(total, 0.0), 1.0)


def reaches_detector(
    mu_z: float,
    delta_z: float,
    det: DetectorConfig,
    r: Optional[float] = None,
) -> bool:
    """Whether ``(mu_z - r delta_z, mu_z + r delta_z)`` lies inside ``D``."""
    r = _update_with_defaults(r, "detector_r")
    return det.lo <= mu_z - r * delta_z and mu_z + r * delta_z <= det.hi


@dataclass(frozen=True, eq=False)
class PhysicalEigenstateClass:
    """States the detector cannot tell apart from ``reference``.

    ``reference_probability`` is the detection probability ``P_b`` of the
    reference state; membership asks for at least ``P_b - epsilon``.
    """

    detector: DetectorConfig
    reference_probability: float
    reference: Optional[GridWavefunction] = None

    def __post_init__(self):
        if not 0 < self.reference_probability <= 1:
            raise ValueError(
                "reference probability must be in (0, 1], got "
                f"{self.reference_probability}"
            )

    @classmethod
    def at(
        cls,
        detector: DetectorConfig,
        width: float,
        grid: Grid,
        center: Optional[float] = None,
    ) -> "PhysicalEigenstateClass":
        """Class of the Gaussian of ``width`` at ``center`` (default: the
        detector center); its detection probability is computed once."""
        center = detector.center if center is None else center
        reference = make_gaussian(GaussianParams(center, width), grid)
        return cls(
            detector=detector,
            reference_probability=detection_probability(reference, detector),
            reference=reference,
        )

    def __contains__(self, phi: GridWavefunction) -> bool:
        return is_physical_eigenstate(phi, self)


def is_physical_eigenstate(
    phi: GridWavefunction, eigenclass: PhysicalEigenstateClass
) -> bool:
    probability = detection_probability(phi, eigenclass.detector)
    threshold = eigenclass.reference_probability - eigenclass.detector.epsilon
    return probability >= threshold


def two_gaussian_class_distance(beta: complex) -> float:
    """Distance ``arccos |beta|`` of ``alpha g_a + beta g_b`` to the class
    of ``g_b`` when the two Gaussians are orthogonal."""
    return math.acos(min(abs(beta), 1.0))


def _member_bounds(
    eigenclass: PhysicalEigenstateClass, r: float
) -> Tuple[Tuple[float, float], Tuple[float, float], float, float]:
    det = eigenclass.detector
    grid = eigenclass.reference.grid
    mu, delta = moments(eigenclass.reference)
    # s range: wide enough to keep r spreads inside D, narrow enough to resolve
    s_lo = math.log(max(2.0 * r * delta / det.length, 1e-300))
    s_hi = math.log(delta / (MIN_NODES_PER_WIDTH * grid.dz))
    s_lo = min(s_lo, s_hi)
    return (s_lo, s_hi), (det.lo - mu, det.hi - mu), mu, delta


def class_distance(
    phi: GridWavefunction,
    eigenclass: PhysicalEigenstateClass,
    r: Optional[float] = None,
) -> float:
    """Fubini-Study distance from ``phi`` to the class of its reference.

    The infimum over the whole class is approximated by the members
    ``squeeze_translate(reference, tau, e**s)`` whose ``r``-sigma interval
    stays in ``D``: a coarse search over ``(tau, s)`` seeded at the densest
    point of ``phi`` in ``D``, then a bounded Nelder-Mead refinement.

    """
    if eigenclass.reference is None:
        raise ValueError("class has no reference state to search around")
    r = _update_with_defaults(r, "detector_r")
    (s_lo, s_hi), (tau_lo, tau_hi), mu, delta = _member_bounds(eigenclass, r)
    det = eigenclass.detector

    def _tau_range(s: float) -> Tuple[float, float]:
        margin = r * delta * math.exp(-s)
        return tau_lo + margin, tau_hi - margin

    def _member(tau: float, s: float) -> Optional[GridWavefunction]:
        lo, hi = _tau_range(s)
        if not lo <= tau <= hi:
            return None
        try:
            return squeeze_translate(eigenclass.reference, tau, math.exp(s))
        except (ResolutionLoss, SupportClipped):
            return None

    def _loss(point: np.ndarray) -> float:
        member = _member(float(point[0]), float(point[1]))
        if member is None:
            return 1.0
        return -abs(inner_product(phi, member))

    z = phi.grid.z
    inside = (z >= det.lo) & (z <= det.hi)
    densest = float(z[inside][np.argmax(phi.density[inside])]) - mu
    s_grid = np.linspace(s_lo, s_hi, 9)
    if 0.0 not in s_grid and s_lo <= 0.0 <= s_hi:
        s_grid = np.append(s_grid, 0.0)
    candidates = []
    for s in s_grid:
        lo, hi = _tau_range(s)
        if lo > hi:
            continue
        taus = np.linspace(lo, hi, 11)
        taus = np.append(taus, np.clip([densest, 0.0], lo, hi))
        candidates.extend((tau, s) for tau in taus)
    if not candidates:
        return math.pi / 2.0
    start = min(candidates, key=lambda point: _loss(np.array(point)))
    if _loss(np.array(start)) >= 0.0:
        return math.pi / 2.0
    best = minimize(
        _loss,
        np.array(start),
        method="Nelder-Mead",
        bounds=[(tau_lo, tau_hi), (s_lo, s_hi)],
        options={"xatol": 1e-3 * delta, "fatol": 1e-12},
    )
    point = best.x if best.fun <= _loss(np.array(start)) else np.array(start)
    member = _member(float(point[0]), float(point[1]))
    return fubini_study_distance(phi, member)
