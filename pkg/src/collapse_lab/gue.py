"""Gaussian Unitary Ensemble sampling and random-matrix state walks.

A GUE matrix is ``H = (A + A^dagger) / sqrt(2)`` with ``A`` filled by iid
complex normals whose real and imaginary parts have standard deviation
``scale``. One walk step evolves a state by ``exp(-i H dt)`` with a fresh,
independent ``H``.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import erf

from .config import _update_with_defaults
from .core import run_stream
from .hilbert import GridWavefunction, tangent_s, tangent_tau

STATE_NORM_TOLERANCE = 1e-12
_BATCH = 500


class DimensionMismatch(ValueError):
    """Raised when a state and a matrix have different dimensions."""

    pass


class EigendecompositionError(ArithmeticError):
    """Raised when the Hermitian eigensolver does not converge."""

    pass


class FrameDegeneracy(ArithmeticError):
    """Raised when the tangent frame at a state collapses."""

    pass


@dataclass(frozen=True)
class GueParams:
    """Dimension, entry scale and seed of a GUE."""

    dim: int
    scale: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def stream(self, index: int = 0) -> np.random.Generator:
        return run_stream(_update_with_defaults(self.seed, "seed"), index)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A complex matrix equal to its conjugate transpose."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"expected a square matrix, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("matrix entries must be finite")
        if not np.array_equal(entries, entries.conj().T):
            raise ValueError("matrix is not Hermitian")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class StateVector:
    """A unit vector of ``C^dim``."""

    components: np.ndarray

    def __post_init__(self):
        components = np.array(self.components, dtype=complex)
        if components.ndim != 1:
            raise ValueError("state vector must be one-dimensional")
        norm = np.linalg.norm(components)
        if abs(norm - 1.0) > STATE_NORM_TOLERANCE:
            raise ValueError(f"state vector is not normalized ({norm!r})")
        components.setflags(write=False)
        object.__setattr__(self, "components", components)

    @classmethod
    def normalized(cls, components) -> "StateVector":
        components = np.asarray(components, dtype=complex)
        return cls(components / np.linalg.norm(components))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "StateVector":
        """Draw a state uniformly from the unit sphere of ``C^dim``."""
        return cls.normalized(
            rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        )

    @property
    def dim(self) -> int:
        return self.components.shape[0]


def sample_gue_batch(
    params: GueParams, rng: np.random.Generator, count: int
) -> np.ndarray:
    """Return ``count`` independent GUE draws stacked on the first axis."""
    shape = (count, params.dim, params.dim)
    a = rng.normal(0.0, params.scale, shape) + 1j * rng.normal(
        0.0, params.scale, shape
    )
    return (a + np.conj(np.swapaxes(a, -1, -2))) / math.sqrt(2.0)


def sample_gue(
    params: GueParams, rng: Optional[np.random.Generator] = None
) -> HermitianMatrix:
    """Draw one matrix from the GUE described by ``params``.

    Off-diagonal entries have real and imaginary parts of variance
    ``scale**2``; diagonal entries are real with variance ``2 scale**2``.

    """
    rng = rng if rng is not None else params.stream()
    return HermitianMatrix(sample_gue_batch(params, rng, 1)[0])


def _propagate(entries: np.ndarray, vector: np.ndarray, dt: float):
    try:
        energies, basis = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise EigendecompositionError(str(exc)) from exc
    phases = np.exp(-1j * energies * dt)
    return basis @ (phases * (basis.conj().T @ vector))


def evolve_step(v: StateVector, H: HermitianMatrix, dt: float) -> StateVector:
    """Return ``exp(-i H dt) v`` computed from the eigendecomposition of H."""
    if v.dim != H.dim:
        raise DimensionMismatch(f"state has dim {v.dim}, matrix {H.dim}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return StateVector(_propagate(H.entries, v.components, dt))


def rm_walk(
    v0: StateVector,
    steps: int,
    dt: float,
    params: GueParams,
    rng: Optional[np.random.Generator] = None,
) -> List[StateVector]:
    """Walk ``v0`` through ``steps`` independent GUE evolutions.

    Returns the full trajectory, ``v0`` included. Deterministic given the
    stream (by default the one of ``params.seed``).

    """
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    if v0.dim != params.dim:
        raise DimensionMismatch(f"state has dim {v0.dim}, GUE {params.dim}")
    rng = rng if rng is not None else params.stream()
    trajectory = [v0]
    for _ in range(steps):
        trajectory.append(evolve_step(trajectory[-1], sample_gue(params, rng), dt))
    return trajectory


def state_distance(v: StateVector, w: StateVector) -> float:
    """Fubini-Study distance between two states of ``C^dim``."""
    overlap = np.vdot(v.components, w.components)
    magnitude = min(abs(overlap), 1.0)
    if magnitude < 0.5:
        return math.acos(magnitude)
    phase = np.conj(overlap) / abs(overlap)
    chord = np.linalg.norm(v.components - phase * w.components)
    return 2.0 * math.asin(min(chord / 2.0, 1.0))


def step_time_for_angle(
    params: GueParams, rms_angle: Optional[float] = None
) -> float:
    """Return the ``dt`` whose RMS Fubini-Study step is ``rms_angle``.

    For small steps ``E[rho**2] = dt**2 E[Var_v(H)] = 2 scale**2 (dim - 1)
    dt**2`` independently of the state.

    """
    rms_angle = _update_with_defaults(rms_angle, "step_angle")
    if params.dim < 2:
        raise ValueError("a walk needs dim >= 2")
    return rms_angle / (params.scale * math.sqrt(2.0 * (params.dim - 1)))


def _tangent_frame(
    phi: GridWavefunction, frame_size: int, rng: np.random.Generator
) -> np.ndarray:
    grid = phi.grid
    t_tau, t_s = tangent_tau(phi), tangent_s(phi)
    for name, tangent in (("tau", t_tau), ("s", t_s)):
        if tangent.norm < 1e-12:
            raise FrameDegeneracy(f"tangent_{name} vanishes at the state")
    z = grid.z
    span = grid.z_max - grid.z_min
    columns = [phi.amplitudes, t_tau.amplitudes, t_s.amplitudes]
    for _ in range(frame_size - len(columns)):
        center = rng.uniform(grid.z_min + 0.2 * span, grid.z_max - 0.2 * span)
        width = rng.uniform(0.02 * span, 0.1 * span)
        phase = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        columns.append(phase * np.exp(-((z - center) ** 2) / (4 * width**2)))
    frame = np.stack(columns, axis=1) * math.sqrt(grid.dz)
    q, r = np.linalg.qr(frame)
    diag = np.diag(r)
    if np.min(np.abs(diag)) < 1e-12 * np.max(np.abs(diag)):
        raise FrameDegeneracy("tangent frame is linearly dependent")
    # orient each basis vector along the vector it was built from
    return q * (diag / np.abs(diag))


def induced_manifold_steps(
    phi: GridWavefunction,
    params: GueParams,
    dt: Optional[float] = None,
    n_samples: int = 10_000,
    frame_size: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Sample the ``(dtau, ds)`` components of random-matrix steps at ``phi``.

    The Hamiltonian acts on a ``frame_size``-dimensional orthonormal frame
    built by Gram-Schmidt from ``phi``, its two manifold tangents and random
    smooth packets. Each step ``-i H phi dt`` is projected on the normalized
    translation and squeeze tangents; the real parts are returned as an
    ``(n_samples, 2)`` array.

    """
    frame_size = _update_with_defaults(frame_size, "frame_size")
    if frame_size < 3:
        raise ValueError("the frame needs phi and both tangents")
    rng = rng if rng is not None else params.stream()
    frame_params = GueParams(frame_size, params.scale, params.seed)
    dt = dt if dt is not None else step_time_for_angle(frame_params)
    frame = _tangent_frame(phi, frame_size, rng)
    # frame coordinates of phi; the frame is orthonormal, so projections
    # of a step on frame vectors are its coordinates
    coords = frame.conj().T @ (phi.amplitudes * math.sqrt(phi.grid.dz))
    samples = np.empty((n_samples, 2))
    done = 0
    while done < n_samples:
        count = min(_BATCH, n_samples - done)
        hs = sample_gue_batch(frame_params, rng, count)
        steps = -1j * dt * (hs @ coords)
        samples[done : done + count] = steps[:, 1:3].real
        done += count
    return samples


def entry_variances(
    params: GueParams, n_draws: int, rng: Optional[np.random.Generator] = None
) -> Dict[str, float]:
    """Sample variances of diagonal and off-diagonal GUE entries."""
    rng = rng if rng is not None else params.stream()
    diag, off_re, off_im = [], [], []
    upper = np.triu_indices(params.dim, k=1)
    for start in range(0, n_draws, _BATCH):
        hs = sample_gue_batch(params, rng, min(_BATCH, n_draws - start))
        diag.append(np.diagonal(hs, axis1=1, axis2=2).real.ravel())
        off = hs[:, upper[0], upper[1]].ravel()
        off_re.append(off.real)
        off_im.append(off.imag)
    return {
        "diagonal": float(np.var(np.concatenate(diag))),
        "offdiag_real": (
            float(np.var(np.concatenate(off_re))) if params.dim > 1 else math.nan
        ),
        "offdiag_imag": (
            float(np.var(np.concatenate(off_im))) if params.dim > 1 else math.nan
        ),
    }


def sample_spectra(
    params: GueParams, n_draws: int, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """Sorted eigenvalues of ``n_draws`` GUE matrices, one row per draw."""
    rng = rng if rng is not None else params.stream()
    rows = []
    for start in range(0, n_draws, _BATCH):
        hs = sample_gue_batch(params, rng, min(_BATCH, n_draws - start))
        rows.append(np.linalg.eigvalsh(hs))
    return np.concatenate(rows)


def _semicircle_cdf(x: np.ndarray, radius: float) -> np.ndarray:
    u = np.clip(x / radius, -1.0, 1.0)
    return 0.5 + (u * np.sqrt(1.0 - u**2) + np.arcsin(u)) / math.pi


def unfolded_spacings(spectra: np.ndarray, params: GueParams) -> np.ndarray:
    """Nearest-neighbour spacings of the spectral bulk, unit mean.

    Eigenvalues are unfolded with the semicircle law of radius
    ``2 sqrt(2 dim) scale``; only the middle half of each spectrum is kept.

    """
    dim = spectra.shape[1]
    radius = 2.0 * math.sqrt(2.0 * dim) * params.scale
    unfolded = dim * _semicircle_cdf(spectra, radius)
    lo, hi = dim // 4, dim - dim // 4
    spacings = np.diff(unfolded[:, lo:hi], axis=1).ravel()
    return spacings / spacings.mean()


def wigner_surmise_cdf(s):
    """CDF of the unitary-class surmise ``(32 / pi**2) s**2 e**(-4 s**2/pi)``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, None)
    return erf(2.0 * s / math.sqrt(math.pi)) - 4.0 * s / math.pi * np.exp(
        -4.0 * s**2 / math.pi
    )


def spacing_ks_statistic(spacings: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance between spacings and the surmise."""
    return float(stats.kstest(spacings, wigner_surmise_cdf).statistic)


def spectral_moments(spectra: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over draws of the first four moments."""
    per_draw = np.stack(
        [np.mean(spectra**k, axis=1) for k in range(1, 5)], axis=1
    )
    mean = per_draw.mean(axis=0)
    stderr = per_draw.std(axis=0, ddof=1) / math.sqrt(per_draw.shape[0])
    return mean, stderr


def cap_walk(
    v0: StateVector,
    params: GueParams,
    dt: float,
    cap: float,
    max_steps: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Optional[int]:
    """Walk ``v0`` until it enters a cap around a basis state.

    The walk stops when ``|<e_k, v>|**2 >= 1 - cap`` for some ``k`` and
    returns that ``k``; ``None`` if ``max_steps`` run out first. Exploratory:
    the unconstrained walk is not expected to reproduce the Born rule.

    """
    if not 0 < cap < 1:
        raise ValueError(f"cap must be in (0, 1), got {cap}")
    max_steps = _update_with_defaults(max_steps, "max_steps")
    rng = rng if rng is not None else params.stream()
    vector = v0.components
    for _ in range(max_steps):
        weights = np.abs(vector) ** 2
        hit = int(np.argmax(weights))
        if weights[hit] >= 1.0 - cap:
            return hit
        vector = _propagate(sample_gue_batch(params, rng, 1)[0], vector, dt)
        vector = vector / np.linalg.norm(vector)
    return None
