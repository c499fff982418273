"""Crank-Nicolson solutions of ``rho_t = D rho_zz`` from point sources.

On the whole line the domain is cut far enough out that no mass reaches its
ends. On an interval ``[a, b]`` the ends absorb, and the solver keeps an
exact ledger of the mass that left through each end, so that interior mass
plus absorbed mass equals one to rounding. The long-time split of absorbed
mass is the continuum counterpart of the gambler's ruin; it is read off the
ledger, never inferred from the mass still inside.
"""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import math
import warnings
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.linalg import solve_banded

from .collapse import Histogram
from .config import _update_with_defaults
from .hilbert import Grid, GridWavefunction

DOMAINS = ("whole-line", "interval")
# whole-line cut-off, in final standard deviations
_REACH = 10.0
# backward-Euler half steps before Crank-Nicolson takes over
_RANNACHER_HALF_STEPS = 4
_WEIGHT_TOLERANCE = 1e-12
_NEGATIVE_TOLERANCE = 1e-10


class DiffusionInstability(ArithmeticError):
    """Raised when the time stepping produces an unphysical density."""

    pass


class SourceOnBoundary(ValueError):
    """Raised when a point source is not strictly inside the interval."""

    pass


class BinningMismatch(ValueError):
    """Raised when histogram bins do not fit the solution's support."""

    pass


class SplittingNotConverged(RuntimeWarning):
    """Issued when too little mass is absorbed by the end of a splitting run."""

    pass


@dataclass(frozen=True)
class DiffusionProblem:
    """Diffusion with coefficient ``diffusion_coefficient`` from weighted
    point sources ``((c_1, w_1), ...)`` up to ``t_final``."""

    diffusion_coefficient: float
    sources: Tuple[Tuple[float, float], ...]
    t_final: float
    domain: str = "whole-line"
    a: Optional[float] = None
    b: Optional[float] = None
    n_points: int = 801
    dt: float = 0.5

    def __post_init__(self):
        object.__setattr__(
            self, "sources", tuple((float(c), float(w)) for c, w in self.sources)
        )
        if self.domain not in DOMAINS:
            raise ValueError("specified an invalid domain kind: %s" % self.domain)
        if not self.diffusion_coefficient > 0:
            raise ValueError("diffusion coefficient must be positive")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not self.sources:
            raise ValueError("need at least one source")
        weights = [w for _, w in self.sources]
        if min(weights) < 0 or abs(sum(weights) - 1.0) > _WEIGHT_TOLERANCE:
            raise ValueError(f"source weights must be >= 0 and sum to 1: {weights}")
        if not (self.dt > 0 and math.isfinite(self.dt)) or self.n_points < 3:
            raise DiffusionInstability(
                f"need dt > 0 and at least 3 nodes, got dt={self.dt}, "
                f"n_points={self.n_points}"
            )
        if self.domain == "interval":
            if self.a is None or self.b is None or not self.a < self.b:
                raise ValueError("interval domain needs a < b")
            for c, _ in self.sources:
                if not self.a < c < self.b:
                    raise SourceOnBoundary(
                        f"source {c} is not inside ({self.a}, {self.b})"
                    )

    @property
    def bounds(self) -> Tuple[float, float]:
        if self.domain == "interval":
            return self.a, self.b
        centers = [c for c, _ in self.sources]
        reach = _REACH * math.sqrt(2.0 * self.diffusion_coefficient * self.t_final)
        return min(centers) - reach, max(centers) + reach

    @property
    def x(self) -> np.ndarray:
        lo, hi = self.bounds
        return np.linspace(lo, hi, self.n_points)


@dataclass(frozen=True, eq=False)
class DiffusionSolution:
    """Density on ``x`` at ``time`` and the mass absorbed at each end."""

    problem: DiffusionProblem
    x: np.ndarray
    density: np.ndarray
    time: float
    absorbed_a: float = 0.0
    absorbed_b: float = 0.0
    snapshots: Tuple[Tuple[float, np.ndarray], ...] = ()

    @property
    def interior_mass(self) -> float:
        return float(trapezoid(self.density, self.x))

    @property
    def total_mass(self) -> float:
        return self.interior_mass + self.absorbed_a + self.absorbed_b


class _Stepper:
    """Implicit steps on the interior nodes with zero Dirichlet ends."""

    def __init__(self, problem: DiffusionProblem):
        x = problem.x
        self.dx = x[1] - x[0]
        self.coefficient = problem.diffusion_coefficient
        self.n_inner = problem.n_points - 2

    def _banded(self, r: float) -> np.ndarray:
        ab = np.empty((3, self.n_inner))
        ab[0] = -r
        ab[1] = 1.0 + 2.0 * r
        ab[2] = -r
        return ab

    def backward_euler(self, inner: np.ndarray, dt: float):
        r = self.coefficient * dt / self.dx**2
        new = solve_banded((1, 1), self._banded(r), inner)
        return new, self.dx * r * new[0], self.dx * r * new[-1]

    def crank_nicolson(self, inner: np.ndarray, dt: float):
        half = 0.5 * self.coefficient * dt / self.dx**2
        rhs = (1.0 - 2.0 * half) * inner
        rhs[1:] += half * inner[:-1]
        rhs[:-1] += half * inner[1:]
        new = solve_banded((1, 1), self._banded(half), rhs)
        out_a = self.dx * half * (new[0] + inner[0])
        out_b = self.dx * half * (new[-1] + inner[-1])
        return new, out_a, out_b


def _initial_density(problem: DiffusionProblem) -> Tuple[np.ndarray, float, float]:
    """Split each source linearly over its two neighbouring nodes.

    Shares that land on an end node count as absorbed at time zero.
    """
    x = problem.x
    dx = x[1] - x[0]
    density = np.zeros(problem.n_points)
    for c, w in problem.sources:
        position = (c - x[0]) / dx
        left = min(int(math.floor(position)), problem.n_points - 2)
        frac = position - left
        density[left] += w * (1.0 - frac) / dx
        density[left + 1] += w * frac / dx
    absorbed_a, absorbed_b = density[0] * dx, density[-1] * dx
    density[0] = density[-1] = 0.0
    return density, absorbed_a, absorbed_b


def _schedule(duration: float, dt: float) -> List[Tuple[str, float]]:
    n_steps = max(1, math.ceil(duration / dt - 1e-12))
    dt = duration / n_steps
    start = min(_RANNACHER_HALF_STEPS, 2 * n_steps)
    plan = [("be", dt / 2.0)] * start
    return plan + [("cn", dt)] * (n_steps - start // 2)


def _march(
    problem: DiffusionProblem,
    stop_unabsorbed: Optional[float] = None,
    n_snapshots: int = 0,
) -> DiffusionSolution:
    stepper = _Stepper(problem)
    density, out_a, out_b = _initial_density(problem)
    inner = density[1:-1].copy()
    plan = _schedule(problem.t_final, problem.dt)
    snap_every = max(1, len(plan) // n_snapshots) if n_snapshots else 0
    snapshots = []
    time = 0.0
    for count, (kind, dt) in enumerate(plan, start=1):
        if kind == "be":
            inner, d_a, d_b = stepper.backward_euler(inner, dt)
        else:
            inner, d_a, d_b = stepper.crank_nicolson(inner, dt)
        out_a += d_a
        out_b += d_b
        time += dt
        if snap_every and count % snap_every == 0:
            snapshots.append((time, np.pad(inner, 1)))
        if stop_unabsorbed is not None and 1.0 - (out_a + out_b) < stop_unabsorbed:
            break
    peak = max(float(inner.max(initial=0.0)), 0.0)
    if inner.min(initial=0.0) < -_NEGATIVE_TOLERANCE * max(peak, 1.0):
        raise DiffusionInstability(
            f"density went negative ({inner.min():.3g}); use a smaller dt"
        )
    density = np.pad(np.clip(inner, 0.0, None), 1)
    return DiffusionSolution(
        problem=problem,
        x=problem.x,
        density=density,
        time=time,
        absorbed_a=float(out_a),
        absorbed_b=float(out_b),
        snapshots=tuple(snapshots),
    )


def solve(problem: DiffusionProblem, snapshots: int = 0) -> DiffusionSolution:
    """Evolve the sources of ``problem`` to ``t_final``.

    Starts with backward-Euler half steps, then continues with Crank-Nicolson.
    ``snapshots`` evenly spaced intermediate densities are kept on request.

    """
    return _march(problem, n_snapshots=snapshots)


class Splitting(NamedTuple):
    p_a: float
    p_b: float
    converged: bool
    time: float


def splitting_probabilities(
    problem: DiffusionProblem, tol: Optional[float] = None
) -> Splitting:
    """Long-time absorbed mass at ``a`` and at ``b``.

    Runs until the interior mass drops below ``tol`` or ``t_final`` is
    reached and returns the mass absorbed at each end by then. The run has
    converged once at least ``1 - tol`` of the mass is absorbed; otherwise
    :class:`SplittingNotConverged` is issued and the masses fall short of
    the limit.

    """
    if problem.domain != "interval":
        raise ValueError("splitting probabilities need an interval domain")
    tol = _update_with_defaults(tol, "interior_mass_tol")
    solution = _march(problem, stop_unabsorbed=tol)
    absorbed = solution.absorbed_a + solution.absorbed_b
    converged = 1.0 - absorbed < tol
    if not converged:
        warnings.warn(
            f"only {absorbed:.6g} of the mass is absorbed at t={solution.time}",
            SplittingNotConverged,
            stacklevel=2,
        )
    return Splitting(solution.absorbed_a, solution.absorbed_b, converged, solution.time)


def interval_state(
    c: float,
    sigma: float,
    a: float,
    b: float,
    n_points: int = 2001,
    dt: Optional[float] = None,
) -> GridWavefunction:
    """Square root of the absorbing-interval density with variance ``sigma**2``.

    Diffuses a unit source at ``c`` with coefficient 1/2 up to
    ``t = sigma**2``. Away from the ends this is ``g_{c, sigma}``; close to an
    end the state is squeezed to vanish there.

    """
    t_final = sigma**2
    problem = DiffusionProblem(
        diffusion_coefficient=0.5,
        sources=((c, 1.0),),
        t_final=t_final,
        domain="interval",
        a=a,
        b=b,
        n_points=n_points,
        dt=dt if dt is not None else t_final / 200.0,
    )
    solution = solve(problem)
    return GridWavefunction.normalized(
        Grid(a, b, n_points), np.sqrt(solution.density)
    )


def heat_kernel(z, c: float, diffusion_coefficient: float, t: float):
    """Free-space density at ``z`` of a unit source at ``c`` after ``t``."""
    spread = 4.0 * diffusion_coefficient * t
    return np.exp(-((np.asarray(z) - c) ** 2) / spread) / math.sqrt(
        math.pi * spread
    )


def matched_diffusion_coefficient(
    step_variance: float, step_time: float = 1.0
) -> float:
    """``D`` of the continuum limit of a walk with the given step variance."""
    return step_variance / (2.0 * step_time)


def bin_masses(solution: DiffusionSolution, edges: Sequence[float]) -> np.ndarray:
    """Mass of the solution density between consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise BinningMismatch("bin edges must be strictly increasing")
    if edges[0] < solution.x[0] or edges[-1] > solution.x[-1]:
        raise BinningMismatch(
            f"bins [{edges[0]}, {edges[-1]}] extend past the solution "
            f"support [{solution.x[0]}, {solution.x[-1]}]"
        )
    running = cumulative_trapezoid(solution.density, solution.x, initial=0.0)
    return np.diff(np.interp(edges, solution.x, running))


def compare_histogram(histogram: Histogram, solution: DiffusionSolution) -> float:
    """L1 distance between a walk histogram and the solution density.

    Both are reduced to per-bin masses plus the mass outside all bins, so
    the distance lies in ``[0, 2]``.

    """
    expected = bin_masses(solution, histogram.edges)
    expected_outside = solution.interior_mass - float(expected.sum())
    return float(
        np.abs(histogram.masses - expected).sum()
        + abs(histogram.outside - expected_outside)
    )
