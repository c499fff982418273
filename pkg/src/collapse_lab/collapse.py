"""The (tau, s) squeeze-translate random walk and its Born-rule ensembles.

A state ``alpha g_a + beta g_b`` is tracked through ``tau`` (the mean
``mu_z``) and ``s = ln lambda`` (so that ``delta_z = delta_z0 e**-s``). Each
step adds an iid step to ``tau`` and an iid step plus the drift ``h`` to
``s``. A run that reaches slit ``a`` or ``b`` stays pinned there and ends once
``delta_z`` is below the detector scale ``delta``. Continuous steps also test
the Brownian bridge between two positions, so a slit touched between steps
counts as reached.
"""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ._types import AbsorbMode, Outcome, StepDistribution
from .config import _update_with_defaults, get_global_params
from .core import map_ordered, run_stream, run_streams, split_blocks
from .steppers import get_stepper
from .steppers.base import _BaseStepper

OUTCOMES: Tuple[Outcome, ...] = ("none", "slit_a", "slit_b")
_NONE, _SLIT_A, _SLIT_B = range(3)
_CHUNK = 256
_BLOCK = 4096
_ABSORB_MODES = ("joint", "tau-only")


class OutOfInterval(ValueError):
    """Raised when a start position lies outside ``[a, b]``."""

    pass


class TrajectoryDecimated(RuntimeWarning):
    """Issued when a long trajectory is only kept every k-th step."""

    pass


@dataclass(frozen=True)
class WalkConfig:
    """Parameters of the manifold walk between slits ``a < b``.

    ``reflect_at`` caps ``delta_z`` with a reflecting boundary (default
    ``|alpha||beta|(b - a)``, the spread of the initial state; ``math.inf``
    leaves ``s`` unbounded). ``absorb_mode="tau-only"`` ends a run as soon as it
    reaches a slit, whatever ``delta_z``. With ``absorbing`` off the walk
    ignores the slits.
    """

    a: float = -10.0
    b: float = 10.0
    alpha_sq: float = 0.25
    step_tau: float = 1.0
    step_s: float = 1.0
    drift_h: float = 0.5
    delta_detect: float = 1.0
    step_distribution: StepDistribution = "fixed"
    max_steps: Optional[int] = None
    seed: Optional[int] = None
    reflect_at: Optional[float] = None
    absorb_mode: AbsorbMode = "joint"
    absorbing: bool = True

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if not 0.0 <= self.alpha_sq <= 1.0:
            raise ValueError(f"alpha_sq must be in [0, 1], got {self.alpha_sq}")
        if self.step_tau < 0 or self.step_s < 0:
            raise ValueError("step magnitudes must be non-negative")
        if self.drift_h < 0:
            raise ValueError(f"drift_h must be >= 0, got {self.drift_h}")
        if not 0 < self.delta_detect < (self.b - self.a) / 2:
            raise ValueError(
                "delta_detect must be in (0, (b - a) / 2), "
                f"got {self.delta_detect}"
            )
        if self.reflect_at is not None and not self.reflect_at > 0:
            raise ValueError(f"reflect_at must be positive, got {self.reflect_at}")
        if self.max_steps is not None and self.max_steps < 0:
            raise ValueError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.absorb_mode not in _ABSORB_MODES:
            raise ValueError("specified an invalid absorb mode: %s" % self.absorb_mode)
        get_stepper(self.step_distribution)

    @property
    def beta_sq(self) -> float:
        return 1.0 - self.alpha_sq

    @property
    def stepper(self) -> _BaseStepper:
        return get_stepper(self.step_distribution)

    @property
    def tau0(self) -> float:
        """Initial mean ``|alpha|**2 a + |beta|**2 b``."""
        return self.alpha_sq * self.a + self.beta_sq * self.b

    @property
    def delta0(self) -> float:
        """Initial spread ``|alpha||beta|(b - a)``."""
        return math.sqrt(self.alpha_sq * self.beta_sq) * (self.b - self.a)

    @property
    def reflect_bound(self) -> float:
        return self.delta0 if self.reflect_at is None else self.reflect_at

    @property
    def s_reflect(self) -> float:
        """Lowest reachable ``s``, where ``delta_z`` equals ``reflect_bound``."""
        if self.delta0 == 0.0 or math.isinf(self.reflect_bound):
            return -math.inf
        return math.log(self.delta0 / self.reflect_bound)

    @property
    def s_detect(self) -> float:
        """``delta_z < delta_detect`` holds exactly when ``s > s_detect``."""
        if self.delta0 == 0.0:
            return -math.inf
        return math.log(self.delta0 / self.delta_detect)

    @property
    def steps_cap(self) -> int:
        return _update_with_defaults(self.max_steps, "max_steps")

    def stream(self, index: int = 0) -> np.random.Generator:
        return run_stream(_update_with_defaults(self.seed, "seed"), index)


@dataclass(frozen=True, eq=False)
class WalkOutcome:
    """Result of one walk; the trajectory may be decimated."""

    absorbed_at: Outcome
    steps_taken: int
    delta0: float
    steps: np.ndarray
    tau: np.ndarray
    s: np.ndarray
    tau_steps: Optional[int] = None
    delta_at_boundary: Optional[float] = None

    @property
    def mu_z(self) -> np.ndarray:
        return self.tau

    @property
    def delta_z(self) -> np.ndarray:
        return self.delta0 * np.exp(-self.s)

    @property
    def trajectory(self) -> np.ndarray:
        """``(mu_z, delta_z)`` pairs, one row per recorded step."""
        return np.column_stack((self.mu_z, self.delta_z))


def _advance(tau, s, xi, eta, cfg: WalkConfig):
    """Apply one step to arrays of positions, folding ``s`` at its bound."""
    tau = tau + xi
    s = s + cfg.drift_h + eta
    s_min = cfg.s_reflect
    return tau, np.where(s < s_min, 2.0 * s_min - s, s)


def walk_step(
    state: Tuple[float, float], cfg: WalkConfig, rng: np.random.Generator
) -> Tuple[float, float]:
    """Take one step from ``(tau, s)``; the slits are left to the caller."""
    stepper = cfg.stepper
    xi = stepper.draw(rng, 1, cfg.step_tau)
    eta = stepper.draw(rng, 1, cfg.step_s)
    tau, s = _advance(
        np.array([state[0]]), np.array([state[1]]), xi, eta, cfg
    )
    return float(tau[0]), float(s[0])


@dataclass
class _Block:
    """Lockstep state of a block of independent runs."""

    tau: np.ndarray
    s: np.ndarray
    outcome: np.ndarray
    steps_taken: np.ndarray
    tau_steps: np.ndarray
    delta_at_boundary: np.ndarray
    # run pinned on the slit it reached first
    parked: np.ndarray
    parked_at: np.ndarray

    @classmethod
    def start(cls, cfg: WalkConfig, n: int) -> "_Block":
        return cls(
            tau=np.full(n, cfg.tau0),
            s=np.zeros(n),
            outcome=np.full(n, _NONE),
            steps_taken=np.zeros(n, dtype=np.int64),
            tau_steps=np.full(n, -1, dtype=np.int64),
            delta_at_boundary=np.full(n, np.nan),
            parked=np.zeros(n, dtype=bool),
            parked_at=np.full(n, _NONE),
        )


def _settle(
    block: _Block,
    rows: np.ndarray,
    cfg: WalkConfig,
    step: int,
    bridged: Optional[Tuple[np.ndarray, np.ndarray]] = None,
):
    """Apply the slit rules to ``rows`` after they reached step ``step``.

    A run that reaches a slit stays pinned on it from then on. ``joint`` mode
    absorbs it once ``delta_z`` is below the detector scale, ``tau-only``
    mode absorbs it straight away. ``bridged`` flags steps that touched slit
    ``a`` or ``b`` between two recorded positions.
    """
    tau, s = block.tau[rows], block.s[rows]
    hit_a = tau <= cfg.a
    hit_b = tau >= cfg.b
    if bridged is not None:
        hit_a = hit_a | bridged[0]
        hit_b = hit_b | bridged[1]
    crossed = (hit_a | hit_b) & ~block.parked[rows]
    block.tau_steps[rows[crossed]] = step
    block.delta_at_boundary[rows[crossed]] = cfg.delta0 * np.exp(-s[crossed])
    block.parked_at[rows[crossed]] = np.where(hit_b, _SLIT_B, _SLIT_A)[crossed]
    block.parked[rows[crossed]] = True
    parked = block.parked[rows]
    slit = block.parked_at[rows]
    if cfg.absorb_mode == "joint":
        absorbed = parked & (s > cfg.s_detect)
    else:
        absorbed = parked
    tau = np.where(parked & (slit == _SLIT_B), cfg.b, tau)
    tau = np.where(parked & (slit == _SLIT_A), cfg.a, tau)
    block.tau[rows] = tau
    block.outcome[rows[absorbed]] = slit[absorbed]
    block.steps_taken[rows] = step


class _Recorder:
    def __init__(self, cfg: WalkConfig):
        params = get_global_params()
        self.after = params.decimate_after
        self.every = params.decimate_every
        self.rows: List[Tuple[int, float, float]] = [(0, cfg.tau0, 0.0)]
        self.warned = False

    def record(self, step: int, tau: float, s: float, final: bool = False):
        if step <= self.after or step % self.every == 0 or final:
            if self.rows[-1][0] != step:
                self.rows.append((step, tau, s))
        elif not self.warned:
            self.warned = True
            warnings.warn(
                f"trajectory longer than {self.after} steps; keeping every "
                f"{self.every}-th step",
                TrajectoryDecimated,
                stacklevel=4,
            )


def _run_block(
    cfg: WalkConfig,
    streams: Sequence[np.random.Generator],
    recorder: Optional[_Recorder] = None,
) -> _Block:
    n = len(streams)
    block = _Block.start(cfg, n)
    stepper = cfg.stepper
    max_steps = cfg.steps_cap
    bridging = cfg.absorbing and not stepper.lattice
    if cfg.absorbing:
        _settle(block, np.arange(n), cfg, 0)
    step = 0
    while step < max_steps:
        active = np.flatnonzero(block.outcome == _NONE)
        if active.size == 0:
            break
        k = min(_CHUNK, max_steps - step)
        xi = np.stack([stepper.draw(streams[i], k, cfg.step_tau) for i in active])
        eta = np.stack([stepper.draw(streams[i], k, cfg.step_s) for i in active])
        if bridging:
            uniforms = np.stack([streams[i].random(k) for i in active])
        local = np.arange(active.size)
        for j in range(k):
            rows = active[local]
            moving = ~block.parked[rows]
            start = block.tau[rows]
            tau, s = _advance(
                start,
                block.s[rows],
                np.where(moving, xi[local, j], 0.0),
                eta[local, j],
                cfg,
            )
            block.tau[rows], block.s[rows] = tau, s
            bridged = None
            if bridging:
                u = uniforms[local, j]
                bridged = (
                    u < stepper.crossing_probability(
                        start - cfg.a, tau - cfg.a, cfg.step_tau
                    ),
                    u < stepper.crossing_probability(
                        cfg.b - start, cfg.b - tau, cfg.step_tau
                    ),
                )
            if cfg.absorbing:
                _settle(block, rows, cfg, step + j + 1, bridged)
            else:
                block.steps_taken[rows] = step + j + 1
            if recorder is not None:
                recorder.record(step + j + 1, float(block.tau[0]), float(block.s[0]))
            local = local[block.outcome[rows] == _NONE]
            if local.size == 0:
                break
        step += k
    if recorder is not None:
        recorder.record(
            int(block.steps_taken[0]),
            float(block.tau[0]),
            float(block.s[0]),
            final=True,
        )
    return block


def run_collapse(
    cfg: WalkConfig, rng: Optional[np.random.Generator] = None
) -> WalkOutcome:
    """Run one walk from ``(tau0, 0)`` until it is absorbed or capped.

    Runs out of steps report ``absorbed_at="none"``; that is an outcome, not
    an error.

    """
    rng = rng if rng is not None else cfg.stream()
    recorder = _Recorder(cfg)
    block = _run_block(cfg, [rng], recorder)
    steps, tau, s = (np.array(col) for col in zip(*recorder.rows))
    first = int(block.tau_steps[0])
    return WalkOutcome(
        absorbed_at=OUTCOMES[int(block.outcome[0])],
        steps_taken=int(block.steps_taken[0]),
        delta0=cfg.delta0,
        steps=steps.astype(np.int64),
        tau=tau.astype(float),
        s=s.astype(float),
        tau_steps=first if first >= 0 else None,
        delta_at_boundary=(
            float(block.delta_at_boundary[0]) if first >= 0 else None
        ),
    )


def gambler_ruin_probability(mu_z: float, a: float, b: float) -> float:
    """Probability ``(mu_z - a) / (b - a)`` of reaching ``b`` before ``a``."""
    if not a < b:
        raise OutOfInterval(f"need a < b, got a={a}, b={b}")
    if not a <= mu_z <= b:
        raise OutOfInterval(f"{mu_z} is outside [{a}, {b}]")
    return (mu_z - a) / (b - a)


def born_band(
    p: float, n: int, confidence: Optional[float] = None
) -> Tuple[float, float]:
    """Normal-approximation band that a frequency of ``n`` trials with
    success probability ``p`` falls into with the given confidence."""
    confidence = _update_with_defaults(confidence, "confidence")
    if n <= 0:
        return 0.0, 1.0
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    half = z * math.sqrt(p * (1.0 - p) / n)
    return p - half, p + half


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Outcomes of independent walks sharing a config."""

    cfg: WalkConfig
    outcomes: np.ndarray
    steps_taken: np.ndarray
    delta_at_boundary: np.ndarray
    confidence: float = 0.99
    counts: Dict[Outcome, int] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "counts",
            {
                name: int(np.count_nonzero(self.outcomes == code))
                for code, name in enumerate(OUTCOMES)
            },
        )

    @property
    def n_runs(self) -> int:
        return int(self.outcomes.size)

    @property
    def absorbed(self) -> int:
        return self.counts["slit_a"] + self.counts["slit_b"]

    @property
    def freq_b(self) -> float:
        """Frequency of slit ``b`` among absorbed runs."""
        if self.absorbed == 0:
            return math.nan
        return self.counts["slit_b"] / self.absorbed

    @property
    def freq_b_unconditional(self) -> float:
        if self.n_runs == 0:
            return math.nan
        return self.counts["slit_b"] / self.n_runs

    @property
    def ci(self) -> Tuple[float, float]:
        """Exact binomial interval for the conditional frequency of ``b``."""
        if self.absorbed == 0:
            return math.nan, math.nan
        interval = stats.binomtest(self.counts["slit_b"], self.absorbed).proportion_ci(
            confidence_level=self.confidence, method="exact"
        )
        return float(interval.low), float(interval.high)

    @property
    def born_band(self) -> Tuple[float, float]:
        return born_band(self.cfg.beta_sq, self.absorbed, self.confidence)

    @property
    def born_consistent(self) -> bool:
        lo, hi = self.born_band
        return self.absorbed > 0 and lo <= self.freq_b <= hi

    @property
    def mean_collapse_steps(self) -> float:
        done = self.steps_taken[self.outcomes != _NONE]
        return float(done.mean()) if done.size else math.nan

    @property
    def detected_at_boundary(self) -> float:
        """Fraction of runs already below ``delta`` when tau first hit a slit."""
        reached = self.delta_at_boundary[~np.isnan(self.delta_at_boundary)]
        if reached.size == 0:
            return math.nan
        return float(np.mean(reached < self.cfg.delta_detect))


def ensemble_run(
    cfg: WalkConfig, n_runs: int, confidence: Optional[float] = None
) -> EnsembleResult:
    """Run ``n_runs`` independent walks; run ``i`` uses stream ``(seed, i)``.

    Blocks of runs go to the shared worker pool and are merged in run order,
    so results do not depend on the number of workers.

    """
    if n_runs < 0:
        raise ValueError(f"n_runs must be >= 0, got {n_runs}")
    confidence = _update_with_defaults(confidence, "confidence")
    seed = _update_with_defaults(cfg.seed, "seed")

    def _block(runs: range) -> _Block:
        return _run_block(cfg, run_streams(seed, runs.start, len(runs)))

    blocks = map_ordered(_block, split_blocks(n_runs, _BLOCK))
    if blocks:
        outcomes = np.concatenate([blk.outcome for blk in blocks])
        steps = np.concatenate([blk.steps_taken for blk in blocks])
        deltas = np.concatenate([blk.delta_at_boundary for blk in blocks])
    else:
        outcomes = np.zeros(0, dtype=int)
        steps = np.zeros(0, dtype=np.int64)
        deltas = np.zeros(0)
    return EnsembleResult(cfg, outcomes, steps, deltas, confidence)


@dataclass(frozen=True, eq=False)
class Histogram:
    """Probability mass per bin plus the mass that fell outside all bins."""

    edges: np.ndarray
    masses: np.ndarray
    outside: float
    n_samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def density(self) -> np.ndarray:
        return self.masses / np.diff(self.edges)


def _histogram_edges(
    cfg: WalkConfig, n_steps: int, bin_width: Optional[float]
) -> np.ndarray:
    spread = math.sqrt(n_steps * cfg.stepper.variance(cfg.step_tau))
    if cfg.stepper.lattice:
        # positions are tau0 + (n_steps mod 2) * step + 2 k * step; centre
        # one bin on each reachable site
        width = 2.0 * cfg.step_tau
        origin = cfg.tau0 + (n_steps % 2) * cfg.step_tau - cfg.step_tau
    else:
        width = bin_width if bin_width is not None else spread / 10.0
        origin = cfg.tau0 - 0.5 * width
    n_half = int(math.ceil(6.0 * spread / width)) + 1
    return origin + width * np.arange(-n_half, n_half + 2)


def tau_marginal_histogram(
    cfg: WalkConfig,
    n_runs: int,
    n_steps: int,
    bin_width: Optional[float] = None,
) -> Histogram:
    """Histogram of ``tau`` after ``n_steps`` free steps over ``n_runs`` runs.

    The walk must have its slits disabled (``absorbing=False``). Fixed-length
    steps get bins two steps wide centred on the reachable lattice sites.

    """
    if cfg.absorbing:
        raise ValueError("tau marginal needs a walk without absorbing slits")
    if n_runs < 1 or n_steps < 1:
        raise ValueError("need at least one run and one step")
    seed = _update_with_defaults(cfg.seed, "seed")
    stepper = cfg.stepper

    def _final(runs: range) -> np.ndarray:
        return np.array(
            [
                cfg.tau0 + stepper.draw(rng, n_steps, cfg.step_tau).sum()
                for rng in run_streams(seed, runs.start, len(runs))
            ]
        )

    finals = np.concatenate(map_ordered(_final, split_blocks(n_runs, _BLOCK)))
    edges = _histogram_edges(cfg, n_steps, bin_width)
    counts, _ = np.histogram(finals, bins=edges)
    masses = counts / n_runs
    return Histogram(edges, masses, float(1.0 - masses.sum()), n_runs)
