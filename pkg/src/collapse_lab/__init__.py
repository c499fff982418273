from ._version import *  # noqa: F403
from .collapse import (
    WalkConfig,
    WalkOutcome,
    ensemble_run,
    gambler_ruin_probability,
    run_collapse,
    tau_marginal_histogram,
    walk_step,
)
from .config import (
    ExperimentConfig,
    Params,
    get_global_params,
    set_global_params,
)
from .core import run_stream
from .detector import (
    DetectorConfig,
    PhysicalEigenstateClass,
    class_distance,
    detection_probability,
    is_physical_eigenstate,
)
from .diffusion import (
    DiffusionProblem,
    compare_histogram,
    interval_state,
    solve,
    splitting_probabilities,
)
from .gue import (
    GueParams,
    HermitianMatrix,
    StateVector,
    evolve_step,
    induced_manifold_steps,
    rm_walk,
    sample_gue,
    state_distance,
)
from .hilbert import (
    GaussianParams,
    Grid,
    GridWavefunction,
    ManifoldState,
    fubini_study_distance,
    gaussian_overlap_analytic,
    inner_product,
    log_overlap,
    make_gaussian,
    moments,
    squeeze_translate,
    step_orthogonality,
    tangent_s,
    tangent_tau,
)
from .semiclassics import (
    ParticleParams,
    SpherePoint,
    free_spread,
    screen_pattern,
    sphere_walk_view,
    to_sphere,
    velocity_decomposition,
)

__all__ = [
    "set_global_params",
    "get_global_params",
    "Params",
    "ExperimentConfig",
    "run_stream",
    "Grid",
    "GridWavefunction",
    "GaussianParams",
    "ManifoldState",
    "make_gaussian",
    "inner_product",
    "fubini_study_distance",
    "gaussian_overlap_analytic",
    "log_overlap",
    "moments",
    "squeeze_translate",
    "tangent_tau",
    "tangent_s",
    "step_orthogonality",
    "GueParams",
    "HermitianMatrix",
    "StateVector",
    "sample_gue",
    "evolve_step",
    "rm_walk",
    "state_distance",
    "induced_manifold_steps",
    "WalkConfig",
    "WalkOutcome",
    "walk_step",
    "run_collapse",
    "gambler_ruin_probability",
    "ensemble_run",
    "tau_marginal_histogram",
    "DetectorConfig",
    "PhysicalEigenstateClass",
    "detection_probability",
    "is_physical_eigenstate",
    "class_distance",
    "DiffusionProblem",
    "solve",
    "splitting_probabilities",
    "interval_state",
    "compare_histogram",
    "ParticleParams",
    "SpherePoint",
    "velocity_decomposition",
    "free_spread",
    "screen_pattern",
    "to_sphere",
    "sphere_walk_view",
]
