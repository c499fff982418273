"""A command-line interface for collapse-lab."""

import math
import os
import sys
import time
from typing import Callable, List, Optional, Tuple

import click
import numpy as np
from scipy.integrate import trapezoid

from .collapse import OUTCOMES, WalkConfig, ensemble_run, run_collapse
from .config import (
    ConfigError,
    ExperimentConfig,
    get_global_params,
    parse_key_values,
    set_global_params,
)
from .core import _set_max_workers
from .detector import (
    DetectorConfig,
    PhysicalEigenstateClass,
    class_distance,
    detection_probability,
    is_physical_eigenstate,
    two_gaussian_class_distance,
)
from .diffusion import (
    DiffusionProblem,
    solve,
    splitting_probabilities,
)
from .gue import (
    GueParams,
    entry_variances,
    induced_manifold_steps,
    sample_spectra,
    spacing_ks_statistic,
    spectral_moments,
    step_time_for_angle,
    unfolded_spacings,
    wigner_surmise_cdf,
)
from .hilbert import (
    GaussianParams,
    Grid,
    UntrustedQuadrature,
    gaussian_overlap_analytic,
    log_overlap,
    make_gaussian,
    superposition,
)
from .output import RunManifest, write_csv
from .semiclassics import (
    ParticleParams,
    fringe_visibility,
    free_spread,
    harmonic_potential,
    pattern_mass,
    rescale_to_unit_interval,
    screen_pattern,
    spread_packets,
    sphere_walk_view,
    velocity_decomposition,
)

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CHECK = 4

# log of the smallest positive double; overlaps below it need the log path
_LOG_UNDERFLOW = math.log(sys.float_info.min * sys.float_info.epsilon)

SUMMARY_HEADER = ("quantity", "value", "expected", "passed")

_Body = Callable[[ExperimentConfig, str, Callable], Tuple[List[str], bool]]


def _print_fn():
    return click.echo if get_global_params().verbose else lambda x: None


def _parse_sets(assignments) -> dict:
    return dict(parse_key_values(assignments))


def _execute(name: str, body: _Body, options: dict) -> None:
    started = time.perf_counter()
    try:
        overrides = _parse_sets(options["assignments"])
        for key in ("seed", "out", "runs"):
            if options.get(key) is not None:
                overrides[key] = options[key]
        config = ExperimentConfig.load(name, options["config"], overrides)
        out_dir = config["out"]
        os.makedirs(out_dir, exist_ok=True)
        outputs, passed = body(config, out_dir, _print_fn())
        manifest = RunManifest(config, outputs, time.perf_counter() - started)
        outputs.append(manifest.write(out_dir))
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (ValueError, ArithmeticError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    for path in outputs:
        click.echo(path)
    click.echo(f"{name}: {'pass' if passed else 'FAIL'}")
    if options["check"] and not passed:
        sys.exit(EXIT_CHECK)


def _common_options(func):
    options = [
        click.option("--config", "config", type=click.Path(), default=None),
        click.option("--seed", type=int, default=None),
        click.option("--out", type=click.Path(), default=None),
        click.option("--runs", type=int, default=None),
        click.option("--check", is_flag=True, default=False),
        click.option(
            "--set", "assignments", multiple=True, metavar="KEY=VALUE"
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.option("--verbose", is_flag=True, default=False)
@click.option("--threads", type=int, default=None)
def cli(verbose, threads):
    """A command-line interface for collapse-lab."""  # noqa: D401
    set_global_params(verbose=verbose)
    if threads is not None:
        _set_max_workers(threads)


# ---------------------------------------------------------------------------
# manifold walk


def _walk_config(config: ExperimentConfig) -> WalkConfig:
    return WalkConfig(
        a=config["a"],
        b=config["b"],
        alpha_sq=config["alpha_sq"],
        step_tau=config["step_tau"],
        step_s=config["step_s"],
        drift_h=config["drift_h"],
        delta_detect=config["delta_detect"],
        step_distribution=config["step_distribution"],
        max_steps=config["max_steps"],
        seed=config["seed"],
        reflect_at=config["reflect_at"],
        absorb_mode=config["absorb_mode"],
    )


def _born(config: ExperimentConfig, out_dir: str, _print):
    cfg = _walk_config(config)
    if config["runs"] < 1:
        raise ConfigError("runs must be >= 1")
    _print(f"running {config['runs']} walks from tau0={cfg.tau0}")
    result = ensemble_run(cfg, config["runs"], config["confidence"])
    runs_path = write_csv(
        os.path.join(out_dir, "born_runs.csv"),
        ("run", "outcome", "steps", "delta_at_boundary"),
        (
            (i, OUTCOMES[int(code)], int(steps), float(delta))
            for i, (code, steps, delta) in enumerate(
                zip(
                    result.outcomes,
                    result.steps_taken,
                    result.delta_at_boundary,
                )
            )
        ),
    )
    ci_low, ci_high = result.ci
    band_low, band_high = result.born_band
    verdict = result.born_consistent
    summary_path = write_csv(
        os.path.join(out_dir, "born_summary.csv"),
        (
            "runs",
            "absorbed",
            "count_a",
            "count_b",
            "count_none",
            "freq_b",
            "freq_b_unconditional",
            "born_probability",
            "ci_low",
            "ci_high",
            "band_low",
            "band_high",
            "mean_steps",
            "detected_at_boundary",
            "verdict",
        ),
        [
            (
                result.n_runs,
                result.absorbed,
                result.counts["slit_a"],
                result.counts["slit_b"],
                result.counts["none"],
                result.freq_b,
                result.freq_b_unconditional,
                cfg.beta_sq,
                ci_low,
                ci_high,
                band_low,
                band_high,
                result.mean_collapse_steps,
                result.detected_at_boundary,
                "pass" if verdict else "fail",
            )
        ],
    )
    return [runs_path, summary_path], verdict


@cli.command("born")
@_common_options
def cmd_born(**options):
    """Born-rule ensemble of manifold walks."""
    _execute("born", _born, options)


def _walk(config: ExperimentConfig, out_dir: str, _print):
    cfg = _walk_config(config)
    rows, finals = [], []
    passed = True
    for run in range(config["runs"]):
        outcome = run_collapse(cfg, cfg.stream(run))
        _print(f"run {run}: {outcome.absorbed_at} after {outcome.steps_taken}")
        unit = np.clip(rescale_to_unit_interval(outcome.mu_z, cfg.a, cfg.b), -1, 1)
        sphere = sphere_walk_view(unit)
        for k in range(outcome.steps.size):
            rows.append(
                (
                    run,
                    int(outcome.steps[k]),
                    float(outcome.tau[k]),
                    float(outcome.s[k]),
                    float(outcome.mu_z[k]),
                    float(outcome.delta_z[k]),
                    sphere[k].x,
                    sphere[k].y,
                    sphere[k].z,
                )
            )
        final_delta = float(outcome.delta_z[-1])
        passed &= (
            outcome.absorbed_at != "none" and final_delta < cfg.delta_detect
        )
        finals.append(
            (
                run,
                outcome.absorbed_at,
                outcome.steps_taken,
                float(outcome.mu_z[-1]),
                final_delta,
            )
        )
    trajectory_path = write_csv(
        os.path.join(out_dir, "walk_trajectories.csv"),
        ("run", "step", "tau", "s", "mu_z", "delta_z", "x", "y", "z"),
        rows,
    )
    summary_path = write_csv(
        os.path.join(out_dir, "walk_summary.csv"),
        ("run", "outcome", "steps", "final_mu_z", "final_delta_z"),
        finals,
    )
    return [trajectory_path, summary_path], passed


@cli.command("walk")
@_common_options
def cmd_walk(**options):
    """Trajectories of single manifold walks."""
    _execute("walk", _walk, options)


# ---------------------------------------------------------------------------
# random matrices


def _gue(config: ExperimentConfig, out_dir: str, _print):
    params = GueParams(config["dim"], config["scale"], config["seed"])
    draws = config["runs"]
    _print(f"sampling {draws} GUE matrices of dimension {params.dim}")
    variances = entry_variances(params, draws, params.stream(0))
    spectra = sample_spectra(params, draws, params.stream(1))
    spacings = unfolded_spacings(spectra, params)
    ks = spacing_ks_statistic(spacings)
    moments_mean, moments_err = spectral_moments(spectra)

    half = 0.5 * config["separation"]
    width = config["width"]
    grid = Grid.covering([-half, half], width)
    alpha = math.sqrt(config["alpha_sq"])
    beta = math.sqrt(1.0 - config["alpha_sq"])
    phi = superposition(
        [(alpha, GaussianParams(-half, width)), (beta, GaussianParams(half, width))],
        grid,
    )
    frame_size = config["frame_size"] or get_global_params().frame_size
    dt = step_time_for_angle(GueParams(frame_size, params.scale), config["step_angle"])
    _print(f"projecting {config['samples']} random-matrix steps, dt={dt:.3g}")
    steps = induced_manifold_steps(
        phi,
        params,
        dt=dt,
        n_samples=config["samples"],
        frame_size=frame_size,
        rng=params.stream(2),
    )
    corr = float(np.corrcoef(steps[:, 0], steps[:, 1])[0, 1])
    var_ratio = float(np.var(steps[:, 0]) / np.var(steps[:, 1]))
    diag_ratio = variances["diagonal"] / variances["offdiag_real"]
    scale_sq = params.scale**2
    rows = [
        ("diag_variance", variances["diagonal"], 2.0 * scale_sq, True),
        ("offdiag_real_variance", variances["offdiag_real"], scale_sq, True),
        ("offdiag_imag_variance", variances["offdiag_imag"], scale_sq, True),
        ("diag_to_offdiag_ratio", diag_ratio, 2.0, abs(diag_ratio - 2.0) < 0.1),
        ("spacing_ks_statistic", ks, 0.0, ks < 0.05),
        ("corr_dtau_ds", corr, 0.0, abs(corr) < 0.05),
        ("var_ratio_dtau_ds", var_ratio, 1.0, abs(var_ratio - 1.0) < 0.1),
    ]
    for k, (mean, err) in enumerate(zip(moments_mean, moments_err), start=1):
        rows.append((f"spectral_moment_{k}", float(mean), float(err), True))
    stats_path = write_csv(
        os.path.join(out_dir, "gue_stats.csv"), SUMMARY_HEADER, rows
    )
    edges = np.linspace(0.0, 4.0, 41)
    counts, _ = np.histogram(spacings, bins=edges)
    density = counts / (spacings.size * np.diff(edges))
    surmise = np.diff(wigner_surmise_cdf(edges)) / np.diff(edges)
    hist_path = write_csv(
        os.path.join(out_dir, "gue_spacings.csv"),
        ("bin_low", "bin_high", "density", "surmise_density"),
        (
            (float(lo), float(hi), float(d), float(w))
            for lo, hi, d, w in zip(edges[:-1], edges[1:], density, surmise)
        ),
    )
    return [stats_path, hist_path], all(row[3] for row in rows)


@cli.command("gue")
@_common_options
def cmd_gue(**options):
    """Entry, spacing and isotropy statistics of GUE matrices."""
    _execute("gue", _gue, options)


# ---------------------------------------------------------------------------
# diffusion


def _diffusion(config: ExperimentConfig, out_dir: str, _print):
    domain = config["domain"]
    interval = domain == "interval"
    problem = DiffusionProblem(
        diffusion_coefficient=config["diffusion_coefficient"],
        sources=((config["source"], 1.0),),
        t_final=config["t_final"],
        domain=domain,
        a=config["a"] if interval else None,
        b=config["b"] if interval else None,
        n_points=config["n_points"],
        dt=config["dt"],
    )
    _print(f"solving on {domain} up to t={problem.t_final}")
    solution = solve(problem, snapshots=config["snapshots"])
    rows = []
    for snap_time, density in solution.snapshots:
        rows.extend(
            (float(snap_time), float(x), float(rho))
            for x, rho in zip(solution.x, density)
        )
    if not solution.snapshots or solution.snapshots[-1][0] != solution.time:
        rows.extend(
            (float(solution.time), float(x), float(rho))
            for x, rho in zip(solution.x, solution.density)
        )
    density_path = write_csv(
        os.path.join(out_dir, "diffusion_density.csv"),
        ("time", "x", "density"),
        rows,
    )
    total = solution.total_mass
    summary = [
        ("total_mass", total, 1.0, abs(total - 1.0) < 1e-8),
        ("absorbed_a", solution.absorbed_a, "", True),
        ("absorbed_b", solution.absorbed_b, "", True),
    ]
    if interval:
        c, a, b = config["source"], config["a"], config["b"]
        split = splitting_probabilities(problem)
        expected_b = (c - a) / (b - a)
        expected_a = 1.0 - expected_b
        summary += [
            ("splitting_a", split.p_a, expected_a, abs(split.p_a - expected_a) < 1e-3),
            ("splitting_b", split.p_b, expected_b, abs(split.p_b - expected_b) < 1e-3),
            ("splitting_converged", split.converged, True, split.converged),
        ]
    else:
        x, rho = solution.x, solution.density
        mean = float(trapezoid(x * rho, x))
        variance = float(trapezoid((x - mean) ** 2 * rho, x))
        expected = 2.0 * problem.diffusion_coefficient * problem.t_final
        close = abs(variance - expected) < 1e-3 * expected
        summary.append(("variance", variance, expected, close))
    summary_path = write_csv(
        os.path.join(out_dir, "diffusion_summary.csv"), SUMMARY_HEADER, summary
    )
    return [density_path, summary_path], all(row[3] for row in summary)


@cli.command("diffusion")
@_common_options
def cmd_diffusion(**options):
    """Diffusion snapshots, absorbed-mass ledger and splitting."""
    _execute("diffusion", _diffusion, options)


# ---------------------------------------------------------------------------
# detector geometry


def _distance(config: ExperimentConfig, out_dir: str, _print):
    a, b, delta = config["a"], config["b"], config["delta"]
    wide = config["wide_factor"] * delta
    shift = config["shift"]
    narrow_b = GaussianParams(b, delta)
    wide_b = GaussianParams(b, wide)
    shifted_b = GaussianParams(b - shift, delta)
    narrow_a = GaussianParams(a, delta)

    log_wide, _ = gaussian_overlap_analytic(narrow_b, wide_b)
    log_shift, _ = gaussian_overlap_analytic(narrow_b, shifted_b)
    log_cross, _ = gaussian_overlap_analytic(narrow_a, wide_b)
    rho_wide = math.acos(min(math.exp(log_wide), 1.0))
    rho_shift = math.acos(min(math.exp(log_shift), 1.0))

    grid = Grid(
        min(a, b) - 12.0 * wide,
        max(a, b) + 12.0 * wide,
        config["n_points"],
    )
    _print(f"detector grid: {grid.n_points} points, spacing {grid.dz:.3g}")
    det = DetectorConfig(
        center=b,
        length=config["detector_length"],
        cell_size=config["cell_size"],
        epsilon=config["epsilon"],
    )
    eigenclass = PhysicalEigenstateClass.at(det, delta, grid)
    wide_state = make_gaussian(wide_b, grid)
    quad_wide = log_overlap(make_gaussian(narrow_b, grid), wide_state)
    try:
        log_overlap(make_gaussian(narrow_a, grid), wide_state)
        cross_trusted = True
    except UntrustedQuadrature:
        cross_trusted = False
    shifted_state = make_gaussian(shifted_b, grid)
    half = math.sqrt(0.5)
    split_state = superposition([(half, narrow_a), (half, narrow_b)], grid)
    split_distance = class_distance(split_state, eigenclass)
    expected_split = two_gaussian_class_distance(half)
    wide_in = is_physical_eigenstate(wide_state, eigenclass)
    shifted_in = is_physical_eigenstate(shifted_state, eigenclass)
    split_in = is_physical_eigenstate(split_state, eigenclass)
    rows = [
        ("rho_narrow_wide", rho_wide, 1.429, abs(rho_wide - 1.429) < 2e-3),
        (
            "log_overlap_wide_quadrature",
            quad_wide,
            log_wide,
            abs(quad_wide - log_wide) < 1e-6,
        ),
        ("log_overlap_shifted", log_shift, -12.5, abs(log_shift + 12.5) < 0.01),
        ("rho_narrow_shifted", rho_shift, math.pi / 2, True),
        (
            "log_overlap_cross_slit",
            log_cross,
            _LOG_UNDERFLOW,
            log_cross < _LOG_UNDERFLOW,
        ),
        ("cross_slit_quadrature_trusted", cross_trusted, False, not cross_trusted),
        ("reference_probability", eigenclass.reference_probability, 1.0, True),
        ("detected_wide", detection_probability(wide_state, det), "", True),
        ("wide_in_class", wide_in, True, wide_in),
        ("shifted_in_class", shifted_in, True, shifted_in),
        ("superposition_in_class", split_in, False, not split_in),
        (
            "superposition_class_distance",
            split_distance,
            expected_split,
            abs(split_distance - expected_split) < 1e-3,
        ),
    ]
    path = write_csv(os.path.join(out_dir, "distance.csv"), SUMMARY_HEADER, rows)
    return [path], all(row[3] for row in rows)


@cli.command("distance")
@_common_options
def cmd_distance(**options):
    """Fubini-Study distances and detector equivalence classes."""
    _execute("distance", _distance, options)


# ---------------------------------------------------------------------------
# semiclassics


def _decompose(config: ExperimentConfig, out_dir: str, _print):
    packet = GaussianParams(config["center"], config["width"], config["momentum"])
    omega = config["omega"]
    params = ParticleParams(
        mass=config["mass"],
        hbar=config["hbar"],
        packet=packet,
        potential=harmonic_potential(config["mass"], omega) if omega else None,
    )
    grid: Optional[Grid] = None
    if config["n_points"] is not None:
        grid = Grid.covering([packet.center], packet.width, config["n_points"])
    result = velocity_decomposition(params, grid)
    passed = result.relative_error < 0.01
    path = write_csv(
        os.path.join(out_dir, "decomposition.csv"),
        (
            "classical",
            "acceleration",
            "spreading",
            "analytic_total",
            "numeric_total",
            "relative_error",
            "passed",
        ),
        [
            (
                result.classical,
                result.acceleration,
                result.spreading,
                result.analytic_total,
                result.numeric_total,
                result.relative_error,
                passed,
            )
        ],
    )
    return [path], passed


@cli.command("decompose")
@_common_options
def cmd_decompose(**options):
    """Three-term split of the squared speed of a Gaussian packet."""
    _execute("decompose", _decompose, options)


def _pattern(config: ExperimentConfig, out_dir: str, _print):
    a, b, width = config["a"], config["b"], config["width"]
    mass, hbar, t = config["mass"], config["hbar"], config["time"]
    alpha = math.sqrt(config["alpha_sq"])
    beta = math.sqrt(1.0 - config["alpha_sq"])
    spread = free_spread(GaussianParams(a, width), mass, hbar, t).width
    grid = Grid.covering([a, b], spread, config["n_points"])
    packet_a, packet_b = spread_packets(a, b, width, mass, hbar, t, grid)
    detector_present = config["detector_present"]
    pattern = screen_pattern(alpha, beta, packet_a, packet_b, detector_present)
    mass_total = pattern_mass(pattern, grid)
    fringe = 2.0 * math.pi * hbar * t / (mass * (b - a))
    middle = 0.5 * (a + b)
    window = (middle - fringe, middle + fringe)
    visibility = fringe_visibility(pattern, grid, window)
    rows = [
        ("mass", mass_total, 1.0, abs(mass_total - 1.0) < 1e-8),
        ("fringe_spacing", fringe, "", True),
    ]
    if detector_present:
        marginals = alpha**2 * packet_a.density + beta**2 * packet_b.density
        cross = float(np.max(np.abs(pattern - marginals)))
        rows.append(("cross_term_max", cross, 0.0, cross < 1e-10))
        rows.append(("visibility", visibility, "", True))
    else:
        expected = 2.0 * alpha * beta
        close = abs(visibility - expected) < 0.05
        rows.append(("visibility", visibility, expected, close))
    pattern_path = write_csv(
        os.path.join(out_dir, "pattern.csv"),
        ("z", "density"),
        ((float(z), float(p)) for z, p in zip(grid.z, pattern)),
    )
    summary_path = write_csv(
        os.path.join(out_dir, "pattern_summary.csv"), SUMMARY_HEADER, rows
    )
    return [pattern_path, summary_path], all(row[3] for row in rows)


@cli.command("pattern")
@_common_options
def cmd_pattern(**options):
    """Screen density with and without a which-slit detector."""
    _execute("pattern", _pattern, options)


if __name__ == "__main__":
    cli()
