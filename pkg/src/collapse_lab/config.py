import os
from collections import OrderedDict
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, Optional, Tuple, Union

from ._types import Subcommand


class ConfigError(ValueError):
    """Raised when an experiment config cannot be parsed or validated."""

    pass


@dataclass
class Params:
    """Default definition for collapse-lab parameters."""

    seed: int = 20240917
    n_points: int = 4096
    max_steps: int = 1_000_000
    decimate_after: int = 100_000
    decimate_every: int = 10
    detector_r: float = 5.0
    epsilon: float = 1e-4
    step_angle: float = 0.02
    frame_size: int = 32
    interior_mass_tol: float = 1e-3
    quadrature_log_floor: float = -30.0
    confidence: float = 0.99
    verbose: bool = False


_global_params = Params()


def _update_with_defaults(param, name: str):
    import collapse_lab

    if param is None:
        return getattr(collapse_lab.config._global_params, name)
    return param


def set_global_params(**params: Mapping) -> None:
    """Configure global defaults used by every collapse-lab operation.

    Takes the same names as the fields of :class:`Params`, all at once or over
    several calls. Values passed directly to an operation take precedence over
    the ones set here. Unknown names are ignored.

    """
    import collapse_lab

    valid_params = {
        k: v
        for k, v in params.items()
        if hasattr(collapse_lab.config._global_params, k)
    }
    collapse_lab.config._global_params = replace(
        collapse_lab.config._global_params,
        **valid_params,  # type: ignore[arg-type]
    )


def get_global_params() -> Params:
    """Get current set of default parameters."""
    import collapse_lab

    return collapse_lab.config._global_params


# ---------------------------------------------------------------------------
# experiment configs


_Schema = Dict[str, Tuple[type, Any]]

_WALK_KEYS: _Schema = {
    "a": (float, -10.0),
    "b": (float, 10.0),
    "alpha_sq": (float, 0.25),
    "step_tau": (float, 1.0),
    "step_s": (float, 1.0),
    "drift_h": (float, 0.5),
    "delta_detect": (float, 1.0),
    "step_distribution": (str, "fixed"),
    "absorb_mode": (str, "joint"),
    "reflect_at": (float, None),
    "max_steps": (int, None),
}

_SCHEMAS: Dict[str, _Schema] = {
    "born": {**_WALK_KEYS, "runs": (int, 1500), "confidence": (float, None)},
    "walk": {**_WALK_KEYS, "runs": (int, 3)},
    "gue": {
        "dim": (int, 32),
        "scale": (float, 1.0),
        "runs": (int, 1000),
        "samples": (int, 10_000),
        "frame_size": (int, None),
        "step_angle": (float, None),
        "separation": (float, 20.0),
        "width": (float, 1.0),
        "alpha_sq": (float, 0.5),
    },
    "diffusion": {
        "diffusion_coefficient": (float, 0.5),
        "domain": (str, "interval"),
        "a": (float, -10.0),
        "b": (float, 10.0),
        "source": (float, 5.0),
        "t_final": (float, 5000.0),
        "n_points": (int, 801),
        "dt": (float, 0.5),
        "snapshots": (int, 5),
    },
    "distance": {
        "a": (float, 0.0),
        "b": (float, 1e-5),
        "delta": (float, 1e-9),
        "wide_factor": (float, 100.0),
        "shift": (float, 1e-8),
        "detector_length": (float, 5e-6),
        "cell_size": (float, 1e-10),
        "epsilon": (float, None),
        "n_points": (int, 65536),
    },
    "decompose": {
        "mass": (float, 1.0),
        "hbar": (float, 1.0),
        "center": (float, 0.0),
        "width": (float, 0.5),
        "momentum": (float, 0.0),
        "omega": (float, 0.0),
        "n_points": (int, None),
    },
    "pattern": {
        "alpha_sq": (float, 0.5),
        "a": (float, -10.0),
        "b": (float, 10.0),
        "width": (float, 0.5),
        "mass": (float, 1.0),
        "hbar": (float, 1.0),
        "time": (float, 40.0),
        "n_points": (int, 8192),
        "detector_present": (bool, False),
    },
}

# keys every subcommand understands
_COMMON_KEYS: _Schema = {"seed": (int, None), "out": (str, "out")}

# keys written by RunManifest that are skipped when a manifest is replayed
_MANIFEST_PREFIX = "manifest."
_SUBCOMMAND_KEY = "subcommand"


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _convert(key: str, kind: type, text: str):
    if kind is bool:
        return _parse_bool(text)
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(
            f"bad value for {key!r}: {text!r} ({kind.__name__} expected)"
        ) from exc


def parse_key_values(lines: Iterable[str]) -> "OrderedDict[str, str]":
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values: "OrderedDict[str, str]" = OrderedDict()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


@dataclass
class ExperimentConfig:
    """Resolved key/value configuration of one CLI subcommand."""

    subcommand: Subcommand
    values: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(
        cls,
        subcommand: Subcommand,
        path: Optional[Union[str, os.PathLike]] = None,
        overrides: Optional[Mapping] = None,
    ) -> "ExperimentConfig":
        """Read ``path`` (if any), apply ``overrides`` and validate keys.

        Overrides may hold raw strings (from ``--set``) or typed values (from
        the dedicated flags). Keys of an earlier :class:`RunManifest` are
        skipped, so manifests can be fed back as configs.

        """
        if subcommand not in _SCHEMAS:
            raise ConfigError(f"specified an invalid subcommand: {subcommand}")
        schema = {**_SCHEMAS[subcommand], **_COMMON_KEYS}
        raw: Dict[str, Any] = {}
        if path is not None:
            with open(path) as fopen:
                raw.update(parse_key_values(fopen))
        for key, value in (overrides or {}).items():
            if value is not None:
                raw[key] = value
        raw.pop(_SUBCOMMAND_KEY, None)
        unknown = sorted(
            k
            for k in raw
            if k not in schema and not k.startswith(_MANIFEST_PREFIX)
        )
        if unknown:
            raise ConfigError(
                f"unknown keys for {subcommand!r}: {', '.join(unknown)}"
            )
        values: Dict[str, Any] = {}
        for key, (kind, default) in schema.items():
            value = raw.get(key, default)
            if isinstance(value, str) and kind is not str:
                value = _convert(key, kind, value)
            elif value is not None and kind is not str:
                value = _convert(key, kind, str(value))
            values[key] = value
        if values["seed"] is None:
            values["seed"] = get_global_params().seed
        return cls(subcommand=subcommand, values=values)

    def __getitem__(self, key: str):
        return self.values[key]

    def snapshot(self) -> "OrderedDict[str, str]":
        """Return the resolved values as sorted strings (manifest form)."""
        return OrderedDict(
            (k, "" if v is None else repr(v) if isinstance(v, float) else str(v))
            for k, v in sorted(self.values.items())
            if v is not None
        )
