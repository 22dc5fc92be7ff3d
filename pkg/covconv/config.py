import json
import os
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()

SHARING_MODES = ("chart-segment", "geodesic", "none")


class Config:
    """Runtime settings for covconv, read from the environment (or a .env file)."""

    def __init__(self):
        self.log_level = os.getenv("COVCONV_LOG_LEVEL") or "WARNING"
        self.default_steps = int(os.getenv("COVCONV_STEPS") or 200)

        # Finite differences: h = fd_rel_step * max(1, |x^mu|)
        self.fd_rel_step = 1e-5
        self.jacobian_check_tol = 1e-6

        # Shooting log map used by geodesic sharing
        self.log_tol = 1e-10
        self.log_max_iter = 50

        # Tabulated fields are looked up by coordinates
        self.node_match_tol = 1e-8

        # Sphere presets stay this far away from the poles
        self.pole_margin = 1e-3

        self.export_dir = Path(os.getenv("COVCONV_EXPORT_DIR") or "covconv_output")
        self.config_dir = Path(__file__).resolve().parent.parent / "configs"

    def ensure_dirs(self):
        self.export_dir.mkdir(parents=True, exist_ok=True)


config = Config()


# Default pass/fail thresholds, one per check.
DEFAULT_TOLERANCES = {
    "flat-reduction": 1e-10,
    "gauge-equivariance": 1e-6,
    "weight-sharing": 1e-10,
    "holonomy": 1e-4,
    "geodesic-accuracy": 1e-8,
    "transport-isometry": 1e-8,
    "locality-linearity": 1e-12,
    "multiplicities": 0.5,
}


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _numbers(value, name: str) -> list[float]:
    if not isinstance(value, list | tuple):
        raise ConfigError(f"{name} must be a list of numbers, got {value!r}")
    return [_number(v, name) for v in value]


def _points(value, name: str) -> list[list[float]]:
    if not isinstance(value, list | tuple):
        raise ConfigError(f"{name} must be a list of points, got {value!r}")
    return [_numbers(p, name) for p in value]


def _section(raw: dict, key: str) -> dict | None:
    value = raw.get(key)
    if value is not None and not isinstance(value, dict):
        raise ConfigError(f"'{key}' must be a JSON object, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    """A parsed experiment file. See README for the JSON schema."""

    manifold: dict[str, Any]
    chart_transition: dict[str, Any] | None = None
    field: dict[str, Any] | None = None
    kernel: dict[str, Any] | None = None
    quadrature: dict[str, Any] = dataclasses.field(
        default_factory=lambda: {"r": 0.5, "n_r": 4, "n_ang": 16}
    )
    steps: int = 200
    sharing_mode: str = "chart-segment"
    reference_point: list[float] | None = None
    output_points: list[list[float]] = dataclasses.field(default_factory=list)
    check: str | None = None
    tolerances: dict[str, float] = dataclasses.field(default_factory=dict)
    loop: dict[str, Any] | None = None
    paths: list[list[list[float]]] | None = None
    relation_angle: float | None = None
    seed: int = 0
    samples: int = 20
    max_n: int = 10
    base_dir: Path = dataclasses.field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, raw: dict[str, Any], base_dir: Path | None = None):
        if not isinstance(raw, dict):
            raise ConfigError("Experiment config must be a JSON object")
        manifold_raw = _section(raw, "manifold")
        if manifold_raw is None or "name" not in manifold_raw:
            raise ConfigError("Experiment config needs manifold.name")
        manifold = {"name": str(manifold_raw["name"]), "params": _numbers(manifold_raw.get("params", []),
                                                                         "manifold.params")}

        quadrature = {"r": 0.5, "n_r": 4, "n_ang": 16}
        quadrature.update(_section(raw, "quadrature") or {})
        for key in ("r", "n_r", "n_ang"):
            if _number(quadrature[key], f"quadrature.{key}") <= 0:
                raise ConfigError(f"Quadrature settings must be positive: {quadrature}")
        for key in ("n_r", "n_ang"):
            if not isinstance(quadrature[key], int):
                raise ConfigError(f"quadrature.{key} must be an integer, got {quadrature[key]!r}")

        integrator = _section(raw, "integrator") or {}
        steps = integrator.get("steps", config.default_steps)
        if not isinstance(steps, int) or isinstance(steps, bool) or steps <= 0:
            raise ConfigError(f"integrator.steps must be a positive integer, got {steps!r}")

        sharing_mode = raw.get("sharing_mode", "chart-segment")
        if sharing_mode not in SHARING_MODES:
            raise ConfigError(
                f"Unknown sharing_mode '{sharing_mode}', expected one of {SHARING_MODES}"
            )

        tolerances = dict(_section(raw, "tolerances") or {})
        for name, tol in tolerances.items():
            if _number(tol, f"tolerances.{name}") <= 0:
                raise ConfigError(f"Tolerance for '{name}' must be positive, got {tol}")

        loop = _section(raw, "loop")
        if loop is not None:
            for key in ("alpha", "apex", "expected"):
                if key in loop:
                    _number(loop[key], f"loop.{key}")
            if "points" in loop:
                _points(loop["points"], "loop.points")

        paths = raw.get("paths")
        if paths is not None:
            if not isinstance(paths, list) or len(paths) != 2:
                raise ConfigError("'paths' must hold exactly two polylines")
            paths = [_points(p, "paths") for p in paths]

        reference_point = raw.get("reference_point")
        if reference_point is not None:
            reference_point = _numbers(reference_point, "reference_point")
        relation_angle = raw.get("relation_angle")
        if relation_angle is not None:
            relation_angle = _number(relation_angle, "relation_angle")

        return cls(
            manifold=manifold,
            chart_transition=_section(raw, "chart_transition"),
            field=_section(raw, "field"),
            kernel=_section(raw, "kernel"),
            quadrature=quadrature,
            steps=steps,
            sharing_mode=sharing_mode,
            reference_point=reference_point,
            output_points=_points(raw.get("output_points", []), "output_points"),
            check=raw.get("check"),
            tolerances=tolerances,
            loop=loop,
            paths=paths,
            relation_angle=relation_angle,
            seed=_integer(raw.get("seed", 0), "seed"),
            samples=_integer(raw.get("samples", 20), "samples"),
            max_n=_integer(raw.get("max_n", 10), "max_n"),
            base_dir=base_dir or Path.cwd(),
        )

    def tolerance_for(self, check_name: str) -> float:
        return self.tolerances.get(check_name, DEFAULT_TOLERANCES[check_name])

    def resolve(self, path: str) -> Path:
        """Resolve a CSV path relative to the config file's directory."""
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def ref_point(self) -> list[float]:
        if self.reference_point is not None:
            return list(self.reference_point)
        if self.output_points:
            return list(self.output_points[0])
        raise ConfigError("Config needs reference_point or output_points")


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    return ExperimentConfig.from_dict(raw, base_dir=path.resolve().parent)
