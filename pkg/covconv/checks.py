"""Executable checks of the convolution's geometric claims.

Each check takes an ExperimentConfig and returns a CheckReport whose status is
"pass" iff its max_abs_error is within the tolerance.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .config import ExperimentConfig
from .convolution import ConvolutionSpec, convolve_at, convolve_field, planar_correlation
from .errors import ConfigError
from .fields import OracleField, TensorField, linear_combination, load_grid_csv, make_field, transform_field, \
    transported_localized_field
from .geometry import (
    ChartManifold,
    Path,
    as_point,
    exp_map,
    holonomy_angle,
    inner,
    orthonormal_frame,
    parallel_transport,
    polyline_path,
    transition_jacobian,
    transition_point,
    transport_vectors,
)
from .kernel import SharedKernel, build_quadrature, kernel_two_path_relation, load_kernel_csv, make_kernel, \
    share_kernel, sharing_path, transform_kernel
from .presets import make_manifold, make_transition, predicted_holonomy, sphere_analytic_exp, \
    spherical_lune_loop, spherical_triangle_loop
from .rep import character_multiplicities, so3_tensor_multiplicities
from .tensors import TensorRank, push_tensor

logger = logging.getLogger(__name__)


@dataclass
class CheckReport:
    check: str
    status: str
    max_abs_error: float
    max_rel_error: float
    tolerance: float
    points: list[dict[str, Any]] = field(default_factory=list)
    wall_time_s: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class _ErrorTable:
    """Collects per-point errors and turns them into a report."""

    def __init__(self, check: str, tolerance: float):
        self.check = check
        self.tolerance = tolerance
        self.points: list[dict[str, Any]] = []
        self.rel: list[float] = []
        self.started = time.perf_counter()

    def add(self, coords, got, expected):
        got, expected = np.asarray(got, dtype=float), np.asarray(expected, dtype=float)
        err = float(np.max(np.abs(got - expected), initial=0.0))
        scale = float(np.max(np.abs(expected), initial=0.0))
        self.points.append({"coords": [float(c) for c in np.atleast_1d(coords)], "error": err})
        self.rel.append(err / scale if scale > 0 else err)
        return err

    def report(self, **details) -> CheckReport:
        max_abs = max((p["error"] for p in self.points), default=0.0)
        report = CheckReport(
            check=self.check,
            status="pass" if max_abs <= self.tolerance else "fail",
            max_abs_error=max_abs,
            max_rel_error=max(self.rel, default=0.0),
            tolerance=self.tolerance,
            points=self.points,
            wall_time_s=time.perf_counter() - self.started,
            details=details,
        )
        logger.info("%s: %s (max error %.3e, tol %.1e)", self.check, report.status, max_abs, self.tolerance)
        return report


# ---------------------------------------------------------------------------
# Building blocks from a config
# ---------------------------------------------------------------------------


def build_manifold(cfg: ExperimentConfig) -> ChartManifold:
    return make_manifold(cfg.manifold["name"], cfg.manifold.get("params"))


def build_transition(cfg: ExperimentConfig, m: ChartManifold):
    ct = cfg.chart_transition or {"name": "identity"}
    if "name" not in ct:
        raise ConfigError("chart_transition needs a name")
    return make_transition(ct["name"], ct.get("params"), m)


def build_field(cfg: ExperimentConfig, m: ChartManifold) -> TensorField:
    spec = cfg.field
    if not spec:
        raise ConfigError("Config needs a field")
    if "csv" in spec:
        rank = TensorRank.from_list(spec["rank"]) if "rank" in spec else None
        return load_grid_csv(cfg.resolve(spec["csv"]), rank, m.name)
    if "name" not in spec:
        raise ConfigError("field needs a name or a csv path")
    return make_field(spec["name"], spec.get("params"), m)


def build_kernel(cfg: ExperimentConfig, m: ChartManifold, x=None) -> SharedKernel:
    spec = cfg.kernel
    if not spec:
        raise ConfigError("Config needs a kernel")
    x = as_point(m, cfg.ref_point if x is None else x)
    q = cfg.quadrature
    quad = build_quadrature(m, x, float(q["r"]), int(q["n_r"]), int(q["n_ang"]))
    if "csv" in spec:
        if "rank_in" not in spec or "rank_out" not in spec:
            raise ConfigError("A kernel CSV needs rank_in and rank_out")
        return load_kernel_csv(cfg.resolve(spec["csv"]), m, quad, TensorRank.from_list(spec["rank_in"]),
                               TensorRank.from_list(spec["rank_out"]))
    if "family" not in spec:
        raise ConfigError("kernel needs a family or a csv path")
    return make_kernel(spec["family"], spec.get("params"), m, x, quad)


def build_spec(cfg: ExperimentConfig, m: ChartManifold | None = None) -> ConvolutionSpec:
    m = m or build_manifold(cfg)
    return ConvolutionSpec(m, build_kernel(cfg, m), cfg.sharing_mode, cfg.output_points, cfg.steps)


# ---------------------------------------------------------------------------
# Convolution checks
# ---------------------------------------------------------------------------


def check_flat_reduction(cfg: ExperimentConfig) -> CheckReport:
    """Covariant convolution vs plain planar correlation on the flat Cartesian chart."""
    m = build_manifold(cfg)
    if m.name != "flat2d-cartesian":
        raise ConfigError(f"flat-reduction runs on flat2d-cartesian, not {m.name}")
    spec = build_spec(cfg, m)
    f = build_field(cfg, m)
    table = _ErrorTable("flat-reduction", cfg.tolerance_for("flat-reduction"))

    for p, out in zip(spec.points(), convolve_field(spec, f)):
        oracle = planar_correlation(spec.kernel, f, p)
        table.add(p, out.components, oracle.components)
    return table.report(kernel=cfg.kernel, field=cfg.field)


def _map_path(ct, path: Path) -> Path:
    return Path(np.array([transition_point(ct, s) for s in path.samples]), path.params)


def check_gauge_equivariance(cfg: ExperimentConfig) -> CheckReport:
    """Convolve in chart A and push by the Jacobian vs convolve in chart B.

    Chart B sees the same kernel, field and sharing curves, rewritten through
    the transition.
    """
    m_a = build_manifold(cfg)
    ct = build_transition(cfg, m_a)
    m_b = ct.target
    f_a = build_field(cfg, m_a)
    f_b = transform_field(f_a, ct)
    k_a = build_kernel(cfg, m_a)
    k_b = transform_kernel(k_a, ct)
    table = _ErrorTable("gauge-equivariance", cfg.tolerance_for("gauge-equivariance"))

    points = ConvolutionSpec(m_a, k_a, cfg.sharing_mode, cfg.output_points, cfg.steps).points()
    for p in points:
        if np.array_equal(p, k_a.ref_point):
            local_a, local_b = k_a, k_b
        else:
            path_a = sharing_path(m_a, k_a.ref_point, p, cfg.sharing_mode, cfg.steps)
            local_a = share_kernel(m_a, k_a, path_a)
            local_b = share_kernel(m_b, k_b, _map_path(ct, path_a))
        out_a = convolve_at(m_a, local_a, f_a, cfg.steps)
        out_b = convolve_at(m_b, local_b, f_b, cfg.steps)
        expected = push_tensor(out_a, transition_jacobian(ct, p))
        table.add(p, out_b.components, expected.components)
    return table.report(transition=ct.name, source=m_a.name, target=m_b.name)


def check_weight_sharing(cfg: ExperimentConfig) -> CheckReport:
    """Shared kernel on the transported input vs transported output.

    For each output point x', the part of f seen from x* is carried to x'
    along the sharing path and convolved with the kernel shared along the same
    path; the result must equal the output at x* transported to x'.
    """
    m = build_manifold(cfg)
    f = build_field(cfg, m)
    k = build_kernel(cfg, m)
    table = _ErrorTable("weight-sharing", cfg.tolerance_for("weight-sharing"))
    source_out = convolve_at(m, k, f, cfg.steps)

    mode = "chart-segment" if cfg.sharing_mode == "none" else cfg.sharing_mode
    targets = cfg.output_points or [k.ref_point]
    for target in targets:
        path = sharing_path(m, k.ref_point, target, mode, cfg.steps)
        moved_field = transported_localized_field(m, f, k.ref_point, path, k.quad, cfg.steps)
        moved_out = convolve_at(m, share_kernel(m, k, path), moved_field, cfg.steps)
        expected = parallel_transport(m, path, source_out)
        table.add(target, moved_out.components, expected.components)
    return table.report(sharing_mode=mode, source_output=source_out.components)


def check_locality_linearity(cfg: ExperimentConfig) -> CheckReport:
    """Outputs depend only on the field inside the ball, and linearly."""
    m = build_manifold(cfg)
    if m.distance_fn is None:
        raise ConfigError(f"locality-linearity needs a manifold with a distance function; {m.name} has none")
    f = build_field(cfg, m)
    k = build_kernel(cfg, m)
    x = k.ref_point
    radius = k.quad.radius
    shape = f.rank.shape(m.dim)
    table = _ErrorTable("locality-linearity", cfg.tolerance_for("locality-linearity"))

    def outside_changed(y):
        bump = 0.0 if m.distance_fn(x, y) <= radius else 10.0
        return f.evaluate(y) + bump

    altered = OracleField(f.rank, f.chart, outside_changed, f.contains)
    base_out = convolve_at(m, k, f, cfg.steps)
    altered_out = convolve_at(m, k, altered, cfg.steps)
    locality_error = table.add(x, altered_out.components, base_out.components)

    other = OracleField(f.rank, f.chart, lambda y: np.full(shape, math.sin(y[0]) + math.cos(y[1])), f.contains)
    a, b = 0.7, -1.3
    combined = convolve_at(m, k, linear_combination([f, other], [a, b]), cfg.steps)
    other_out = convolve_at(m, k, other, cfg.steps)
    table.add(x, combined.components, a * base_out.components + b * other_out.components)
    return table.report(locality_error=locality_error, coefficients=[a, b])


# ---------------------------------------------------------------------------
# Geometry checks
# ---------------------------------------------------------------------------


def _loop_from_config(cfg: ExperimentConfig) -> tuple[Path, float | None]:
    loop = cfg.loop or {}
    kind = loop.get("kind", "polygon")
    if kind in ("triangle", "lune"):
        alpha, apex = float(loop.get("alpha", math.pi / 2)), float(loop.get("apex", 0.01))
        build = spherical_triangle_loop if kind == "triangle" else spherical_lune_loop
        return build(alpha, apex, cfg.steps), predicted_holonomy(kind, alpha, apex)
    if kind == "polygon":
        if "points" not in loop:
            raise ConfigError("A polygon loop needs points")
        return polyline_path(loop["points"], cfg.steps), loop.get("expected")
    raise ConfigError(f"Unknown loop kind '{kind}'")


def check_holonomy(cfg: ExperimentConfig) -> CheckReport:
    """Signed transport angle around a loop vs its closed-form prediction.

    Triangles and lunes on a sphere of radius R enclose a solid angle that is
    their holonomy, positive for loops running counterclockwise in the
    (theta, phi) chart; loops on a flat chart have none. With `paths` set, the
    two-path kernel relation is checked as well, and the rotation angle of its
    H is compared with `relation_angle` (or the loop's prediction, or 0 on a
    flat chart).
    """
    m = build_manifold(cfg)
    flat = m.name.startswith("flat")
    table = _ErrorTable("holonomy", cfg.tolerance_for("holonomy"))
    details: dict[str, Any] = {}
    predicted = None

    if cfg.loop is not None:
        loop, predicted = _loop_from_config(cfg)
        if predicted is None:
            predicted = 0.0 if flat else None
        if predicted is None:
            raise ConfigError("Polygon loops on curved manifolds need an expected angle")
        angle = holonomy_angle(m, loop)
        table.add(loop.start, angle, predicted)
        details.update(angle=angle, predicted=predicted)

    if cfg.paths is not None:
        expected = cfg.relation_angle
        if expected is None:
            expected = 0.0 if flat else predicted
        if expected is None:
            raise ConfigError("Two paths on a curved manifold need relation_angle or a loop to predict it")
        p1 = polyline_path(cfg.paths[0], cfg.steps)
        p2 = polyline_path(cfg.paths[1], cfg.steps)
        k = build_kernel(cfg, m, p1.start)
        relation = kernel_two_path_relation(m, k, p1, p2)
        table.add(p1.end, relation.max_deviation, 0.0)
        table.add(p1.end, relation.holonomy_angle, expected)
        details.update(
            relation_deviation=relation.max_deviation,
            relation_angle=relation.holonomy_angle,
            relation_expected=expected,
            relation_holonomy=relation.holonomy,
        )

    if not table.points:
        raise ConfigError("holonomy needs a loop or two paths")
    return table.report(**details)


def _sphere_radius(m: ChartManifold) -> float:
    if not m.name.endswith("sphere"):
        raise ConfigError(f"This check runs on sphere presets, not {m.name}")
    return float(m.params[0]) if m.params else 1.0


def _in_band(points, margin: float) -> bool:
    return all(margin <= p[0] <= math.pi - margin and abs(p[1]) <= math.pi - 2 * margin for p in points)


def check_geodesic_accuracy(cfg: ExperimentConfig) -> CheckReport:
    """Integrated exp map vs the great-circle closed form at random (x, v)."""
    m = build_manifold(cfg)
    radius = _sphere_radius(m)
    rng = np.random.default_rng(cfg.seed)
    table = _ErrorTable("geodesic-accuracy", cfg.tolerance_for("geodesic-accuracy"))
    fractions = np.linspace(0.0, 1.0, 11)

    while len(table.points) < cfg.samples:
        x = np.array([rng.uniform(0.6, math.pi - 0.6), rng.uniform(-1.0, 1.0)])
        heading = rng.uniform(0.0, 2 * math.pi)
        speed = rng.uniform(0.05, math.pi / 2)
        v = orthonormal_frame(m, x) @ (speed * np.array([math.cos(heading), math.sin(heading)]))
        arc = [sphere_analytic_exp(x, s * v, radius) for s in fractions]
        if not _in_band(arc, 0.5):
            continue
        table.add(x, exp_map(m, x, v, cfg.steps), arc[-1])
    return table.report(radius=radius, seed=cfg.seed)


def _random_box_point(rng, box) -> np.ndarray:
    return np.array([rng.uniform(box[0], box[1]), rng.uniform(box[2], box[3])])


def check_transport_isometry(cfg: ExperimentConfig) -> CheckReport:
    """Inner products of vector pairs are unchanged by transport along random polylines."""
    m = build_manifold(cfg)
    _sphere_radius(m)
    rng = np.random.default_rng(cfg.seed)
    box = (0.8, math.pi - 0.8, -1.0, 1.0)
    table = _ErrorTable("transport-isometry", cfg.tolerance_for("transport-isometry"))

    for _ in range(cfg.samples):
        corners = [_random_box_point(rng, box) for _ in range(4)]
        path = polyline_path(corners, cfg.steps)
        vectors = rng.normal(size=(2, 2))
        moved = transport_vectors(m, path, vectors)
        before = [inner(m, path.start, vectors[i], vectors[j]) for i, j in ((0, 0), (0, 1), (1, 1))]
        after = [inner(m, path.end, moved[i], moved[j]) for i, j in ((0, 0), (0, 1), (1, 1))]
        table.add(path.start, after, before)
    return table.report(seed=cfg.seed)


# ---------------------------------------------------------------------------
# Representation check
# ---------------------------------------------------------------------------


def check_multiplicities(cfg: ExperimentConfig) -> CheckReport:
    """Clebsch-Gordan recursion vs character integrals for n = 0..max_n.

    The error for each n is the largest gap between the integer table and the
    unrounded integrals; m_{n,n} != 1 counts as an error of 1.
    """
    table = _ErrorTable("multiplicities", cfg.tolerance_for("multiplicities"))
    tables = {}
    for n in range(cfg.max_n + 1):
        exact = so3_tensor_multiplicities(n)
        oracle = character_multiplicities(n)
        got = [exact.multiplicity(j) for j in range(n + 1)]
        expected = [oracle[j] for j in range(n + 1)]
        err = table.add([n], got, expected)
        if exact.multiplicity(n) != 1:
            table.points[-1]["error"] = max(err, 1.0)
        tables[str(n)] = exact.to_dict()["multiplicities"]
    return table.report(tables=tables)


CHECKS: dict[str, Callable[[ExperimentConfig], CheckReport]] = {
    "flat-reduction": check_flat_reduction,
    "gauge-equivariance": check_gauge_equivariance,
    "weight-sharing": check_weight_sharing,
    "holonomy": check_holonomy,
    "geodesic-accuracy": check_geodesic_accuracy,
    "transport-isometry": check_transport_isometry,
    "locality-linearity": check_locality_linearity,
    "multiplicities": check_multiplicities,
}


def run_check(cfg: ExperimentConfig, name: str | None = None) -> CheckReport:
    name = name or cfg.check
    if name not in CHECKS:
        raise ConfigError(f"Unknown check '{name}'. Available: {', '.join(CHECKS)}")
    return CHECKS[name](cfg)
