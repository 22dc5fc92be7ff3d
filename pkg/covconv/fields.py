"""Tensor-valued feature fields over a chart region.

A field is one of
  * OracleField     analytic map coordinates -> components (exact sampling)
  * GridField       rectangular samples, componentwise bilinear interpolation
  * TabulatedField  values at scattered points, looked up by coordinates

Grid CSV layout: header `coord1,coord2,c_<multi-index>...`, one row per grid
node, row-major over the grid (coord1 outer, coord2 inner). The multi-index is
the slot values written out, e.g. `c_01`; a scalar has the single column `c_`.
"""

import abc
import logging
import math
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree

from .config import config
from .errors import ConfigError, DomainError, RankMismatchError
from .geometry import (
    ChartManifold,
    ChartTransition,
    Path,
    TangentVec,
    as_point,
    geodesic_integrate,
    parallel_transport,
    transition_inverse_point,
    transition_jacobian,
    transport_vectors,
)
from .kernel import TangentQuadrature, build_quadrature
from .tensors import SCALAR, VECTOR, TensorRank, TensorValue, multi_indices, push_tensor

logger = logging.getLogger(__name__)

__all__ = [
    "TensorField",
    "OracleField",
    "GridField",
    "TabulatedField",
    "sample",
    "push_tensor",
    "transport_to_center",
    "transported_localized_field",
]


class TensorField(abc.ABC):
    def __init__(self, rank: TensorRank, chart: str):
        self.rank = rank
        self.chart = chart

    @abc.abstractmethod
    def contains(self, x: np.ndarray) -> bool:
        """True if x lies in the region where the field is defined."""

    @abc.abstractmethod
    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Components at x, with the rank's shape."""


class OracleField(TensorField):
    def __init__(self, rank: TensorRank, chart: str, fn: Callable[[np.ndarray], np.ndarray],
                 region: Callable[[np.ndarray], bool] | None = None):
        super().__init__(rank, chart)
        self.fn = fn
        self.region = region

    def contains(self, x):
        return self.region is None or bool(self.region(x))

    def evaluate(self, x):
        return np.asarray(self.fn(x), dtype=float)


class GridField(TensorField):
    def __init__(self, rank: TensorRank, chart: str, axes, values):
        super().__init__(rank, chart)
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.values = np.asarray(values, dtype=float)
        dim = len(self.axes)
        expected = tuple(len(a) for a in self.axes) + rank.shape(dim)
        if self.values.shape != expected:
            raise RankMismatchError(f"Grid values have shape {self.values.shape}, expected {expected}")
        flat = self.values.reshape(tuple(len(a) for a in self.axes) + (-1,))
        self._interp = RegularGridInterpolator(self.axes, flat, method="linear", bounds_error=True)
        self._comp_shape = rank.shape(dim)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) if len(a) > 1 else 0.0 for a in self.axes)

    def contains(self, x):
        return all(a[0] <= xi <= a[-1] for a, xi in zip(self.axes, x))

    def evaluate(self, x):
        return self._interp(np.asarray(x, dtype=float)[None, :])[0].reshape(self._comp_shape)


class TabulatedField(TensorField):
    """Values known only at a set of points; sampling elsewhere is an error."""

    def __init__(self, rank: TensorRank, chart: str, points, values, tol: float | None = None):
        super().__init__(rank, chart)
        self.points = np.asarray(points, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.tol = config.node_match_tol if tol is None else tol
        self._tree = cKDTree(self.points)

    def _lookup(self, x):
        dist, idx = self._tree.query(np.asarray(x, dtype=float))
        return dist, idx

    def contains(self, x):
        dist, _ = self._lookup(x)
        return dist <= self.tol * max(1.0, float(np.max(np.abs(x))))

    def evaluate(self, x):
        _, idx = self._lookup(x)
        return self.values[idx]


# ---------------------------------------------------------------------------
# Sampling and frame changes
# ---------------------------------------------------------------------------


def sample(f: TensorField, x) -> TensorValue:
    x = np.array(x, dtype=float).reshape(-1)
    if not f.contains(x):
        raise DomainError(f"Point {x.tolist()} is outside the region of the field on {f.chart}")
    return TensorValue(f.rank, x, f.evaluate(x))


def linear_combination(fields: list[TensorField], coeffs: list[float]) -> OracleField:
    ranks = {f.rank for f in fields}
    if len(ranks) != 1:
        raise RankMismatchError("Fields in a linear combination must share a rank")

    def fn(x):
        return sum(c * f.evaluate(x) for f, c in zip(fields, coeffs))

    return OracleField(fields[0].rank, fields[0].chart, fn, region=lambda x: all(f.contains(x) for f in fields))


def transform_field(f: TensorField, ct: ChartTransition) -> OracleField:
    """The same field written in the target chart of `ct`."""

    def fn(y):
        x = transition_inverse_point(ct, y)
        return push_tensor(sample(f, x), transition_jacobian(ct, x)).components

    def region(y):
        try:
            return f.contains(transition_inverse_point(ct, y))
        except DomainError:
            return False

    return OracleField(f.rank, ct.target.name, fn, region)


def transport_to_center(m: ChartManifold, f: TensorField, x, v, n_steps: int | None = None) -> TensorValue:
    """f at y = exp_x(v), parallel transported back to x along the geodesic."""
    x = as_point(m, x)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return sample(f, x)
    geodesic = geodesic_integrate(m, TangentVec(x, v), n_steps)
    value = sample(f, geodesic.end)
    return parallel_transport(m, geodesic.reversed(), value)


def transported_localized_field(m: ChartManifold, f: TensorField, x, path: Path, ball,
                                n_steps: int | None = None) -> TabulatedField:
    """Carry the part of f seen from the ball at x along `path`.

    For every ball node v: the value f|_{exp_x v}(x) and v itself are parallel
    transported along the path to x' = path.end, and the value is then carried
    out along the geodesic from x' with the transported velocity. The result is
    tabulated at the points exp_{x'}(v(x')) plus x' itself.

    `ball` is a TangentQuadrature at x or a tuple (r, n_r, n_ang).
    """
    x = as_point(m, x)
    if np.max(np.abs(path.start - x)) > 1e-12 * max(1.0, float(np.max(np.abs(x)))):
        raise DomainError("The transport path must start at the ball center")
    quad = ball if isinstance(ball, TangentQuadrature) else build_quadrature(m, x, *ball)

    moved_nodes = transport_vectors(m, path, quad.nodes)
    x_new = path.end
    points = [x_new]
    values = [parallel_transport(m, path, sample(f, x)).components]
    for v, v_new in zip(quad.nodes, moved_nodes):
        at_center = parallel_transport(m, path, transport_to_center(m, f, x, v, n_steps))
        if not np.any(v_new):
            points.append(x_new)
            values.append(at_center.components)
            continue
        geodesic = geodesic_integrate(m, TangentVec(x_new, v_new), n_steps)
        points.append(geodesic.end)
        values.append(parallel_transport(m, geodesic, at_center).components)

    logger.debug("Tabulated transported field with %d points at %s", len(points), x_new)
    return TabulatedField(f.rank, m.name, np.array(points), np.array(values))


# ---------------------------------------------------------------------------
# Built-in oracle fields
# ---------------------------------------------------------------------------


def _rank_param(params, default: TensorRank) -> TensorRank:
    return TensorRank.from_list(params["rank"]) if "rank" in params else default


def make_field(name: str, params: dict, m: ChartManifold) -> OracleField:
    params = dict(params or {})
    chart = m.name
    region = m.is_valid

    if name == "constant":
        comps = np.asarray(params.get("components", [1.0]), dtype=float)
        default = SCALAR if comps.size == 1 else VECTOR
        rank = _rank_param(params, default)
        comps = comps.reshape(rank.shape(m.dim))
        return OracleField(rank, chart, lambda x: comps, region)

    if name == "coordinate":
        index = int(params.get("index", 0))
        scale = float(params.get("scale", 1.0))
        offset = float(params.get("offset", 0.0))
        return OracleField(SCALAR, chart, lambda x: np.asarray(offset + scale * x[index]), region)

    if name == "linear-vector":
        A = np.asarray(params.get("matrix", np.eye(m.dim)), dtype=float)
        b = np.asarray(params.get("offset", np.zeros(m.dim)), dtype=float)
        return OracleField(VECTOR, chart, lambda x: A @ x + b, region)

    if name == "bump":
        if m.distance_fn is None:
            raise ConfigError(f"Field 'bump' needs a manifold with a distance function; {m.name} has none")
        if "center" not in params:
            raise ConfigError("Field 'bump' needs a center")
        center = np.asarray(params["center"], dtype=float)
        width = float(params.get("width", 0.5))
        amplitude = float(params.get("amplitude", 1.0))
        return OracleField(
            SCALAR, chart, lambda x: np.asarray(amplitude * math.exp(-(m.distance_fn(center, x) / width) ** 2)), region
        )

    if name == "unit-azimuthal":
        # e_phi / (R sin theta): unit g-norm on a sphere of radius R
        radius = m.params[0] if m.params else 1.0
        return OracleField(VECTOR, chart, lambda x: np.array([0.0, 1.0 / (radius * math.sin(x[0]))]), region)

    raise ConfigError(f"Unknown field '{name}'")


def grid_from_oracle(f: TensorField, axes) -> GridField:
    axes = [np.asarray(a, dtype=float) for a in axes]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = np.array([sample(f, p).components for p in mesh.reshape(-1, len(axes))])
    shape = tuple(len(a) for a in axes) + values.shape[1:]
    return GridField(f.rank, f.chart, axes, values.reshape(shape))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def save_grid_csv(f: GridField, path) -> str:
    dim = len(f.axes)
    mesh = np.stack(np.meshgrid(*f.axes, indexing="ij"), axis=-1).reshape(-1, dim)
    values = f.values.reshape(mesh.shape[0], -1)
    header = [f"coord{i + 1}" for i in range(dim)] + [f"c_{mi}" for mi in multi_indices(f.rank, dim)]
    np.savetxt(path, np.hstack([mesh, values]), delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return str(path)


def load_grid_csv(path, rank: TensorRank | None = None, chart: str = "") -> GridField:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read grid field CSV {path}: {e}") from e

    coord_cols = [h for h in header if h.startswith("coord")]
    comp_cols = [h for h in header if h.startswith("c_")]
    dim = len(coord_cols)
    if dim == 0 or data.shape[1] != len(header):
        raise ConfigError(f"Grid field CSV {path} has a malformed header")
    order = len(comp_cols[0]) - 2 if comp_cols else 0
    if rank is None:
        rank = TensorRank(order, 0)
    if rank.component_count(dim) != len(comp_cols):
        raise RankMismatchError(f"Grid field CSV {path} has {len(comp_cols)} components, rank needs "
                                f"{rank.component_count(dim)}")

    data = data[np.lexsort(tuple(data[:, i] for i in reversed(range(dim))))]
    axes = [np.unique(data[:, i]) for i in range(dim)]
    if int(np.prod([len(a) for a in axes])) != data.shape[0]:
        raise ConfigError(f"Grid field CSV {path} is not a full rectangular grid")
    shape = tuple(len(a) for a in axes) + rank.shape(dim)
    return GridField(rank, chart, axes, data[:, dim:].reshape(shape))
