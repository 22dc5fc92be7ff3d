"""Chart-based Riemannian primitives.

Everything is computed in chart coordinates with the coordinate basis
{d/dx^mu}. Curves are integrated with fixed-step RK4.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import config
from .errors import DomainError, DomainExitError, NumericalError, RankMismatchError
from .tensors import TensorValue, VECTOR

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartManifold:
    """A d-dimensional manifold region described by a single chart."""

    name: str
    dim: int
    metric_fn: Callable[[np.ndarray], np.ndarray]
    domain_predicate: Callable[[np.ndarray], bool]
    christoffel_fn: Callable[[np.ndarray], np.ndarray] | None = None
    # closed-form geodesic distance, when the preset has one
    distance_fn: Callable[[np.ndarray, np.ndarray], float] | None = None
    params: tuple = ()

    def is_valid(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        return bool(self.domain_predicate(x))


@dataclass(frozen=True, eq=False)
class TangentVec:
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.array(self.base, dtype=float).reshape(-1))
        object.__setattr__(self, "components", np.array(self.components, dtype=float).reshape(-1))
        if self.base.shape != self.components.shape:
            raise RankMismatchError("Tangent vector and base point differ in dimension")


@dataclass(frozen=True, eq=False)
class ChristoffelSymbols:
    """Gamma^lambda_{mu nu}, stored as values[lambda, mu, nu]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        d = values.shape[0]
        if values.shape != (d, d, d):
            raise RankMismatchError(f"Christoffel symbols need shape (d,d,d), got {values.shape}")
        object.__setattr__(self, "values", values)

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True, eq=False)
class Path:
    """A sampled curve in chart coordinates, parametrized over [0, 1].

    Geodesics also carry sampled velocities dx/dt, which transport uses for
    cubic Hermite midpoints; plain polylines are piecewise linear.
    """

    samples: np.ndarray
    params: np.ndarray
    velocities: np.ndarray | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        params = np.array(self.params, dtype=float).reshape(-1)
        if samples.ndim != 2 or samples.shape[0] < 2:
            raise ValueError("A path needs at least two samples")
        if params.shape[0] != samples.shape[0]:
            raise ValueError("Path params and samples differ in length")
        if abs(params[0]) > 1e-12 or abs(params[-1] - 1.0) > 1e-12:
            raise ValueError("Path params must run from 0 to 1")
        if np.any(np.diff(params) <= 0):
            raise ValueError("Path params must be strictly increasing")
        params[0], params[-1] = 0.0, 1.0
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "params", params)
        if self.velocities is not None:
            velocities = np.array(self.velocities, dtype=float)
            if velocities.shape != samples.shape:
                raise ValueError("Path velocities must match samples")
            object.__setattr__(self, "velocities", velocities)

    @property
    def start(self) -> np.ndarray:
        return self.samples[0]

    @property
    def end(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def reversed(self) -> "Path":
        velocities = None if self.velocities is None else -self.velocities[::-1]
        return Path(self.samples[::-1], 1.0 - self.params[::-1], velocities)

    def is_closed(self, tol=1e-9) -> bool:
        return bool(np.max(np.abs(self.end - self.start)) <= tol)


@dataclass(frozen=True)
class ChartTransition:
    """Coordinate change x -> x' between two charts of the same manifold."""

    name: str
    source: ChartManifold
    target: ChartManifold
    forward: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray] | None = None


# ---------------------------------------------------------------------------
# Path builders
# ---------------------------------------------------------------------------


def straight_path(x0, x1, n_steps: int | None = None) -> Path:
    """Chart-coordinate segment from x0 to x1 with n_steps equal pieces."""
    n_steps = n_steps or config.default_steps
    t = np.linspace(0.0, 1.0, n_steps + 1)
    x0, x1 = np.asarray(x0, dtype=float), np.asarray(x1, dtype=float)
    return Path(x0[None, :] + t[:, None] * (x1 - x0)[None, :], t)


def polyline_path(points, steps_per_segment: int | None = None) -> Path:
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 2:
        raise ValueError("A polyline needs at least two points")
    steps_per_segment = steps_per_segment or config.default_steps
    pieces = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        s = np.linspace(0.0, 1.0, steps_per_segment + 1)[1:]
        pieces.append(a[None, :] + s[:, None] * (b - a)[None, :])
    samples = np.vstack(pieces)
    return Path(samples, np.linspace(0.0, 1.0, samples.shape[0]))


# ---------------------------------------------------------------------------
# Metric
# ---------------------------------------------------------------------------


def as_point(m: ChartManifold, x) -> np.ndarray:
    x = np.array(x, dtype=float).reshape(-1)
    if x.shape != (m.dim,):
        raise RankMismatchError(f"{m.name} points have {m.dim} coordinates, got {x.shape[0]}")
    if not m.is_valid(x):
        raise DomainError(f"Point {x.tolist()} is outside the {m.name} chart domain")
    return x


def metric_at(m: ChartManifold, x) -> np.ndarray:
    x = as_point(m, x)
    return np.asarray(m.metric_fn(x), dtype=float).reshape(m.dim, m.dim)


def check_metric(m: ChartManifold, x) -> np.ndarray:
    """Return g(x) after checking symmetry (1e-12) and positive definiteness."""
    g = metric_at(m, x)
    if np.max(np.abs(g - g.T)) > 1e-12:
        raise NumericalError(f"Metric of {m.name} is not symmetric at {x}")
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise NumericalError(f"Metric of {m.name} is not positive definite at {x}")
    return g


def volume_density(m: ChartManifold, x) -> float:
    return math.sqrt(abs(np.linalg.det(metric_at(m, x))))


def inner(m: ChartManifold, x, u, w) -> float:
    return float(np.asarray(u, dtype=float) @ metric_at(m, x) @ np.asarray(w, dtype=float))


def metric_norm(m: ChartManifold, x, v) -> float:
    return math.sqrt(max(inner(m, x, v, v), 0.0))


def orthonormal_frame(m: ChartManifold, x) -> np.ndarray:
    """Columns form a g(x)-orthonormal basis: E^T g E = I."""
    g = metric_at(m, x)
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Metric of {m.name} is not positive definite at {x}") from e
    return np.linalg.inv(L).T


# ---------------------------------------------------------------------------
# Christoffel symbols
# ---------------------------------------------------------------------------


def _fd_christoffel(m: ChartManifold, x: np.ndarray, check_stencil: bool = True) -> np.ndarray:
    d = m.dim
    dg = np.empty((d, d, d))
    for mu in range(d):
        h = config.fd_rel_step * max(1.0, abs(x[mu]))
        step = np.zeros(d)
        step[mu] = h
        xp, xm = x + step, x - step
        if check_stencil and not (m.is_valid(xp) and m.is_valid(xm)):
            raise DomainError(f"Point {x.tolist()} is too close to the {m.name} chart boundary")
        dg[mu] = (np.asarray(m.metric_fn(xp), dtype=float) - np.asarray(m.metric_fn(xm), dtype=float)) / (2 * h)

    try:
        g_inv = np.linalg.inv(np.asarray(m.metric_fn(x), dtype=float))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Metric of {m.name} is singular at {x.tolist()}") from e

    # dg[mu, sigma, nu] = d_mu g_{sigma nu}
    lowered = 0.5 * (np.einsum("msn->smn", dg) + np.einsum("nsm->smn", dg) - dg)
    gamma = np.einsum("ls,smn->lmn", g_inv, lowered)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def _gamma(m: ChartManifold, x: np.ndarray) -> np.ndarray:
    """Christoffels without domain checks, for use inside integrators."""
    if m.christoffel_fn is not None:
        return np.asarray(m.christoffel_fn(x), dtype=float)
    return _fd_christoffel(m, x, check_stencil=False)


def christoffel_at(m: ChartManifold, x) -> ChristoffelSymbols:
    x = as_point(m, x)
    if m.christoffel_fn is not None:
        return ChristoffelSymbols(m.christoffel_fn(x))
    return ChristoffelSymbols(_fd_christoffel(m, x))


def fd_christoffel_at(m: ChartManifold, x) -> ChristoffelSymbols:
    """Finite-difference Christoffels even when the preset has analytic ones."""
    return ChristoffelSymbols(_fd_christoffel(m, as_point(m, x)))


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------


def _geodesic_acceleration(m: ChartManifold, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return -((_gamma(m, x) @ u) @ u)


def geodesic_integrate(m: ChartManifold, start: TangentVec, n_steps: int | None = None) -> Path:
    """Integrate x'' + Gamma(x)(x', x') = 0 on [0, 1] with fixed-step RK4.

    The returned path carries the velocity at every sample so transport along
    the geodesic can reuse it.

    Raises:
        DomainExitError: the trajectory left the chart; `last_valid` is the last
            sample inside the domain.
    """
    n_steps = n_steps or config.default_steps
    x = as_point(m, start.base)
    u = np.array(start.components, dtype=float)
    h = 1.0 / n_steps
    logger.debug("Integrating geodesic on %s from %s with v=%s", m.name, x, u)

    xs, us = [x], [u]
    for k in range(n_steps):
        try:
            k1x, k1u = u, _geodesic_acceleration(m, x, u)
            k2x = u + 0.5 * h * k1u
            k2u = _geodesic_acceleration(m, x + 0.5 * h * k1x, k2x)
            k3x = u + 0.5 * h * k2u
            k3u = _geodesic_acceleration(m, x + 0.5 * h * k2x, k3x)
            k4x = u + h * k3u
            k4u = _geodesic_acceleration(m, x + h * k3x, k4x)
        except (DomainError, FloatingPointError) as e:
            raise DomainExitError(
                f"Geodesic on {m.name} left the chart near t={k * h:.4f}", last_valid=x.copy(), t=k * h
            ) from e
        x_next = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        u_next = u + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
        if not m.is_valid(x_next) or not np.all(np.isfinite(u_next)):
            raise DomainExitError(
                f"Geodesic on {m.name} left the chart at t={(k + 1) * h:.4f}", last_valid=x.copy(), t=k * h
            )
        x, u = x_next, u_next
        xs.append(x)
        us.append(u)

    return Path(np.array(xs), np.linspace(0.0, 1.0, n_steps + 1), np.array(us))


def exp_map(m: ChartManifold, x, v, n_steps: int | None = None) -> np.ndarray:
    """exp_x(v): the point reached at t=1 by the geodesic with initial velocity v."""
    x = as_point(m, x)
    if isinstance(v, TangentVec):
        if np.max(np.abs(v.base - x)) > 1e-12:
            raise DomainError("Tangent vector is not based at x")
        v = v.components
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return x.copy()
    return geodesic_integrate(m, TangentVec(x, v), n_steps).end


def log_map(m: ChartManifold, x, y, n_steps: int | None = None, tol: float | None = None,
            max_iter: int | None = None) -> np.ndarray:
    """Initial velocity v with exp_x(v) = y, found by Newton shooting.

    The Jacobian of exp is taken by central differences; the iteration stops
    once the endpoint misses y by less than `tol` in coordinates.
    """
    tol = tol or config.log_tol
    max_iter = max_iter or config.log_max_iter
    x, y = as_point(m, x), as_point(m, y)
    v = y - x
    if not np.any(v):
        return v

    for it in range(max_iter):
        residual = exp_map(m, x, v, n_steps) - y
        if np.max(np.abs(residual)) < tol:
            logger.debug("Shooting converged after %d iterations", it)
            return v
        eps = 1e-6 * max(1.0, float(np.max(np.abs(v))))
        J = np.empty((m.dim, m.dim))
        for j in range(m.dim):
            dv = np.zeros(m.dim)
            dv[j] = eps
            J[:, j] = (exp_map(m, x, v + dv, n_steps) - exp_map(m, x, v - dv, n_steps)) / (2 * eps)
        try:
            v = v - np.linalg.solve(J, residual)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Shooting from {x} to {y} hit a singular Jacobian") from e

    raise NumericalError(f"Shooting from {x.tolist()} to {y.tolist()} did not converge in {max_iter} iterations")


# ---------------------------------------------------------------------------
# Parallel transport
# ---------------------------------------------------------------------------


def _connection_matrix(gamma: np.ndarray, xdot: np.ndarray) -> np.ndarray:
    # A^lambda_nu = Gamma^lambda_{mu nu} xdot^mu
    return np.einsum("lmn,m->ln", gamma, xdot)


def _transport_rhs(A: np.ndarray, T: np.ndarray, n_contra: int, n_co: int) -> np.ndarray:
    out = np.zeros_like(T)
    for axis in range(n_contra):
        out -= np.moveaxis(np.tensordot(A, T, axes=([1], [axis])), 0, axis)
    for axis in range(n_contra, n_contra + n_co):
        out += np.moveaxis(np.tensordot(A, T, axes=([0], [axis])), 0, axis)
    return out


def _transport_components(m: ChartManifold, path: Path, T: np.ndarray, n_contra: int, n_co: int) -> np.ndarray:
    """RK4 on dT/dt = -/+ Gamma(x) xdot T over every segment of the path.

    Axes of T beyond n_contra + n_co are carried along untouched.
    """
    if path.dim != m.dim:
        raise RankMismatchError(f"Path of dimension {path.dim} on {m.name} (dimension {m.dim})")
    for k, x in enumerate(path.samples):
        if not m.is_valid(x):
            raise DomainExitError(
                f"Transport path leaves the {m.name} chart at sample {k}",
                last_valid=path.samples[k - 1].copy() if k else None,
                t=float(path.params[k - 1]) if k else None,
            )

    gammas = [_gamma(m, x) for x in path.samples]
    T = np.array(T, dtype=float)
    for k in range(path.samples.shape[0] - 1):
        x0, x1 = path.samples[k], path.samples[k + 1]
        h = path.params[k + 1] - path.params[k]
        if path.velocities is not None:
            v0, v1 = path.velocities[k], path.velocities[k + 1]
            x_mid = 0.5 * (x0 + x1) + h * (v0 - v1) / 8.0
            v_mid = 1.5 * (x1 - x0) / h - 0.25 * (v0 + v1)
        else:
            v0 = v1 = v_mid = (x1 - x0) / h
            x_mid = 0.5 * (x0 + x1)
        if not np.any(v0) and not np.any(v1) and not np.any(v_mid):
            continue

        A0 = _connection_matrix(gammas[k], v0)
        Am = _connection_matrix(_gamma(m, x_mid), v_mid)
        A1 = _connection_matrix(gammas[k + 1], v1)
        k1 = _transport_rhs(A0, T, n_contra, n_co)
        k2 = _transport_rhs(Am, T + 0.5 * h * k1, n_contra, n_co)
        k3 = _transport_rhs(Am, T + 0.5 * h * k2, n_contra, n_co)
        k4 = _transport_rhs(A1, T + h * k3, n_contra, n_co)
        T = T + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return T


def parallel_transport(m: ChartManifold, path: Path, T: TensorValue) -> TensorValue:
    """Transport a tensor based at path.start to path.end along the path.

    Each contravariant slot picks up -Gamma xdot, each covariant slot +Gamma xdot.
    """
    if T.dim != m.dim:
        raise RankMismatchError(f"Tensor of dimension {T.dim} on {m.name} (dimension {m.dim})")
    if np.max(np.abs(T.base - path.start)) > 1e-9 * max(1.0, float(np.max(np.abs(path.start)))):
        raise DomainError(f"Tensor based at {T.base.tolist()} but path starts at {path.start.tolist()}")
    comps = _transport_components(m, path, T.components, T.rank.n_out, T.rank.n_in)
    return TensorValue(T.rank, path.end, comps)


def transport_vector(m: ChartManifold, path: Path, v) -> np.ndarray:
    return parallel_transport(m, path, TensorValue(VECTOR, path.start, v)).components


def transport_matrix(m: ChartManifold, path: Path) -> np.ndarray:
    """Linear transport map of tangent vectors; column mu is the transported d/dx^mu."""
    return _transport_components(m, path, np.eye(m.dim), 1, 0)


def holonomy_angle(m: ChartManifold, loop: Path) -> float:
    """Signed rotation angle of transport around a closed loop of a 2-manifold."""
    if m.dim != 2:
        raise RankMismatchError("Holonomy angles are defined for 2-manifolds only")
    if not loop.is_closed():
        raise DomainError("Holonomy needs a closed loop")
    return rotation_angle(m, loop.start, transport_matrix(m, loop))


# ---------------------------------------------------------------------------
# Chart transitions
# ---------------------------------------------------------------------------


def transition_point(ct: ChartTransition, x) -> np.ndarray:
    x = as_point(ct.source, x)
    x_new = np.asarray(ct.forward(x), dtype=float)
    if not ct.target.is_valid(x_new):
        raise DomainError(f"Point {x.tolist()} is outside the overlap of transition '{ct.name}'")
    return x_new


def transition_jacobian(ct: ChartTransition, x) -> np.ndarray:
    transition_point(ct, x)
    J = np.asarray(ct.jacobian(np.asarray(x, dtype=float)), dtype=float)
    if abs(np.linalg.det(J)) < 1e-14:
        raise NumericalError(f"Jacobian of transition '{ct.name}' is singular at {list(x)}")
    return J


def transition_inverse_point(ct: ChartTransition, x_new) -> np.ndarray:
    if ct.inverse is None:
        raise DomainError(f"Transition '{ct.name}' has no inverse map")
    x_new = as_point(ct.target, x_new)
    x = np.asarray(ct.inverse(x_new), dtype=float)
    if not ct.source.is_valid(x):
        raise DomainError(f"Point {x_new.tolist()} is outside the overlap of transition '{ct.name}'")
    return x


def jacobian_fd_deviation(ct: ChartTransition, x) -> float:
    """Largest difference between the analytic Jacobian and central differences of forward."""
    x = as_point(ct.source, x)
    J = transition_jacobian(ct, x)
    J_fd = np.empty_like(J)
    for nu in range(x.shape[0]):
        h = config.fd_rel_step * max(1.0, abs(x[nu]))
        step = np.zeros_like(x)
        step[nu] = h
        J_fd[:, nu] = (np.asarray(ct.forward(x + step)) - np.asarray(ct.forward(x - step))) / (2 * h)
    return float(np.max(np.abs(J - J_fd)))


def transport_vectors(m: ChartManifold, path: Path, vectors) -> np.ndarray:
    """Transport several vectors at path.start at once; rows in, rows out."""
    vectors = np.asarray(vectors, dtype=float)
    return _transport_components(m, path, vectors.T, 1, 0).T


def transport_stack(m: ChartManifold, path: Path, stack, n_contra: int, n_co: int) -> np.ndarray:
    """Transport a stack of tensor components shaped (count, d, ..., d)."""
    stack = np.moveaxis(np.asarray(stack, dtype=float), 0, -1)
    return np.moveaxis(_transport_components(m, path, stack, n_contra, n_co), -1, 0)


def rotation_angle(m: ChartManifold, x, P) -> float:
    """Rotation angle of a linear map of T_xM seen in a g(x)-orthonormal frame (d = 2)."""
    E = orthonormal_frame(m, x)
    R = np.linalg.solve(E, np.asarray(P, dtype=float) @ E)
    return math.atan2(R[1, 0], R[0, 0])
