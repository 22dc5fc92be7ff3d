"""Tangent-ball quadrature and the tabulated convolution kernel K(x, v).

A kernel lives at one point: it holds a quadrature of the metric ball
B_x = {v : g_x(v, v) < r^2} and one coefficient tensor per node. Kernels at
other points are obtained by parallel transport of both the nodes and the
coefficients (weight sharing).

Kernel CSV layout: header `v1,v2,c_<multi-index>...`, one row per node; rows
are matched to the quadrature nodes by their components.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import roots_legendre

from .config import config
from .errors import ConfigError, DomainError, RankMismatchError
from .geometry import (
    ChartManifold,
    ChartTransition,
    Path,
    TangentVec,
    as_point,
    geodesic_integrate,
    log_map,
    metric_at,
    orthonormal_frame,
    rotation_angle,
    straight_path,
    transition_jacobian,
    transition_point,
    transport_matrix,
    transport_stack,
    transport_vectors,
    volume_density,
)
from .tensors import SCALAR, VECTOR, TensorRank, TensorValue, kernel_rank, multi_indices, push_tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TangentQuadrature:
    base: np.ndarray
    radius: float
    nodes: np.ndarray  # (n, d) coordinate components v^mu
    weights: np.ndarray  # (n,) coordinate measure d^d v

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


def build_quadrature(m: ChartManifold, x, r: float, n_r: int, n_ang: int) -> TangentQuadrature:
    """Polar product rule on the metric ball of radius r in T_xM.

    Gauss-Legendre radii times uniform angles are laid out in a g(x)-orthonormal
    frame and mapped to coordinate components; the weights carry the radial
    measure and the frame's volume factor, so they sum to the coordinate area
    pi r^2 / sqrt(det g(x)) of the metric ball.
    """
    if r <= 0 or n_r <= 0 or n_ang <= 0:
        raise ValueError(f"Quadrature needs r > 0 and positive resolutions, got r={r}, n_r={n_r}, n_ang={n_ang}")
    if m.dim != 2:
        raise NotImplementedError("Only two-dimensional tangent-ball rules are available")
    x = as_point(m, x)
    E = orthonormal_frame(m, x)

    xi, w_xi = roots_legendre(int(n_r))
    radii = 0.5 * r * (xi + 1.0)
    radial_weights = 0.5 * r * w_xi * radii
    angles = 2.0 * math.pi * np.arange(n_ang) / n_ang

    local = np.array([[s * math.cos(a), s * math.sin(a)] for s in radii for a in angles])
    weights = np.repeat(radial_weights, n_ang) * (2.0 * math.pi / n_ang) * abs(np.linalg.det(E))
    return TangentQuadrature(x, float(r), local @ E.T, weights)


def coordinate_ball_volume(m: ChartManifold, quad: TangentQuadrature) -> float:
    return math.pi * quad.radius**2 / volume_density(m, quad.base)


@dataclass(frozen=True, eq=False)
class SharedKernel:
    ref_point: np.ndarray
    rank_in: TensorRank
    rank_out: TensorRank
    quad: TangentQuadrature
    coeffs: np.ndarray  # (n_nodes, d, ..., d) in kernel_rank layout

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        expected = (self.quad.size,) + self.coeff_rank.shape(self.quad.nodes.shape[1])
        if coeffs.shape != expected:
            raise RankMismatchError(f"Kernel coefficients have shape {coeffs.shape}, expected {expected}")
        if np.max(np.abs(self.quad.base - np.asarray(self.ref_point))) > 0:
            raise DomainError("Kernel quadrature must be based at the reference point")
        object.__setattr__(self, "ref_point", np.asarray(self.ref_point, dtype=float))
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def coeff_rank(self) -> TensorRank:
        return kernel_rank(self.rank_in, self.rank_out)

    def coefficient(self, i: int) -> TensorValue:
        return TensorValue(self.coeff_rank, self.ref_point, self.coeffs[i])


# ---------------------------------------------------------------------------
# Built-in kernel families
# ---------------------------------------------------------------------------

KERNEL_FAMILIES = (
    "zero",
    "constant-scalar",
    "radial-scalar",
    "linear-covector",
    "identity-vector",
    "radial-vector",
)


def make_kernel(family: str, params: dict, m: ChartManifold, x, quad: TangentQuadrature) -> SharedKernel:
    params = dict(params or {})
    x = as_point(m, x)
    g = metric_at(m, x)
    nodes = quad.nodes
    n, d = nodes.shape
    scale = float(params.get("scale", params.get("value", 1.0)))

    if family == "zero":
        rank_in = TensorRank.from_list(params.get("rank_in", [0, 0]))
        rank_out = TensorRank.from_list(params.get("rank_out", [0, 0]))
        coeffs = np.zeros((n,) + kernel_rank(rank_in, rank_out).shape(d))
    elif family == "constant-scalar":
        rank_in, rank_out = SCALAR, SCALAR
        coeffs = np.full(n, scale)
    elif family == "radial-scalar":
        # K(v) = |v|_g
        rank_in, rank_out = SCALAR, SCALAR
        coeffs = scale * np.sqrt(np.einsum("im,mn,in->i", nodes, g, nodes))
    elif family == "linear-covector":
        # K_nu(v) = g_{nu mu}(x) v^mu
        rank_in, rank_out = VECTOR, SCALAR
        coeffs = scale * nodes @ g.T
    elif family == "identity-vector":
        rank_in, rank_out = VECTOR, VECTOR
        coeffs = scale * np.broadcast_to(np.eye(d), (n, d, d)).copy()
    elif family == "radial-vector":
        # K^mu(v) = v^mu
        rank_in, rank_out = SCALAR, VECTOR
        coeffs = scale * nodes.copy()
    else:
        raise ConfigError(f"Unknown kernel family '{family}'. Available: {', '.join(KERNEL_FAMILIES)}")

    return SharedKernel(x, rank_in, rank_out, quad, coeffs)


# ---------------------------------------------------------------------------
# Weight sharing
# ---------------------------------------------------------------------------


def share_kernel(m: ChartManifold, k: SharedKernel, path: Path) -> SharedKernel:
    """Kernel at path.end obtained by transporting nodes and coefficients along path.

    Weights are rescaled by sqrt|g(x*)| / sqrt|g(x')| so the transported ball
    carries the same metric measure.
    """
    if np.max(np.abs(path.start - k.ref_point)) > 1e-12 * max(1.0, float(np.max(np.abs(k.ref_point)))):
        raise DomainError("Sharing path must start at the kernel reference point")
    x_new = as_point(m, path.end)
    nodes = transport_vectors(m, path, k.quad.nodes)
    rank = k.coeff_rank
    coeffs = transport_stack(m, path, k.coeffs, rank.n_out, rank.n_in) if rank.order else k.coeffs.copy()
    weights = k.quad.weights * (volume_density(m, k.ref_point) / volume_density(m, x_new))
    quad = TangentQuadrature(x_new, k.quad.radius, nodes, weights)
    logger.debug("Shared kernel from %s to %s", k.ref_point, x_new)
    return SharedKernel(x_new, k.rank_in, k.rank_out, quad, coeffs)


def sharing_path(m: ChartManifold, x_star, target, mode: str, n_steps: int | None = None) -> Path:
    """Path used to share a kernel from x* to target.

    "chart-segment" is the straight coordinate segment; "geodesic" shoots the
    geodesic from x* to target (log map) and follows it.
    """
    x_star, target = as_point(m, x_star), as_point(m, target)
    if mode == "chart-segment":
        return straight_path(x_star, target, n_steps)
    if mode == "geodesic":
        v = log_map(m, x_star, target, n_steps)
        if not np.any(v):
            return straight_path(x_star, x_star, n_steps)
        return geodesic_integrate(m, TangentVec(x_star, v), n_steps)
    if mode == "none":
        if np.any(target != x_star):
            raise ConfigError("sharing_mode 'none' only evaluates the reference point")
        return straight_path(x_star, x_star, n_steps)
    raise ConfigError(f"Unknown sharing mode '{mode}'")


@dataclass(frozen=True)
class TwoPathRelation:
    max_deviation: float
    node_deviation: float
    coeff_deviation: float
    holonomy: np.ndarray
    holonomy_angle: float


def kernel_two_path_relation(m: ChartManifold, k: SharedKernel, path1: Path, path2: Path) -> TwoPathRelation:
    """Compare kernels shared along two paths with common endpoints.

    With P_i the transport maps and H = P1 P2^{-1} (around the loop p2^{-1} then
    p1, based at x'), covariance requires K_p1(x', H w) = H . K_p2(x', w).
    """
    scale = max(1.0, float(np.max(np.abs(k.ref_point))))
    for p in (path1, path2):
        if np.max(np.abs(p.start - k.ref_point)) > 1e-12 * scale:
            raise DomainError("Both paths must start at the kernel reference point")
    if np.max(np.abs(path1.end - path2.end)) > 1e-9 * scale:
        raise DomainError("Both paths must end at the same point")

    k1, k2 = share_kernel(m, k, path1), share_kernel(m, k, path2)
    H = transport_matrix(m, path1) @ np.linalg.inv(transport_matrix(m, path2))
    H_inv = np.linalg.inv(H)

    node_dev = float(np.max(np.abs(k1.quad.nodes - k2.quad.nodes @ H.T)))
    coeff_dev = 0.0
    for i in range(k.quad.size):
        expected = push_tensor(k2.coefficient(i), H, H_inv)
        coeff_dev = max(coeff_dev, float(np.max(np.abs(k1.coeffs[i] - expected.components), initial=0.0)))

    return TwoPathRelation(
        max_deviation=max(node_dev, coeff_dev),
        node_deviation=node_dev,
        coeff_deviation=coeff_dev,
        holonomy=H,
        holonomy_angle=rotation_angle(m, path1.end, H),
    )


def transform_kernel(k: SharedKernel, ct: ChartTransition) -> SharedKernel:
    """The same kernel written in the target chart of `ct`.

    Nodes and coefficients take the tensor action of the Jacobian J; weights
    scale by |det J| because they are a coordinate measure.
    """
    J = transition_jacobian(ct, k.ref_point)
    J_inv = np.linalg.inv(J)
    x_new = transition_point(ct, k.ref_point)
    nodes = k.quad.nodes @ J.T
    weights = k.quad.weights * abs(np.linalg.det(J))
    coeffs = np.array([push_tensor(k.coefficient(i), J, J_inv).components for i in range(k.quad.size)])
    quad = TangentQuadrature(x_new, k.quad.radius, nodes, weights)
    return SharedKernel(x_new, k.rank_in, k.rank_out, quad, coeffs.reshape(k.coeffs.shape))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def save_kernel_csv(k: SharedKernel, path) -> str:
    d = k.quad.nodes.shape[1]
    header = [f"v{i + 1}" for i in range(d)] + [f"c_{mi}" for mi in multi_indices(k.coeff_rank, d)]
    rows = np.hstack([k.quad.nodes, k.coeffs.reshape(k.quad.size, -1)])
    np.savetxt(path, rows, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return str(path)


def load_kernel_csv(path, m: ChartManifold, quad: TangentQuadrature, rank_in: TensorRank,
                    rank_out: TensorRank) -> SharedKernel:
    """Kernel whose coefficients come from a CSV table keyed by node components."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read kernel CSV {path}: {e}") from e
    d = m.dim
    coeff_rank = kernel_rank(rank_in, rank_out)
    if data.shape[1] != d + coeff_rank.component_count(d):
        raise RankMismatchError(f"Kernel CSV {path} does not match ranks {rank_in} -> {rank_out}")

    tree = cKDTree(data[:, :d])
    dist, idx = tree.query(quad.nodes)
    tol = config.node_match_tol * max(1.0, quad.radius)
    if np.any(dist > tol):
        missing = int(np.argmax(dist))
        raise ConfigError(f"Kernel CSV {path} has no row for node {quad.nodes[missing].tolist()}")
    coeffs = data[idx, d:].reshape((quad.size,) + coeff_rank.shape(d))
    return SharedKernel(quad.base, rank_in, rank_out, quad, coeffs)
