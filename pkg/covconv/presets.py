"""Named manifolds, chart transitions and test curves.

Sphere charts use (theta, phi) with theta the polar angle; all angles are in
radians. Each chart declares a validity predicate with a safety margin so the
coordinate singularities (poles, polar origin, branch cut) stay outside.
"""

import math

import numpy as np

from .config import config
from .errors import ConfigError
from .geometry import ChartManifold, ChartTransition, Path, polyline_path

# ---------------------------------------------------------------------------
# Manifolds
# ---------------------------------------------------------------------------


def flat_cartesian(bound: float = 1e6) -> ChartManifold:
    def distance(x, y):
        return float(np.linalg.norm(np.asarray(y) - np.asarray(x)))

    return ChartManifold(
        name="flat2d-cartesian",
        dim=2,
        metric_fn=lambda x: np.eye(2),
        domain_predicate=lambda x: bool(np.all(np.abs(x) < bound)),
        christoffel_fn=lambda x: np.zeros((2, 2, 2)),
        distance_fn=distance,
    )


def _polar_to_xy(x):
    return np.array([x[0] * math.cos(x[1]), x[0] * math.sin(x[1])])


def flat_polar(margin: float | None = None) -> ChartManifold:
    eps = config.pole_margin if margin is None else margin

    def metric(x):
        return np.diag([1.0, x[0] ** 2])

    def christoffel(x):
        G = np.zeros((2, 2, 2))
        G[0, 1, 1] = -x[0]
        G[1, 0, 1] = G[1, 1, 0] = 1.0 / x[0]
        return G

    def distance(x, y):
        return float(np.linalg.norm(_polar_to_xy(y) - _polar_to_xy(x)))

    return ChartManifold(
        name="flat2d-polar",
        dim=2,
        metric_fn=metric,
        domain_predicate=lambda x: bool(x[0] > eps and abs(x[1]) < math.pi - eps),
        christoffel_fn=christoffel,
        distance_fn=distance,
    )


def sphere_embed(x, radius: float = 1.0) -> np.ndarray:
    theta, phi = x
    return radius * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def sphere_coords(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    r = np.linalg.norm(q)
    return np.array([math.acos(max(-1.0, min(1.0, q[2] / r))), math.atan2(q[1], q[0])])


def sphere_frame(x, radius: float = 1.0) -> np.ndarray:
    """3x2 matrix whose columns are d/dtheta and d/dphi of the embedding."""
    theta, phi = x
    return radius * np.array(
        [
            [math.cos(theta) * math.cos(phi), -math.sin(theta) * math.sin(phi)],
            [math.cos(theta) * math.sin(phi), math.sin(theta) * math.cos(phi)],
            [-math.sin(theta), 0.0],
        ]
    )


def sphere(radius: float = 1.0, margin: float | None = None) -> ChartManifold:
    if radius <= 0:
        raise ConfigError(f"Sphere radius must be positive, got {radius}")
    eps = config.pole_margin if margin is None else margin
    r2 = radius**2

    def metric(x):
        return np.diag([r2, r2 * math.sin(x[0]) ** 2])

    def christoffel(x):
        s, c = math.sin(x[0]), math.cos(x[0])
        G = np.zeros((2, 2, 2))
        G[0, 1, 1] = -s * c
        G[1, 0, 1] = G[1, 1, 0] = c / s
        return G

    def distance(x, y):
        p, q = sphere_embed(x), sphere_embed(y)
        return radius * math.atan2(float(np.linalg.norm(np.cross(p, q))), float(p @ q))

    return ChartManifold(
        name="sphere" if radius == 1.0 else "scaled-sphere",
        dim=2,
        metric_fn=metric,
        domain_predicate=lambda x: bool(eps <= x[0] <= math.pi - eps and abs(x[1]) < math.pi - eps),
        christoffel_fn=christoffel,
        distance_fn=distance,
        params=(radius,),
    )


def graph_surface(a: float = 1.0, b: float = 0.0, c: float = 1.0, bound: float = 10.0) -> ChartManifold:
    """Surface z = (a x^2 + 2 b x y + c y^2) / 2 with the induced metric."""
    H = np.array([[a, b], [b, c]], dtype=float)

    def metric(x):
        dh = H @ x
        return np.eye(2) + np.outer(dh, dh)

    def christoffel(x):
        dh = H @ x
        return np.einsum("l,mn->lmn", dh, H) / (1.0 + dh @ dh)

    return ChartManifold(
        name="graph",
        dim=2,
        metric_fn=metric,
        domain_predicate=lambda x: bool(np.all(np.abs(x) <= bound)),
        christoffel_fn=christoffel,
        params=(a, b, c),
    )


MANIFOLDS = {
    "flat2d-cartesian": lambda params: flat_cartesian(),
    "flat2d-polar": lambda params: flat_polar(),
    "sphere": lambda params: sphere(1.0),
    "scaled-sphere": lambda params: sphere(float(params[0]) if params else 1.0),
    "graph": lambda params: graph_surface(*[float(p) for p in params]),
}


def make_manifold(name: str, params=None) -> ChartManifold:
    if name not in MANIFOLDS:
        raise ConfigError(f"Unknown manifold preset '{name}'. Available: {', '.join(MANIFOLDS)}")
    try:
        return MANIFOLDS[name](list(params or []))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Bad parameters {params} for manifold '{name}': {e}") from e


# ---------------------------------------------------------------------------
# Chart transitions
# ---------------------------------------------------------------------------


def identity_transition(m: ChartManifold) -> ChartTransition:
    return ChartTransition(
        name="identity",
        source=m,
        target=m,
        forward=lambda x: np.array(x, dtype=float),
        jacobian=lambda x: np.eye(m.dim),
        inverse=lambda x: np.array(x, dtype=float),
    )


def polar_to_cartesian() -> ChartTransition:
    def jacobian(x):
        rho, psi = x
        return np.array([[math.cos(psi), -rho * math.sin(psi)], [math.sin(psi), rho * math.cos(psi)]])

    def inverse(y):
        return np.array([math.hypot(y[0], y[1]), math.atan2(y[1], y[0])])

    return ChartTransition(
        name="polar-to-cartesian",
        source=flat_polar(),
        target=flat_cartesian(),
        forward=_polar_to_xy,
        jacobian=jacobian,
        inverse=inverse,
    )


def _rotation_2d(alpha: float) -> np.ndarray:
    return np.array([[math.cos(alpha), -math.sin(alpha)], [math.sin(alpha), math.cos(alpha)]])


def cartesian_rotation(alpha: float) -> ChartTransition:
    R = _rotation_2d(alpha)
    m = flat_cartesian()
    return ChartTransition(
        name="rotation",
        source=m,
        target=m,
        forward=lambda x: R @ np.asarray(x, dtype=float),
        jacobian=lambda x: R.copy(),
        inverse=lambda y: R.T @ np.asarray(y, dtype=float),
    )


def _rotation_x(beta: float) -> np.ndarray:
    c, s = math.cos(beta), math.sin(beta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def sphere_rotation(beta: float, m: ChartManifold | None = None) -> ChartTransition:
    """Spherical chart of the sphere rotated about the x-axis by beta."""
    m = m or sphere()
    Rx = _rotation_x(beta)

    def forward(x):
        return sphere_coords(Rx @ sphere_embed(x))

    def jacobian(x):
        x_new = forward(x)
        theta_n, phi_n = x_new
        e_theta = np.array([math.cos(theta_n) * math.cos(phi_n), math.cos(theta_n) * math.sin(phi_n), -math.sin(theta_n)])
        e_phi = np.array([-math.sin(phi_n), math.cos(phi_n), 0.0])
        dual = np.vstack([e_theta, e_phi / math.sin(theta_n)])
        return dual @ Rx @ sphere_frame(x)

    def inverse(y):
        return sphere_coords(Rx.T @ sphere_embed(y))

    return ChartTransition(name="sphere-rotation", source=m, target=m, forward=forward, jacobian=jacobian, inverse=inverse)


def make_transition(name: str, params, m: ChartManifold) -> ChartTransition:
    params = list(params or [])
    if name == "identity":
        return identity_transition(m)
    if name == "polar-to-cartesian":
        ct = polar_to_cartesian()
    elif name == "rotation":
        ct = cartesian_rotation(float(params[0]) if params else math.pi / 2)
    elif name == "sphere-rotation":
        if not m.name.endswith("sphere"):
            raise ConfigError("Transition 'sphere-rotation' needs a sphere manifold")
        return sphere_rotation(float(params[0]) if params else 0.5, m)
    else:
        raise ConfigError(f"Unknown chart transition '{name}'")
    if ct.source.name != m.name:
        raise ConfigError(f"Transition '{name}' starts from {ct.source.name}, not {m.name}")
    return ct


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


def spherical_triangle_loop(alpha: float, apex: float, steps: int | None = None) -> Path:
    """Equator leg of longitude alpha, up to theta=apex, across and back down.

    Encloses area alpha*cos(apex) on the unit sphere.
    """
    h = math.pi / 2
    return polyline_path([[h, 0.0], [h, alpha], [apex, alpha], [apex, 0.0], [h, 0.0]], steps)


def spherical_lune_loop(alpha: float, apex: float, steps: int | None = None) -> Path:
    """Lune between longitudes 0 and alpha, cut off at theta=apex and pi-apex.

    Encloses area 2*alpha*cos(apex) on the unit sphere.
    """
    h = math.pi / 2
    return polyline_path(
        [[h, 0.0], [math.pi - apex, 0.0], [math.pi - apex, alpha], [apex, alpha], [apex, 0.0], [h, 0.0]],
        steps,
    )


def predicted_holonomy(kind: str, alpha: float, apex: float) -> float:
    if kind == "triangle":
        return alpha * math.cos(apex)
    if kind == "lune":
        return 2.0 * alpha * math.cos(apex)
    raise ConfigError(f"No closed-form holonomy for loop kind '{kind}'")


def equator_and_detour(longitude: float, apex: float) -> tuple[list, list]:
    """Two polylines from (pi/2, 0) to (pi/2, longitude): along the equator, and via theta=apex."""
    h = math.pi / 2
    direct = [[h, 0.0], [h, longitude]]
    detour = [[h, 0.0], [apex, 0.0], [apex, longitude], [h, longitude]]
    return direct, detour


def sphere_analytic_exp(x, v, radius: float = 1.0) -> np.ndarray:
    """Great-circle closed form of exp_x(v) on a sphere of the given radius."""
    p = sphere_embed(x)
    w = sphere_frame(x, radius) @ np.asarray(v, dtype=float)
    speed = float(np.linalg.norm(w))
    if speed == 0.0:
        return np.array(x, dtype=float)
    angle = speed / radius
    q = math.cos(angle) * p + math.sin(angle) * w / speed
    return sphere_coords(q)
