import math

import numpy as np
import pytest

from covconv.errors import DomainError, DomainExitError, NumericalError
from covconv.geometry import (
    ChartManifold,
    Path,
    TangentVec,
    check_metric,
    christoffel_at,
    exp_map,
    fd_christoffel_at,
    geodesic_integrate,
    holonomy_angle,
    inner,
    log_map,
    metric_at,
    metric_norm,
    orthonormal_frame,
    parallel_transport,
    polyline_path,
    rotation_angle,
    straight_path,
    transition_jacobian,
    transition_point,
    transport_matrix,
    transport_vector,
    volume_density,
)
from covconv.presets import (
    flat_cartesian,
    flat_polar,
    graph_surface,
    polar_to_cartesian,
    sphere,
    spherical_triangle_loop,
)
from covconv.tensors import COVECTOR, VECTOR, TensorRank, TensorValue

HALF_PI = math.pi / 2


@pytest.fixture
def unit_sphere():
    return sphere()


@pytest.fixture
def plane():
    return flat_cartesian()


# -------------------------
# Metric
# -------------------------


def test_sphere_metric(unit_sphere):
    g = metric_at(unit_sphere, [1.0, 0.2])

    assert np.allclose(g, np.diag([1.0, math.sin(1.0) ** 2]))
    assert volume_density(unit_sphere, [1.0, 0.2]) == pytest.approx(math.sin(1.0))


def test_point_outside_chart(unit_sphere):
    with pytest.raises(DomainError):
        metric_at(unit_sphere, [0.0, 0.0])


def test_indefinite_metric_rejected():
    m = ChartManifold("bad", 2, lambda x: np.diag([1.0, -1.0]), lambda x: True)

    with pytest.raises(NumericalError):
        check_metric(m, [0.0, 0.0])


def test_orthonormal_frame(unit_sphere):
    x = [0.8, 0.1]
    E = orthonormal_frame(unit_sphere, x)

    assert np.allclose(E.T @ metric_at(unit_sphere, x) @ E, np.eye(2))


def test_inner_and_norm(unit_sphere):
    x = [HALF_PI, 0.0]

    assert inner(unit_sphere, x, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
    assert metric_norm(unit_sphere, x, [3.0, 4.0]) == pytest.approx(5.0)


# -------------------------
# Christoffel symbols
# -------------------------


def test_flat_christoffels_vanish(plane):
    assert not np.any(christoffel_at(plane, [0.3, -2.0]).values)


def test_fd_christoffels_match_sphere(unit_sphere):
    x = [1.1, 0.4]

    fd = fd_christoffel_at(unit_sphere, x).values
    exact = christoffel_at(unit_sphere, x).values

    assert np.allclose(fd, exact, atol=1e-6)


def test_fd_christoffels_match_graph():
    m = graph_surface(1.0, 0.5, 2.0)
    x = [0.3, -0.2]

    assert np.allclose(fd_christoffel_at(m, x).values, christoffel_at(m, x).values, atol=1e-6)


def test_fd_christoffels_symmetric_in_lower_indices():
    m = graph_surface(1.0, 0.5, 2.0)
    gamma = fd_christoffel_at(m, [0.7, 0.1]).values

    assert np.allclose(gamma, gamma.transpose(0, 2, 1))


def test_fd_christoffels_near_boundary():
    m = flat_polar(margin=1e-3)

    with pytest.raises(DomainError):
        fd_christoffel_at(m, [1.000001e-3, 0.0])


def test_polar_metric_and_christoffels():
    m = flat_polar()
    x = [2.0, 1.0]

    gamma = christoffel_at(m, x)

    assert np.allclose(metric_at(m, x), np.diag([1.0, 4.0]))
    assert volume_density(m, x) == pytest.approx(2.0)
    assert gamma[0, 1, 1] == pytest.approx(-2.0)
    assert gamma[1, 0, 1] == pytest.approx(0.5)
    assert gamma[1, 1, 0] == pytest.approx(0.5)
    assert np.allclose(fd_christoffel_at(m, x).values, gamma.values, atol=1e-6)


# -------------------------
# Geodesics
# -------------------------


def test_flat_exp_is_translation(plane):
    assert np.allclose(exp_map(plane, [1.0, 2.0], [0.5, -0.25]), [1.5, 1.75], atol=1e-12)


def test_zero_velocity(unit_sphere):
    assert np.array_equal(exp_map(unit_sphere, [1.0, 0.5], [0.0, 0.0]), [1.0, 0.5])


def test_equator_geodesic(unit_sphere):
    end = exp_map(unit_sphere, [HALF_PI, 0.0], [0.0, HALF_PI], n_steps=200)

    assert np.allclose(end, [HALF_PI, HALF_PI], atol=1e-8)


def test_geodesic_carries_velocities(unit_sphere):
    path = geodesic_integrate(unit_sphere, TangentVec([1.2, 0.0], [0.1, 0.5]), n_steps=50)

    assert path.velocities.shape == path.samples.shape
    speeds = [metric_norm(unit_sphere, x, u) for x, u in zip(path.samples, path.velocities)]
    assert max(speeds) - min(speeds) < 1e-8


def test_geodesic_leaves_chart():
    m = flat_polar()

    with pytest.raises(DomainExitError) as exc:
        geodesic_integrate(m, TangentVec([1.0, 0.0], [-2.0, 0.0]), n_steps=100)

    assert exc.value.last_valid is not None
    assert exc.value.last_valid[0] > 0


def test_log_inverts_exp(unit_sphere):
    x = [1.2, -0.3]
    v = np.array([0.3, 0.4])

    y = exp_map(unit_sphere, x, v)

    assert np.allclose(log_map(unit_sphere, x, y), v, atol=1e-6)


# -------------------------
# Paths
# -------------------------


def test_path_params_validated():
    with pytest.raises(ValueError):
        Path([[0.0, 0.0], [1.0, 0.0]], [0.1, 1.0])


def test_path_reversed():
    path = straight_path([0.0, 0.0], [1.0, 2.0], 10)
    back = path.reversed()

    assert np.array_equal(back.start, path.end)
    assert np.array_equal(back.end, path.start)


def test_polyline_corners():
    path = polyline_path([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], 4)

    assert path.samples.shape == (9, 2)
    assert np.allclose(path.samples[4], [1.0, 0.0])


# -------------------------
# Parallel transport
# -------------------------


def test_flat_transport_is_identity(plane):
    path = polyline_path([[0.0, 0.0], [2.0, 1.0], [-1.0, 3.0]], 20)

    assert np.array_equal(transport_vector(plane, path, [0.3, 0.7]), [0.3, 0.7])


def test_transport_along_equator(unit_sphere):
    path = straight_path([HALF_PI, 0.0], [HALF_PI, 1.0], 50)

    assert np.allclose(transport_vector(unit_sphere, path, [1.0, 0.0]), [1.0, 0.0], atol=1e-12)


def test_transport_preserves_inner_products(unit_sphere):
    path = polyline_path([[1.2, -0.5], [0.9, 0.4], [1.6, 1.0]], 100)
    u, w = np.array([1.0, 0.5]), np.array([-0.2, 1.5])

    P = transport_matrix(unit_sphere, path)

    before = inner(unit_sphere, path.start, u, w)
    after = inner(unit_sphere, path.end, P @ u, P @ w)
    assert after == pytest.approx(before, abs=1e-8)


def test_transported_pairing_constant(unit_sphere):
    path = polyline_path([[1.2, -0.5], [0.9, 0.4], [1.6, 1.0]], 100)
    v = TensorValue(VECTOR, path.start, [0.4, 1.1])
    w = TensorValue(COVECTOR, path.start, [2.0, -0.3])

    before = w.components @ v.components
    after = parallel_transport(unit_sphere, path, w).components @ parallel_transport(unit_sphere, path, v).components

    assert after == pytest.approx(before, abs=1e-8)


def test_transport_rejects_wrong_base(unit_sphere):
    path = straight_path([1.0, 0.0], [1.0, 1.0], 10)

    with pytest.raises(DomainError):
        parallel_transport(unit_sphere, path, TensorValue(VECTOR, [1.2, 0.0], [1.0, 0.0]))


def test_polar_quarter_circle():
    m = flat_polar()
    path = straight_path([1.0, 0.0], [1.0, HALF_PI], 200)

    assert np.allclose(transport_vector(m, path, [1.0, 0.0]), [0.0, -1.0], atol=1e-9)


def test_transport_there_and_back(unit_sphere):
    path = polyline_path([[1.2, -0.5], [0.9, 0.4], [1.6, 1.0]], 200)
    T = TensorValue(TensorRank(1, 1), path.start, [[1.0, -0.3], [0.7, 2.0]])

    there = parallel_transport(unit_sphere, path, T)
    back = parallel_transport(unit_sphere, path.reversed(), there)

    assert np.allclose(back.base, T.base)
    assert np.allclose(back.components, T.components, atol=1e-9)


def test_transport_commutes_with_chart_change():
    polar = flat_polar()
    ct = polar_to_cartesian()
    path = straight_path([1.0, 0.2], [2.0, 1.0], 400)
    mapped = Path(np.array([transition_point(ct, s) for s in path.samples]), path.params)
    v = np.array([0.5, -0.8])

    moved_polar = transport_vector(polar, path, v)
    moved_cartesian = transport_vector(ct.target, mapped, transition_jacobian(ct, path.start) @ v)

    assert np.allclose(transition_jacobian(ct, path.end) @ moved_polar, moved_cartesian, atol=1e-8)


def test_triangle_holonomy(unit_sphere):
    loop = spherical_triangle_loop(HALF_PI, 0.3, 400)

    angle = holonomy_angle(unit_sphere, loop)

    assert angle == pytest.approx(HALF_PI * math.cos(0.3), abs=1e-5)
    assert holonomy_angle(unit_sphere, loop.reversed()) == pytest.approx(-angle, abs=1e-5)


def test_holonomy_needs_closed_loop(unit_sphere):
    with pytest.raises(DomainError):
        holonomy_angle(unit_sphere, straight_path([1.0, 0.0], [1.0, 1.0], 10))


def test_rotation_angle_of_identity(unit_sphere):
    assert rotation_angle(unit_sphere, [1.0, 0.0], np.eye(2)) == pytest.approx(0.0)
