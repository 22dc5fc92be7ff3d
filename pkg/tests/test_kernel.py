import math

import numpy as np
import pytest

from covconv.errors import ConfigError, DomainError, RankMismatchError
from covconv.geometry import metric_norm, polyline_path, straight_path
from covconv.kernel import (
    SharedKernel,
    build_quadrature,
    coordinate_ball_volume,
    kernel_two_path_relation,
    load_kernel_csv,
    make_kernel,
    save_kernel_csv,
    share_kernel,
    sharing_path,
    transform_kernel,
)
from covconv.presets import equator_and_detour, flat_cartesian, flat_polar, identity_transition, \
    polar_to_cartesian, sphere
from covconv.tensors import COVECTOR, SCALAR, VECTOR

HALF_PI = math.pi / 2


@pytest.fixture
def plane():
    return flat_cartesian()


@pytest.fixture
def unit_sphere():
    return sphere()


# -------------------------
# Quadrature
# -------------------------


def test_unit_disk_area(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 1.0, 4, 16)

    assert quad.weights.sum() == pytest.approx(math.pi, abs=1e-10)


def test_weights_match_coordinate_ball(unit_sphere):
    quad = build_quadrature(unit_sphere, [1.0, 0.3], 0.4, 3, 12)

    assert quad.weights.sum() == pytest.approx(coordinate_ball_volume(unit_sphere, quad), abs=1e-10)
    assert quad.weights.sum() == pytest.approx(math.pi * 0.16 / math.sin(1.0), abs=1e-10)


def test_nodes_inside_metric_ball(unit_sphere):
    x = [0.9, 0.0]
    quad = build_quadrature(unit_sphere, x, 0.4, 3, 12)

    assert all(metric_norm(unit_sphere, x, v) < 0.4 for v in quad.nodes)
    assert np.all(quad.weights > 0)


def test_odd_integrand_vanishes(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 1.0, 4, 16)

    assert abs(quad.weights @ quad.nodes[:, 0]) < 1e-12


@pytest.mark.parametrize("r, n_r, n_ang", [(0.0, 2, 4), (1.0, 0, 4), (1.0, 2, -1)])
def test_bad_quadrature_settings(plane, r, n_r, n_ang):
    with pytest.raises(ValueError):
        build_quadrature(plane, [0.0, 0.0], r, n_r, n_ang)


# -------------------------
# Kernel families
# -------------------------


def test_kernel_families(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 1.0, 2, 4)

    assert make_kernel("radial-scalar", {}, plane, [0.0, 0.0], quad).coeff_rank == SCALAR
    assert make_kernel("linear-covector", {}, plane, [0.0, 0.0], quad).coeff_rank == COVECTOR
    assert make_kernel("radial-vector", {}, plane, [0.0, 0.0], quad).rank_out == VECTOR
    assert make_kernel("zero", {"rank_in": [1, 0], "rank_out": [1, 0]}, plane, [0.0, 0.0], quad).coeffs.shape == (
        8,
        2,
        2,
    )


def test_unknown_family(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 1.0, 2, 4)

    with pytest.raises(ConfigError):
        make_kernel("gabor", {}, plane, [0.0, 0.0], quad)


def test_coefficient_shape_checked(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 1.0, 2, 4)

    with pytest.raises(RankMismatchError):
        SharedKernel(quad.base, VECTOR, SCALAR, quad, np.zeros(quad.size))


# -------------------------
# Weight sharing
# -------------------------


def test_flat_sharing_keeps_nodes(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 8)
    k = make_kernel("linear-covector", {}, plane, [0.0, 0.0], quad)

    shared = share_kernel(plane, k, polyline_path([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]], 10))

    assert np.array_equal(shared.quad.nodes, k.quad.nodes)
    assert np.array_equal(shared.coeffs, k.coeffs)
    assert np.allclose(shared.ref_point, [3.0, -1.0])


def test_zero_length_path(unit_sphere):
    x = [1.0, 0.2]
    quad = build_quadrature(unit_sphere, x, 0.3, 2, 8)
    k = make_kernel("identity-vector", {}, unit_sphere, x, quad)

    shared = share_kernel(unit_sphere, k, straight_path(x, x, 10))

    assert np.array_equal(shared.quad.nodes, k.quad.nodes)
    assert np.array_equal(shared.coeffs, k.coeffs)
    assert np.allclose(shared.quad.weights, k.quad.weights)


def test_radial_kernel_stays_radial(unit_sphere):
    x = [HALF_PI, 0.0]
    quad = build_quadrature(unit_sphere, x, 0.3, 2, 8)
    k = make_kernel("radial-scalar", {}, unit_sphere, x, quad)
    path = straight_path(x, [1.0, 0.8], 100)

    shared = share_kernel(unit_sphere, k, path)

    norms = [metric_norm(unit_sphere, path.end, v) for v in shared.quad.nodes]
    assert np.allclose(shared.coeffs, norms, atol=1e-8)


def test_share_and_return(unit_sphere):
    x = [1.2, -0.2]
    quad = build_quadrature(unit_sphere, x, 0.3, 2, 8)
    k = make_kernel("linear-covector", {}, unit_sphere, x, quad)
    path = polyline_path([x, [0.9, 0.3], [1.4, 0.6]], 100)

    back = share_kernel(unit_sphere, share_kernel(unit_sphere, k, path), path.reversed())

    assert np.allclose(back.quad.nodes, k.quad.nodes, atol=1e-8)
    assert np.allclose(back.coeffs, k.coeffs, atol=1e-8)
    assert np.allclose(back.quad.weights, k.quad.weights, atol=1e-12)


def test_sharing_path_must_start_at_reference(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 4)
    k = make_kernel("radial-scalar", {}, plane, [0.0, 0.0], quad)

    with pytest.raises(DomainError):
        share_kernel(plane, k, straight_path([1.0, 0.0], [2.0, 0.0], 5))


def test_sharing_path_modes(unit_sphere):
    x, y = [HALF_PI, 0.0], [1.2, 0.5]

    segment = sharing_path(unit_sphere, x, y, "chart-segment", 20)
    geodesic = sharing_path(unit_sphere, x, y, "geodesic", 100)

    assert np.allclose(segment.end, y)
    assert np.allclose(geodesic.end, y, atol=1e-8)
    assert geodesic.velocities is not None


def test_sharing_path_bad_mode(plane):
    with pytest.raises(ConfigError):
        sharing_path(plane, [0.0, 0.0], [1.0, 0.0], "spiral")
    with pytest.raises(ConfigError):
        sharing_path(plane, [0.0, 0.0], [1.0, 0.0], "none")


# -------------------------
# Two-path relation
# -------------------------


def test_flat_two_paths(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 8)
    k = make_kernel("linear-covector", {}, plane, [0.0, 0.0], quad)

    rel = kernel_two_path_relation(
        plane, k, straight_path([0.0, 0.0], [1.0, 1.0], 10), polyline_path([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], 10)
    )

    assert rel.max_deviation <= 1e-10
    assert np.allclose(rel.holonomy, np.eye(2))


def test_identical_paths(unit_sphere):
    x = [1.2, 0.0]
    quad = build_quadrature(unit_sphere, x, 0.3, 2, 8)
    k = make_kernel("identity-vector", {}, unit_sphere, x, quad)
    path = straight_path(x, [1.0, 0.7], 50)

    rel = kernel_two_path_relation(unit_sphere, k, path, path)

    assert rel.max_deviation <= 1e-12
    assert rel.holonomy_angle == pytest.approx(0.0, abs=1e-12)


def test_sphere_two_paths_differ_by_holonomy(unit_sphere):
    apex = 0.3
    direct, detour = equator_and_detour(HALF_PI, apex)
    x = direct[0]
    quad = build_quadrature(unit_sphere, x, 0.3, 2, 8)
    k = make_kernel("linear-covector", {}, unit_sphere, x, quad)

    rel = kernel_two_path_relation(unit_sphere, k, polyline_path(direct, 300), polyline_path(detour, 300))

    assert rel.max_deviation < 1e-4
    assert rel.holonomy_angle == pytest.approx(HALF_PI * math.cos(apex), abs=1e-4)


def test_two_paths_need_common_end(plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 4)
    k = make_kernel("radial-scalar", {}, plane, [0.0, 0.0], quad)

    with pytest.raises(DomainError):
        kernel_two_path_relation(
            plane, k, straight_path([0.0, 0.0], [1.0, 0.0], 5), straight_path([0.0, 0.0], [0.0, 1.0], 5)
        )


# -------------------------
# Chart changes
# -------------------------


def test_identity_transform(unit_sphere):
    x = [1.0, 0.0]
    quad = build_quadrature(unit_sphere, x, 0.3, 2, 4)
    k = make_kernel("linear-covector", {}, unit_sphere, x, quad)

    same = transform_kernel(k, identity_transition(unit_sphere))

    assert np.allclose(same.quad.nodes, k.quad.nodes)
    assert np.allclose(same.coeffs, k.coeffs)


def test_polar_kernel_in_cartesian_chart():
    m = flat_polar()
    x = [2.0, 0.4]
    quad = build_quadrature(m, x, 0.5, 3, 8)
    k = make_kernel("linear-covector", {}, m, x, quad)

    moved = transform_kernel(k, polar_to_cartesian())

    assert moved.quad.weights.sum() == pytest.approx(math.pi * 0.25, abs=1e-10)
    # g_{nu mu} v^mu is the Euclidean v_nu once written in Cartesian components
    assert np.allclose(moved.coeffs, moved.quad.nodes, atol=1e-12)


# -------------------------
# CSV
# -------------------------


def test_kernel_csv(tmp_path, plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 4)
    k = make_kernel("linear-covector", {}, plane, [0.0, 0.0], quad)
    path = save_kernel_csv(k, tmp_path / "kernel.csv")

    loaded = load_kernel_csv(path, plane, quad, VECTOR, SCALAR)

    assert np.allclose(loaded.coeffs, k.coeffs)


def test_kernel_csv_missing_node(tmp_path, plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 4)
    k = make_kernel("linear-covector", {}, plane, [0.0, 0.0], quad)
    path = save_kernel_csv(k, tmp_path / "kernel.csv")

    other = build_quadrature(plane, [0.0, 0.0], 0.7, 2, 4)
    with pytest.raises(ConfigError):
        load_kernel_csv(path, plane, other, VECTOR, SCALAR)


def test_kernel_csv_wrong_rank(tmp_path, plane):
    quad = build_quadrature(plane, [0.0, 0.0], 0.5, 2, 4)
    path = save_kernel_csv(make_kernel("radial-scalar", {}, plane, [0.0, 0.0], quad), tmp_path / "kernel.csv")

    with pytest.raises(RankMismatchError):
        load_kernel_csv(path, plane, quad, VECTOR, VECTOR)
