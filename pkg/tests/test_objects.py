import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigmaspace import core
from sigmaspace.core import GeometrySpec
from sigmaspace.objects import (
    Grid,
    PointCloud,
    estimate_dimension,
    scan_segment,
    scan_straight,
    segment_residual,
    straight_residual,
)

E2, E3 = GeometrySpec.euclidean(2), GeometrySpec.euclidean(3)


def chord_distance(points, P0, P1):
    """Distance of each point to the parametric segment P0 + t (P1 - P0)."""
    d = P1 - P0
    t = np.clip((points - P0) @ d / (d @ d), 0, 1)
    return np.linalg.norm(points - (P0 + t[:, None] * d), axis=-1)


def test_segment_residual_examples():
    assert segment_residual(E2, (0, 0), (1, 0), (0.5, 0)) == pytest.approx(0, abs=1e-15)
    assert segment_residual(E2, (0, 0), (1, 0), (0.5, 0.1)) == pytest.approx(2 * math.sqrt(0.26) - 1)
    assert segment_residual(E2, (0, 0), (1, 0), (0, 0)) == 0


def test_segment_residual_negative_sigma():
    with pytest.raises(core.DomainError):
        segment_residual(GeometrySpec.minkowski(2), (0, 0), (1, 0), (0, 3))


@settings(max_examples=100)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_endpoints_belong_to_segment(x):
    P0, P1 = np.array(x[:2]), np.array(x[2:])
    assert abs(segment_residual(E2, P0, P1, P0)) <= 1e-12
    assert abs(segment_residual(E2, P0, P1, P1)) <= 1e-12


def test_endpoints_belong_to_segment_deformed():
    g = GeometrySpec.deformed_minkowski(2, 0.05)
    P0, P1 = np.array([0.0, 0.1]), np.array([2.0, 0.5])
    assert segment_residual(g, P0, P1, P0) == pytest.approx(0, abs=1e-12)
    assert segment_residual(g, P0, P1, P1) == pytest.approx(0, abs=1e-12)


def test_scan_segment_euclidean_2d():
    P0, P1 = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    grid = Grid((-0.5, -0.5), (1.5, 0.5), 201)
    cloud = scan_segment(E2, P0, P1, grid)
    assert len(cloud) > 50
    assert np.all(np.abs(cloud.residuals) <= cloud.meta["accept_tol"])
    assert chord_distance(cloud.points, P0, P1).max() <= 1e-6
    # the cloud spans the whole chord
    assert cloud.points[:, 0].min() <= grid.resolution
    assert cloud.points[:, 0].max() >= 1 - grid.resolution
    assert estimate_dimension(cloud) <= 1.2


def test_scan_segment_euclidean_3d():
    P0, P1 = np.array([0.0, 0.1, -0.2]), np.array([0.8, 0.5, 0.3])
    cloud = scan_segment(E3, P0, P1, Grid.around([P0, P1], pad=0.3, n=41))
    assert chord_distance(cloud.points, P0, P1).max() <= 2 * Grid.around([P0, P1], pad=0.3, n=41).resolution
    assert estimate_dimension(cloud) <= 1.2


def test_scan_segment_degenerate():
    cloud = scan_segment(E2, (0.3, 0.3), (0.3, 0.3))
    np.testing.assert_array_equal(cloud.points, [[0.3, 0.3]])


def deformed_midtime_halfwidth(d, n=201):
    g = GeometrySpec.deformed_minkowski(2, d)
    grid = Grid((-0.2, -1.0), (2.2, 1.0), n)
    cloud = scan_segment(g, (0, 0), (2, 0), grid)
    mid = np.abs(cloud.points[:, 0] - 1.0) <= grid.resolution
    return (np.abs(cloud.points[mid, 1]).max() if mid.any() else 0.0), cloud, grid


def test_deformed_segment_is_wider_than_a_line():
    w, cloud, grid = deformed_midtime_halfwidth(0.02)
    assert w > 2 * grid.resolution
    # mid-time closed form: 2 sqrt(1 - x^2 + 2d) = sqrt(4 + 2d)  =>  x^2 = 1.5 d
    assert w == pytest.approx(math.sqrt(1.5 * 0.02), abs=2 * grid.resolution)
    assert cloud.points[:, 1].min() < -grid.resolution < grid.resolution < cloud.points[:, 1].max()


def test_deformed_tube_width_grows_with_d():
    widths = [deformed_midtime_halfwidth(d)[0] for d in (0.0, 0.01, 0.05, 0.1)]
    assert widths[0] <= 1e-6
    assert all(a < b for a, b in zip(widths, widths[1:]))


def test_straight_residual_examples():
    args = (E2, (0, 0), (1, 0), (0, 1))
    assert straight_residual(*args, (3, 1)) == pytest.approx(0, abs=1e-12)
    # dot-product oracle: (v.w)^2 - |v|^2 |w|^2 with v = (1, 0), w = (0, 1)
    assert straight_residual(*args, (0, 2)) == pytest.approx(-1.0)
    assert straight_residual(*args, (0, 1)) == 0


def test_straight_residual_indefinite_is_real():
    g = GeometrySpec.minkowski(2)
    val = straight_residual(g, (0, 0), (0, 1), (0, 0), (1, 3))
    assert np.isfinite(val)


def test_scan_straight_euclidean_is_parallel_line():
    P0, P1, Q0 = np.array([0.0, 0.0]), np.array([1.0, 0.5]), np.array([0.0, 1.0])
    grid = Grid((-1, -1), (2, 2), 151)
    cloud = scan_straight(E2, P0, P1, Q0, grid)
    d = (P1 - P0) / np.linalg.norm(P1 - P0)
    off = cloud.points - Q0
    dist = np.abs(off[:, 0] * d[1] - off[:, 1] * d[0])
    assert dist.max() <= 2 * grid.resolution
    assert estimate_dimension(cloud) <= 1.2


def test_scan_straight_zero_generator_accepts_whole_grid():
    grid = Grid((-1, -1), (1, 1), 11)
    cloud = scan_straight(E2, (0.2, 0.2), (0.2, 0.2), (0, 0), grid)
    assert len(cloud) == 121


def test_scan_straight_deformed_has_dimension_above_one():
    g = GeometrySpec.deformed_minkowski(3, 0.02)
    P0, P1 = np.zeros(3), np.array([1.0, 0, 0])
    grid = Grid((-0.5, -1, -1), (2.5, 1, 1), 41)
    cloud = scan_straight(g, P0, P1, P0, grid)
    assert estimate_dimension(cloud) > 1.2


def test_segment_points_lie_on_straight():
    P0, P1 = np.array([0.0, 0.0]), np.array([1.0, 1.0])
    cloud = scan_segment(E2, P0, P1, Grid.around([P0, P1], n=81))
    res = straight_residual(E2, P0, P1, P0, cloud.points)
    assert np.max(np.abs(res)) <= 1e-6


def test_straight_residual_matches_factorization_lhs():
    rng = np.random.default_rng(0)
    for P0, P1, R in rng.normal(size=(50, 3, 2)):
        fc = core.factorization_check_points(E2, P0, P1, R)
        assert straight_residual(E2, P0, P1, P0, R) == pytest.approx(fc.lhs, abs=1e-12)


def test_estimate_dimension_synthetic():
    rng = np.random.default_rng(1)
    t = rng.random(500)
    line = np.column_stack([t, 2 * t, -t])
    assert estimate_dimension(line) == pytest.approx(1.0, abs=0.2)
    v = rng.normal(size=(2000, 3))
    sphere = v / np.linalg.norm(v, axis=-1, keepdims=True)
    assert estimate_dimension(sphere) == pytest.approx(2.0, abs=0.2)
    with pytest.raises(ValueError):
        estimate_dimension(np.zeros((1, 3)))


def test_cloud_csv_and_json():
    cloud = scan_segment(E2, (0, 0), (1, 0), Grid((-0.5, -0.5), (1.5, 0.5), 21))
    lines = cloud.to_csv().splitlines()
    assert lines[0] == "x1,x2,residual"
    assert len(lines) == len(cloud) + 1
    np.testing.assert_array_equal(np.loadtxt(lines[1:], delimiter=",")[:, :2], cloud.points)
    again = PointCloud.from_dict(cloud.to_dict())
    np.testing.assert_array_equal(again.points, cloud.points)


def test_scan_is_deterministic_and_sorted():
    a = scan_segment(E2, (0, 0), (1, 1), Grid.around([(0, 0), (1, 1)], n=61))
    b = scan_segment(E2, (0, 0), (1, 1), Grid.around([(0, 0), (1, 1)], n=61))
    np.testing.assert_array_equal(a.points, b.points)
    order = np.lexsort(a.points.T[::-1])
    np.testing.assert_array_equal(order, np.arange(len(a)))
