import numpy as np
import pytest

from sigmaspace import core
from sigmaspace.core import GeometrySpec
from sigmaspace.euclidicity import (
    Basis,
    CoordinateGrid,
    EuclidicityReport,
    check_condition_I,
    check_condition_II,
    check_condition_III,
    coordinates,
    euclidicity_report,
    find_basis,
)

E2, E3 = GeometrySpec.euclidean(2), GeometrySpec.euclidean(3)
POINCARE = GeometrySpec.riemannian_chart("poincare_disk", method="exact")


def orthonormal_basis(dim):
    origin = np.zeros(dim)
    pts = np.eye(dim)
    g = core.gram_matrix(GeometrySpec.euclidean(dim), origin, pts)
    return Basis(origin, pts, g, np.linalg.inv(g), 1.0, 1.0)


def test_find_basis_euclidean():
    b = find_basis(E3, 3)
    assert b is not None and b.gram_det > 0
    np.testing.assert_allclose(b.g @ b.g_inv, np.eye(3), atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_find_basis_fails_above_dimension(seed):
    assert find_basis(E2, 3, seed=seed) is None
    assert find_basis(E3, 4, seed=seed) is None


def test_find_basis_deformed_timelike():
    g = GeometrySpec.deformed_minkowski(4, 0.1)
    b = find_basis(g, 4)
    assert b is not None
    s = core.sigma(g, b.origin, b.points)
    assert np.all(s > 0)


def test_find_basis_rejects_bad_n():
    with pytest.raises(ValueError):
        find_basis(E2, 0)


def test_coordinates_examples():
    b = orthonormal_basis(2)
    np.testing.assert_allclose(coordinates(E2, b, (0.3, 0.7)), (0.3, 0.7), atol=1e-15)
    np.testing.assert_allclose(coordinates(E2, b, b.origin), 0.0, atol=0)
    b = find_basis(E3, 3, seed=3)
    for k in range(3):
        np.testing.assert_allclose(coordinates(E3, b, b.points[k]), b.g[k], atol=1e-12)


def test_coordinates_are_linear_in_euclidean():
    rng = np.random.default_rng(0)
    b = find_basis(E3, 3, seed=1)
    P, Q = rng.uniform(-5, 5, (2, 200, 3))
    mid = coordinates(E3, b, 0.5 * (P + Q))
    avg = 0.5 * (coordinates(E3, b, P) + coordinates(E3, b, Q))
    assert np.max(np.abs(mid - avg)) <= 1e-9


def test_condition_I():
    assert check_condition_I(E3, 3, 500).passed
    r = check_condition_I(POINCARE, 2, 500)
    assert r.passed is False and r.witness is not None and len(r.witness["tuple"]) == 4
    r = check_condition_I(GeometrySpec.deformed_minkowski(4, 0.1), 4, 500)
    assert r.passed is False


def test_condition_II():
    r = check_condition_II(E3, find_basis(E3, 3), 500)
    assert r.passed and r.worst_residual <= 1e-9
    assert check_condition_II(POINCARE, find_basis(POINCARE, 2), 500).passed is False
    g = GeometrySpec.deformed_minkowski(2, 0.1)
    assert check_condition_II(g, find_basis(g, 2), 500).passed is False


@pytest.mark.parametrize("seed", range(5))
def test_condition_II_independent_of_basis(seed):
    b = find_basis(E3, 3, seed=seed)
    assert check_condition_II(E3, b, 300, seed=seed).worst_residual <= 1e-9


def test_condition_III_euclidean_unique():
    r = check_condition_III(E2, find_basis(E2, 2), CoordinateGrid(-1, 1, 0.25))
    assert r.passed is True and r.samples == 81


def test_condition_III_deformed_has_several_preimages():
    g = GeometrySpec.deformed_minkowski(2, 0.1)
    b = find_basis(g, 2)
    r = check_condition_III(g, b)
    assert r.passed is False
    t = np.array(r.witness["target"])
    P, Q = (np.array(x) for x in r.witness["preimages"])
    assert np.max(np.abs(P - Q)) > 1e-3
    # both are genuine preimages
    np.testing.assert_allclose(coordinates(g, b, P), t, atol=1e-8)
    np.testing.assert_allclose(coordinates(g, b, Q), t, atol=1e-8)


def test_condition_III_empty_grid_inconclusive():
    r = check_condition_III(E2, find_basis(E2, 2), CoordinateGrid(1, -1))
    assert r.passed is None


def test_reports():
    assert euclidicity_report(E2).verdict == "euclidean"
    assert euclidicity_report(E3).verdict == "euclidean"
    assert euclidicity_report(POINCARE).verdict == "not_euclidean"
    assert euclidicity_report(GeometrySpec.deformed_minkowski(2, 0.1)).verdict == "not_euclidean"
    r = euclidicity_report(E2, n=3)
    assert r.verdict == "not_euclidean" and r.basis is None


def test_report_deterministic_and_round_trips():
    a = euclidicity_report(POINCARE, seed=4)
    b = euclidicity_report(POINCARE, seed=4)
    assert a.to_json() == b.to_json()
    again = EuclidicityReport.from_dict(a.to_dict())
    assert again.to_json() == a.to_json()
