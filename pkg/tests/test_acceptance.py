"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
import sympy as sp
from scipy.spatial.distance import directed_hausdorff

from oracles import deformed_equivalents, grid_equivalence_scan
from sigmaspace import core
from sigmaspace.chains import random_walk_slope, simulate_ensemble
from sigmaspace.core import GeometrySpec
from sigmaspace.euclidicity import euclidicity_report
from sigmaspace.multivariance import solve_equivalent, transitivity_probe
from sigmaspace.objects import Grid, estimate_dimension, scan_segment
from sigmaspace.riemann import Chart, eikonal_residual, punctured_sigma, sigma_R

UNIT = ((0.0, 0.0), (1.0, 0.0))


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line, then assert every named check."""

    def emit(number, title, checks: dict, detail: str = ""):
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        with capsys.disabled():
            line = f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}"
            if detail:
                line += f" | {detail}"
            if failed:
                line += f" | failed: {', '.join(failed)}"
            print(line)
        assert ok, failed

    return emit


def test_criterion_1_euclidicity_battery(verdict):
    t0 = time.perf_counter()
    good = {n: euclidicity_report(GeometrySpec.euclidean(n), samples=500) for n in (2, 3)}
    bad = {
        "poincare_disk": euclidicity_report(
            GeometrySpec.riemannian_chart("poincare_disk", method="exact"), samples=500),
        "deformed d=0.1": euclidicity_report(GeometrySpec.deformed_minkowski(2, 0.1), samples=500),
    }
    elapsed = time.perf_counter() - t0
    checks = {}
    for n, r in good.items():
        conds = (r.condition_I, r.condition_II, r.condition_III)
        checks[f"E{n} verdict"] = r.verdict == "euclidean"
        checks[f"E{n} residuals"] = max(c.worst_residual for c in conds[:2]) <= 1e-6
        checks[f"E{n} samples"] = r.condition_I.samples >= 500 and r.condition_II.samples >= 500
        checks[f"E{n} III"] = r.condition_III.passed is True
    for name, r in bad.items():
        failing = [c for c in (r.condition_I, r.condition_II, r.condition_III) if c.passed is False]
        checks[f"{name} rejected"] = r.verdict == "not_euclidean"
        checks[f"{name} witness"] = bool(failing) and all(c.witness for c in failing)
    checks["runtime < 30 s"] = elapsed < 30
    worst = max(max(c.worst_residual for c in (r.condition_I, r.condition_II)) for r in good.values())
    verdict(1, "euclidicity battery", checks, f"worst euclidean residual {worst:.2e}, {elapsed:.1f} s")


def test_criterion_2_dot_product_oracle(verdict):
    rng = np.random.default_rng(2024)
    checks, worst = {}, 0.0
    for dim in (2, 3):
        g = GeometrySpec.euclidean(dim)
        a, b, c, d = rng.uniform(-10, 10, (4, 1000, dim))
        got = core.scalar_product(g, (a, b), (c, d))
        want = np.einsum("mi,mi->m", b - a, d - c)
        scale = np.linalg.norm(b - a, axis=-1) * np.linalg.norm(d - c, axis=-1)
        err = float(np.max(np.abs(got - want) / scale))
        worst = max(worst, err)
        checks[f"E{dim} relative error"] = err <= 1e-12
    verdict(2, "scalar product vs dot product", checks, f"worst relative error {worst:.2e}")


def test_criterion_3_factorization_identity(verdict):
    x, y, z = sp.symbols("x y z", nonnegative=True)

    def symbolic(coefficient):
        lhs = (x**2 + y**2 - z**2) ** 2 - 4 * x**2 * y**2
        B = z**2 - y**2 - x**2 - coefficient * x * y
        return sp.expand(lhs - (y + z - x) * (x + z - y) * B)

    rng = np.random.default_rng(3)
    triples = rng.uniform(0, 4, (10_000, 3))
    worst = max(abs(core.factorization_check(*s).residual) for s in triples)
    witness = core.factorization_check(0.5, 0.5, 2.0, coefficient=4).residual
    oracle4 = float(symbolic(4).subs({x: sp.sqrt(0.5), y: sp.sqrt(0.5), z: sp.sqrt(2)}))
    checks = {
        "symbolic residual 0 for coefficient 2": symbolic(2) == 0,
        "10^4 triples <= 1e-10": worst <= 1e-10,
        "coefficient 4 witness > 0.1": abs(witness) > 0.1,
        "witness matches symbolic value": witness == pytest.approx(oracle4, abs=1e-12),
    }
    verdict(3, "factorization identity", checks,
            f"worst residual {worst:.2e}, coefficient-4 witness {witness:.3f}")


def test_criterion_4_segment_degenerates_to_chord(verdict):
    P0, P1 = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    grid = Grid((-0.5, -0.5), (1.5, 0.5), 400)
    t0 = time.perf_counter()
    cloud = scan_segment(GeometrySpec.euclidean(2), P0, P1, grid)
    dim = estimate_dimension(cloud)
    elapsed = time.perf_counter() - t0
    chord = P0 + np.linspace(0, 1, 20001)[:, None] * (P1 - P0)
    hd = max(directed_hausdorff(cloud.points, chord)[0], directed_hausdorff(chord, cloud.points)[0])
    checks = {
        "Hausdorff <= 2 resolution": hd <= 2 * grid.resolution,
        "dimension <= 1.2": dim <= 1.2,
        "runtime < 60 s": elapsed < 60,
    }
    verdict(4, "segment is one-dimensional", checks,
            f"{len(cloud)} points, Hausdorff {hd:.2e} vs {2 * grid.resolution:.2e}, "
            f"dimension {dim:.3f}, {elapsed:.1f} s")


def test_criterion_5_multivariance(verdict):
    checks, worst = {}, 0.0
    for d in (0.01, 0.02, 0.05):
        g = GeometrySpec.deformed_minkowski(2, d)
        s = solve_equivalent(g, UNIT, (1, 0))
        checks[f"d={d} two clusters"] = len(s.cluster_sizes) == 2 and len(s.solutions) == 2
        if len(s.solutions) == 2:
            err = float(np.max(np.abs(s.solutions - [1, 0] - deformed_equivalents(d))))
            worst = max(worst, err)
            checks[f"d={d} closed form 1e-6"] = err <= 1e-6
            # box edges on multiples of h keep the lattice symmetric in x
            found = grid_equivalence_scan(g, UNIT, (1, 0), (1.9, -0.6), (2.2, 0.6), h=1e-3)
            checks[f"d={d} grid scan"] = (len(found) == 2
                                          and np.max(np.abs(found - s.solutions)) <= 1e-3)
    e = solve_equivalent(GeometrySpec.euclidean(2), UNIT, (0, 1))
    checks["euclidean one cluster"] = len(e.cluster_sizes) == 1
    checks["euclidean translation 1e-8"] = np.max(np.abs(e.solutions - [1, 1])) <= 1e-8
    verdict(5, "multivariance of equivalent vectors", checks, f"worst closed-form error {worst:.2e}")


def _stereo(lat, lon):
    r = math.cos(lat) / (1 + math.sin(lat))
    return np.array([r * math.cos(lon), r * math.sin(lon)])


def test_criterion_6_riemannian_world_function(verdict):
    disk, sphere, flat = Chart("poincare_disk"), Chart("sphere_2d"), Chart("flat_patch")
    rng = np.random.default_rng(6)
    radial = 0.0
    for r, a in zip(rng.uniform(0.05, 0.9, 20), rng.uniform(0, 2 * math.pi, 20)):
        want = 0.5 * (2 * math.atanh(r)) ** 2
        got = sigma_R(disk, (0, 0), (r * math.cos(a), r * math.sin(a)))
        radial = max(radial, abs(got / want - 1))
    sph = 0.0
    for lat, lon in zip(rng.uniform(-1.2, 1.2, (10, 2)), rng.uniform(-math.pi, math.pi, (10, 2))):
        c = (math.sin(lat[0]) * math.sin(lat[1])
             + math.cos(lat[0]) * math.cos(lat[1]) * math.cos(lon[1] - lon[0]))
        want = 0.5 * math.acos(max(-1.0, min(1.0, c))) ** 2
        got = sigma_R(sphere, _stereo(lat[0], lon[0]), _stereo(lat[1], lon[1]))
        sph = max(sph, abs(got / want - 1))
    x_fixed = np.array([0.05, -0.03])
    axis = np.linspace(-0.6, 0.6, 10)
    sample = np.array([(u, v) for u in axis for v in axis])
    eik = max(eikonal_residual(disk, x, x_fixed, h=1e-4) for x in sample)
    eik_flat = max(eikonal_residual(flat, x, x_fixed, h=1e-4) for x in sample)
    checks = {
        "20 radial pairs 1e-4": radial <= 1e-4,
        "sphere great circle 1e-4": sph <= 1e-4,
        "eikonal 10x10 <= 1e-3": eik <= 1e-3,
        "flat eikonal <= 1e-8": eik_flat <= 1e-8,
    }
    verdict(6, "Riemannian world function", checks,
            f"radial {radial:.2e}, sphere {sph:.2e}, eikonal {eik:.2e}, flat {eik_flat:.2e}")


def test_criterion_7_hole_effect(verdict):
    hole = ((0.0, 0.0), 1.0)
    exact = 0.5 * (2 * math.sqrt(3) + math.pi / 3) ** 2
    got = punctured_sigma(hole, (-2, 0), (2, 0))
    rng = np.random.default_rng(7)
    clear = 0
    for y, x0, x1 in zip(rng.uniform(1.0, 3.0, 50) * rng.choice([-1, 1], 50),
                         rng.uniform(-3, 0, 50), rng.uniform(0, 3, 50)):
        P, Q = (x0, y), (x1, y)
        clear += punctured_sigma(hole, P, Q) == pytest.approx(0.5 * (x1 - x0) ** 2, abs=1e-12)
    checks = {
        "tangent-arc value 1e-9": abs(got - exact) <= 1e-9,
        "non-crossing chords are Euclidean": clear == 50,
    }
    verdict(7, "hole effect", checks, f"sigma {got:.10f}, exact {exact:.10f}")


def test_criterion_8_chain_diffusion(verdict):
    d = 0.02
    t0 = time.perf_counter()
    s = simulate_ensemble(GeometrySpec.deformed_minkowski(2, d), UNIT, 1000, 4000, seed=8)
    elapsed = time.perf_counter() - t0
    z = simulate_ensemble(GeometrySpec.deformed_minkowski(2, 0.0), UNIT, 1000, 100, seed=8)
    want = random_walk_slope(d)
    checks = {
        "theory 0.1236": want == pytest.approx(0.1236, abs=1e-12),
        "slope within 3 SE": abs(s.fitted_slope - want) <= 3 * s.slope_stderr,
        "R^2 >= 0.99": s.r_squared >= 0.99,
        "d=0 slope exactly 0": z.fitted_slope == 0.0,
        "runtime < 60 s": elapsed < 60,
    }
    verdict(8, "chain diffusion", checks,
            f"slope {s.fitted_slope:.5f} +- {s.slope_stderr:.5f} vs {want:.4f}, "
            f"R^2 {s.r_squared:.5f}, {elapsed:.1f} s")


def test_criterion_9_transitivity_violation(verdict):
    deformed = transitivity_probe(GeometrySpec.deformed_minkowski(2, 0.05), UNIT, (1, 0), (2, 0),
                                  n_chains=100)
    euclid = transitivity_probe(GeometrySpec.euclidean(2), UNIT, (0, 1), (2, -1), n_chains=100)
    checks = {
        "deformed has a violation": deformed.violations >= 1,
        "euclidean has none": euclid.violations == 0,
        "100 chains each": deformed.chains_tested == euclid.chains_tested == 100,
    }
    verdict(9, "intransitive equivalence", checks,
            f"deformed {deformed.violations}/100, euclidean {euclid.violations}/100")
