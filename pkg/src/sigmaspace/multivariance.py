"""Solving the vector-equivalence system for an unknown endpoint.

Given a vector ``v = P0P1`` and a point ``Q0``, the points ``Q1`` with
``Q0Q1 eqv v`` satisfy two equations:

    (v . Q0Q1) = |v| |Q0Q1|,      |Q0Q1| = |v|.

On the solution set the first equation is ``(v . Q0Q1) = |v|^2``, which
is what is solved (it avoids square roots), together with
``|Q0Q1|^2 = |v|^2``. Every candidate is then re-checked with the
signed `core.is_equivalent` predicate. In Euclidean space the solution
is the translate of v; in deformed geometries it need not be unique.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from . import core
from .core import GeometryError, GeometrySpec
from .objects import estimate_dimension
from .solvers import fd_jacobian, multistart_newton

VERDICTS = ("unique", "discrete_multi", "continuum", "empty")


@dataclass(frozen=True)
class SolverConfig:
    """Multistart settings.

    ``box`` is ``(lo, hi)``; by default a cube of half-width
    ``3 max(|end - origin|)`` around ``Q0``. ``tol`` bounds the scaled
    residual of accepted points; clusters have radius ``1e3 tol``.
    """

    starts: int = 64
    box: tuple | None = None
    tol: float = 1e-10
    seed: int = 0
    max_iter: int = 80
    check_tol: float = 1e-8


@dataclass
class SolutionSet:
    solutions: np.ndarray
    cluster_sizes: list
    residual_max: float
    est_dimension: float
    verdict: str
    raw: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "solutions": np.asarray(self.solutions).tolist(),
            "cluster_sizes": [int(c) for c in self.cluster_sizes],
            "residual_max": float(self.residual_max),
            "est_dimension": float(self.est_dimension),
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "SolutionSet":
        return cls(
            np.asarray(data["solutions"], dtype=float),
            list(data["cluster_sizes"]),
            float(data["residual_max"]),
            float(data["est_dimension"]),
            data["verdict"],
        )


def equivalence_residual(geom: GeometrySpec, v, Q0, Q1) -> np.ndarray:
    """Scaled residuals ``[(v.Q0Q1) - |v|^2, |Q0Q1|^2 - |v|^2] / |v|^2``."""
    ns = core.norm_squared(geom, v)
    Q0b = np.broadcast_to(Q0, np.shape(Q1))
    w = (Q0b, Q1)
    r1 = core.scalar_product(geom, v, w) - ns
    r2 = core.norm_squared(geom, w) - ns
    return np.stack([r1, r2], axis=-1) / abs(ns)


def _cluster(points: np.ndarray, radius: float):
    """Greedy clustering after a canonical lexicographic sort."""
    order = np.lexsort(points.T[::-1])
    pts = points[order]
    labels = -np.ones(len(pts), dtype=int)
    reps = []
    for i, p in enumerate(pts):
        if labels[i] >= 0:
            continue
        members = (labels < 0) & (np.max(np.abs(pts - p), axis=-1) <= radius)
        labels[members] = len(reps)
        reps.append(members)
    centers = np.array([pts[m].mean(axis=0) for m in reps]).reshape(len(reps), points.shape[1])
    sizes = [int(m.sum()) for m in reps]
    return centers, sizes


def _polish_tangent(fun, X: np.ndarray, tol: float) -> np.ndarray:
    """Refine solutions where the two level sets touch instead of crossing.

    There the Jacobian is rank deficient and Newton stalls at about the
    square root of the rounding noise. A touching point is instead
    solved from ``F1 = 0`` together with ``grad F2`` parallel to
    ``grad F1`` (the component of ``grad F2`` orthogonal to ``grad F1``
    vanishes); that system is regular.
    """
    if not len(X) or X.shape[1] < 2:
        return X
    n = X.shape[1]
    h = 1e-6 * np.maximum(1.0, np.max(np.abs(X), axis=-1))
    sv = np.linalg.svd(fd_jacobian(fun, X, h), compute_uv=False)
    touching = np.isfinite(sv).all(axis=-1) & (sv[:, -1] <= 1e-6 * sv[:, 0])
    if not touching.any():
        return X
    idx = np.flatnonzero(touching)

    def G(Y):
        hg = 1e-5 * np.maximum(1.0, np.max(np.abs(Y), axis=-1))
        J = fd_jacobian(fun, Y, hg)
        g1, g2 = J[:, 0], J[:, 1]
        unit = g1 / np.linalg.norm(g1, axis=-1, keepdims=True)
        perp = g2 - np.sum(g2 * unit, axis=-1, keepdims=True) * unit
        return np.concatenate([fun(Y)[:, :1], perp], axis=-1)

    Y = X[idx].copy()
    gy = np.max(np.abs(G(Y)), axis=-1)
    for _ in range(12):
        hy = 1e-6 * np.maximum(1.0, np.max(np.abs(Y), axis=-1))
        step = -np.einsum("mnk,mk->mn", np.linalg.pinv(fd_jacobian(G, Y, hy)), G(Y))
        trial = Y + step
        gt = np.max(np.abs(G(trial)), axis=-1)
        better = np.isfinite(gt) & (gt < gy)
        if not better.any():
            break
        Y[better], gy[better] = trial[better], gt[better]
    before = np.max(np.abs(fun(X[idx])), axis=-1)
    after = np.max(np.abs(fun(Y)), axis=-1)
    good = np.isfinite(after) & (after <= np.maximum(before, 1e-14))
    X = X.copy()
    X[idx[good]] = Y[good]
    return X


def _classify(n_clusters: int, est_dim: float) -> str:
    if n_clusters == 0:
        return "empty"
    if est_dim >= 0.8:
        return "continuum"
    if est_dim < 0.5:
        return "unique" if n_clusters == 1 else "discrete_multi"
    return "discrete_multi"


def solve_equivalent(geom: GeometrySpec, v, Q0, config: SolverConfig | None = None) -> SolutionSet:
    """Find the endpoints ``Q1`` with ``Q0Q1`` equivalent to ``v``.

    Multistart damped Newton from uniform starts in the search box. With
    more than two coordinates the system is underdetermined and the
    minimum-norm Newton step lands on the solution manifold near each
    start; the spread of the landing points then measures its dimension.
    """
    cfg = config or SolverConfig()
    v = core.as_vector(geom, v)
    Q0 = core.as_points(geom, Q0)
    ns = core.norm_squared(geom, v)
    if not ns > 0:
        raise GeometryError("generator vector must have positive squared length")
    if cfg.box is None:
        half = 3.0 * max(float(np.max(np.abs(v.end - v.origin))), 1e-12)
        lo, hi = Q0 - half, Q0 + half
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in cfg.box)
    if lo.shape != (geom.dim,) or hi.shape != (geom.dim,) or np.any(hi <= lo):
        raise GeometryError("search box must be a nonempty box of the geometry's dimension")

    def fun(X):
        try:
            with np.errstate(all="ignore"):
                return equivalence_residual(geom, v, Q0, X)
        except core.DomainError:
            out = np.full((len(X), 2), np.nan)
            for i, x in enumerate(X):
                try:
                    out[i] = equivalence_residual(geom, v, Q0, x)
                except core.DomainError:
                    pass
            return out

    rng = np.random.default_rng(cfg.seed)
    starts = lo + (hi - lo) * rng.random((cfg.starts, geom.dim))
    res = multistart_newton(fun, starts, tol=cfg.tol, max_iter=cfg.max_iter)
    inside = np.all((res.x >= lo) & (res.x <= hi), axis=-1)
    X = res.x[res.converged & inside]
    if len(X):
        Q0b = np.broadcast_to(Q0, X.shape)
        try:
            ok = np.asarray(core.is_equivalent(geom, v, (Q0b, X), cfg.check_tol).holds)
        except core.ImaginaryMagnitudeError:
            ok = np.array([_safe_equivalent(geom, v, Q0, x, cfg.check_tol) for x in X])
        X = X[np.atleast_1d(ok)]
    if not len(X):
        return SolutionSet(np.empty((0, geom.dim)), [], 0.0, 0.0, "empty", X)

    centers, sizes = _cluster(X, 1e3 * cfg.tol)
    polished = _polish_tangent(fun, centers, cfg.tol)
    if not np.array_equal(polished, centers):
        merged, groups = _cluster(polished, 1e3 * cfg.tol)
        # carry member counts through the merge
        order = np.lexsort(polished.T[::-1])
        counts = np.asarray(sizes)[order]
        sizes, start = [], 0
        for g in groups:
            sizes.append(int(counts[start:start + g].sum()))
            start += g
        centers = merged
    try:
        est = estimate_dimension(centers) if len(centers) > 12 else 0.0
    except ValueError:
        est = 0.0
    rmax = float(np.max(np.abs(fun(centers))))
    return SolutionSet(centers, sizes, rmax, est, _classify(len(centers), est), X)


def _safe_equivalent(geom, v, Q0, Q1, tol):
    try:
        return bool(core.is_equivalent(geom, v, (Q0, Q1), tol))
    except core.ImaginaryMagnitudeError:
        return False


@dataclass
class TransitivityReport:
    chains_tested: int
    violations: int
    violation_fraction: float
    worst_residual: float
    worst_chain: dict | None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def transitivity_probe(geom: GeometrySpec, v, Q0, R0, config: SolverConfig | None = None,
                       seed: int = 0, n_chains: int = 100, tol: float = 1e-6) -> TransitivityReport:
    """Compose equivalences ``v -> v2 (at Q0) -> v3 (at R0)`` and test ``v3 eqv v``.

    Each sampled chain picks ``v2`` uniformly among the solution
    representatives at ``Q0`` and ``v3`` uniformly among those for ``v2``
    at ``R0``.
    """
    cfg = config or SolverConfig()
    v = core.as_vector(geom, v)
    Q0 = core.as_points(geom, Q0)
    R0 = core.as_points(geom, R0)
    first = solve_equivalent(geom, v, Q0, cfg)
    if first.verdict == "empty":
        raise GeometryError("no vector at Q0 is equivalent to v")
    rng = np.random.default_rng(seed)
    second_cache: dict[int, SolutionSet] = {}
    violations = 0
    worst = 0.0
    worst_chain = None
    for _ in range(n_chains):
        i = int(rng.integers(len(first.solutions)))
        if i not in second_cache:
            v2 = (Q0, first.solutions[i])
            second_cache[i] = solve_equivalent(geom, v2, R0, cfg)
            if second_cache[i].verdict == "empty":
                raise GeometryError("no vector at R0 is equivalent to the intermediate vector")
        sols = second_cache[i].solutions
        j = int(rng.integers(len(sols)))
        v3 = (R0, sols[j])
        try:
            check = core.is_equivalent(geom, v, v3, tol)
            ok, resid = bool(check.holds), abs(float(check.residual))
        except core.ImaginaryMagnitudeError:
            ok, resid = False, np.inf
        if not ok:
            violations += 1
        if resid > worst or worst_chain is None:
            worst = resid
            worst_chain = {"v2_end": first.solutions[i].tolist(), "v3_end": sols[j].tolist(),
                           "equivalent": ok}
    return TransitivityReport(n_chains, violations, violations / n_chains, float(worst), worst_chain)


def multivariance_map(geom: GeometrySpec, v, Q0, d_values, config: SolverConfig | None = None) -> list:
    """Solution spread as a function of the deformation ``d``.

    Returns rows ``(d, spread, n_solutions)`` where spread is the largest
    pairwise distance between the spatial parts of the solutions.
    """
    if geom.kind not in ("deformed_minkowski", "minkowski"):
        raise GeometryError("multivariance_map needs a Minkowski-family geometry")
    rows = []
    for d in d_values:
        g = GeometrySpec.deformed_minkowski(geom.dim, float(d), geom.params["c"])
        sols = solve_equivalent(g, v, Q0, config).solutions
        spread = float(pdist(sols[:, 1:]).max()) if len(sols) > 1 else 0.0
        rows.append((float(d), spread, len(sols)))
    return rows
