"""World functions generated by Riemannian metrics.

``sigma_R(P0, P1)`` is half the squared length of a geodesic joining
the two points. Geodesics are found by minimizing the discrete path
energy

    E = sum_j g(m_j)[dx_j, dx_j] / (2 ds),    ds = 1/N,

over the interior nodes of an N-segment polyline, with m_j the segment
midpoints. The minimizer has constant speed, so ``L^2 = 2E`` there.
Minimization is a damped Newton iteration: the gradient is analytic and
the block-tridiagonal Hessian is assembled from three colored
finite-difference sweeps of that gradient.

Also here: the eikonal check ``dsigma g^{ik} dsigma = 2 sigma`` and the
world function of a plane with a circular hole cut out of it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from . import core
from .core import DomainError, GeometryError

CHARTS = ("poincare_disk", "sphere_2d", "flat_patch")


class DegenerateGeodesicWarning(UserWarning):
    """The endpoints are joined by a continuum of minimizing geodesics."""


@dataclass(frozen=True)
class Chart:
    """A 2-D coordinate chart with a conformal (diagonal) metric ``lambda(x) I``.

    ``poincare_disk``
        Unit disk, ``lambda = 4 k^2 / (1 - |x|^2)^2`` with ``k = scale``.
    ``sphere_2d``
        Stereographic coordinates of a sphere of radius ``radius``
        projected from the north pole onto the equatorial plane:
        ``lambda = 4 R^2 / (1 + |x|^2)^2``. The south pole sits at the
        origin and the equator on the unit circle.
    ``flat_patch``
        ``lambda = 1``.
    """

    id: str
    params: Mapping[str, Any] = field(default_factory=dict)
    dim: int = 2

    def __post_init__(self):
        if self.id not in CHARTS:
            raise GeometryError(f"unknown chart {self.id!r}")
        params = dict(self.params)
        if self.id == "poincare_disk":
            params["scale"] = float(params.get("scale", 1.0))
        elif self.id == "sphere_2d":
            params["radius"] = float(params.get("radius", 1.0))
        for v in params.values():
            if isinstance(v, float) and not v > 0:
                raise GeometryError("chart parameters must be positive")
        object.__setattr__(self, "params", params)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = np.all(np.isfinite(x), axis=-1)
        if self.id == "poincare_disk":
            ok &= np.sum(x * x, axis=-1) < 1.0
        return ok

    def conformal_factor(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        if self.id == "poincare_disk":
            return 4.0 * self.params["scale"] ** 2 / (1.0 - r2) ** 2
        if self.id == "sphere_2d":
            return 4.0 * self.params["radius"] ** 2 / (1.0 + r2) ** 2
        return np.ones_like(r2)

    def conformal_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        if self.id == "poincare_disk":
            return 16.0 * self.params["scale"] ** 2 * x / (1.0 - r2) ** 3
        if self.id == "sphere_2d":
            return -16.0 * self.params["radius"] ** 2 * x / (1.0 + r2) ** 3
        return np.zeros_like(x)

    def metric(self, x) -> np.ndarray:
        """Diagonal of ``g_ik(x)``, shape ``(..., dim)``."""
        lam = self.conformal_factor(x)
        return np.repeat(np.asarray(lam)[..., None], self.dim, axis=-1)

    def inverse_metric(self, x) -> np.ndarray:
        return np.eye(self.dim) / self.conformal_factor(x)

    def exact_distance(self, P, Q):
        """Closed-form geodesic distance, used as an oracle for the solver."""
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        if self.id == "flat_patch":
            return np.sqrt(np.sum((Q - P) ** 2, axis=-1))
        if self.id == "poincare_disk":
            num = 2.0 * np.sum((Q - P) ** 2, axis=-1)
            den = (1.0 - np.sum(P * P, axis=-1)) * (1.0 - np.sum(Q * Q, axis=-1))
            return self.params["scale"] * np.arccosh(1.0 + num / den)
        a, b = _stereo_to_sphere(P), _stereo_to_sphere(Q)
        cross = np.linalg.norm(np.cross(a, b), axis=-1)
        return self.params["radius"] * np.arctan2(cross, np.sum(a * b, axis=-1))

    def exact_sigma(self, P, Q):
        return 0.5 * self.exact_distance(P, Q) ** 2

    def is_degenerate_pair(self, P, Q, tol: float = 1e-9) -> bool:
        """True for antipodal points on the sphere."""
        if self.id != "sphere_2d":
            return False
        a, b = _stereo_to_sphere(P), _stereo_to_sphere(Q)
        return bool(np.sum(a * b) < -1.0 + tol)


def _stereo_to_sphere(u):
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1, keepdims=True)
    return np.concatenate([2.0 * u, r2 - 1.0], axis=-1) / (1.0 + r2)


@dataclass(frozen=True)
class GeodesicConfig:
    n_nodes: int = 256
    max_iter: int = 100
    grad_tol: float = 1e-8
    n_inits: int = 1
    perturbation: float = 0.35


@dataclass
class GeodesicPath:
    nodes: np.ndarray
    length: float
    energy: float
    converged: bool
    iterations: int = 0
    energy_history: list = field(default_factory=list)

    def to_csv(self) -> str:
        rows = ["x1,x2"] + [",".join(f"{c:.17g}" for c in p) for p in self.nodes]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "length": self.length,
            "energy": self.energy,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data) -> "GeodesicPath":
        return cls(
            np.asarray(data["nodes"], dtype=float),
            float(data["length"]),
            float(data["energy"]),
            bool(data["converged"]),
            int(data.get("iterations", 0)),
        )


class _PathEnergy:
    """Discrete energy of a polyline with fixed endpoints."""

    def __init__(self, chart: Chart, p0, p1, n_segments: int):
        self.chart = chart
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.n = n_segments

    def full(self, Y):
        return np.vstack([self.p0, Y, self.p1])

    def energy(self, Y) -> float:
        X = self.full(Y)
        if not np.all(self.chart.contains(X)):
            return np.inf
        dX = np.diff(X, axis=0)
        lam = self.chart.conformal_factor(0.5 * (X[1:] + X[:-1]))
        return 0.5 * self.n * float(np.sum(lam * np.sum(dX * dX, axis=-1)))

    def length(self, Y) -> float:
        X = self.full(Y)
        dX = np.diff(X, axis=0)
        lam = self.chart.conformal_factor(0.5 * (X[1:] + X[:-1]))
        return float(np.sum(np.sqrt(lam * np.sum(dX * dX, axis=-1))))

    def gradient(self, Y) -> np.ndarray:
        X = self.full(Y)
        dX = np.diff(X, axis=0)
        mid = 0.5 * (X[1:] + X[:-1])
        lam = self.chart.conformal_factor(mid)[:, None]
        dlam = self.chart.conformal_gradient(mid)
        half = 0.5 * dlam * np.sum(dX * dX, axis=-1, keepdims=True)
        lin = 2.0 * lam * dX
        c = 0.5 * self.n
        # node k is the end of segment k-1 and the start of segment k
        return c * ((half[:-1] + lin[:-1]) + (half[1:] - lin[1:]))

    def banded_hessian(self, Y, eps: float) -> np.ndarray:
        """Lower banded storage of the (symmetrized) Hessian for `solveh_banded`."""
        m, dim = Y.shape
        u = 2 * dim - 1
        # B[k, dk+1, c', c] = d grad[k+dk, c'] / d Y[k, c]
        B = np.zeros((m, 3, dim, dim))
        for color in range(3):
            nodes = np.arange(color, m, 3)
            for c in range(dim):
                step = np.zeros_like(Y)
                step[nodes, c] = eps
                col = (self.gradient(Y + step) - self.gradient(Y - step)) / (2.0 * eps)
                for dk in (-1, 0, 1):
                    k = nodes[(nodes + dk >= 0) & (nodes + dk < m)]
                    B[k, dk + 1, :, c] = col[k + dk]
        diag = 0.5 * (B[:, 1] + np.swapaxes(B[:, 1], 1, 2))
        off = 0.5 * (B[:-1, 2] + np.swapaxes(B[1:, 0], 1, 2))
        ab = np.zeros((u + 1, m * dim))
        for c in range(dim):
            cols = np.arange(m) * dim + c
            for cp in range(c, dim):
                ab[cp - c, cols] = diag[:, cp, c]
            for cp in range(dim):
                ab[dim + cp - c, cols[:-1]] = off[:, cp, c]
        return ab


def _relax(chart: Chart, p0, p1, init: np.ndarray, cfg: GeodesicConfig) -> GeodesicPath:
    n = init.shape[0] - 1
    prob = _PathEnergy(chart, p0, p1, n)
    Y = np.array(init[1:-1], dtype=float)
    E = prob.energy(Y)
    if not np.isfinite(E):
        raise DomainError("initial path leaves the chart domain")
    history = [E]
    coord_scale = max(1.0, float(np.max(np.abs(init))))
    mu = 0.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        g = prob.gradient(Y)
        chord = np.sum(np.linalg.norm(np.diff(prob.full(Y), axis=0), axis=-1))
        gscale = 2.0 * E / chord if chord > 0 else 1.0
        if np.max(np.abs(g)) <= cfg.grad_tol * max(gscale, 1e-300):
            converged = True
            break
        ab = prob.banded_hessian(Y, 1e-7 * coord_scale)
        diag_scale = float(np.max(np.abs(ab[0])))
        accepted = False
        for _ in range(60):
            shifted = ab.copy()
            shifted[0] += mu
            try:
                p = solveh_banded(shifted, -g.ravel(), lower=True)
            except LinAlgError:
                mu = max(4.0 * mu, 1e-10 * diag_scale)
                continue
            trial = Y + p.reshape(Y.shape)
            E_new = prob.energy(trial)
            if E_new < E or (
                E_new <= E * (1.0 + 4e-16)
                and np.max(np.abs(prob.gradient(trial))) < np.max(np.abs(g))
            ):
                Y, E = trial, E_new
                mu = mu / 3.0 if mu > 1e-14 * diag_scale else 0.0
                accepted = True
                break
            mu = max(4.0 * mu, 1e-10 * diag_scale)
        history.append(E)
        if not accepted:
            break
    else:
        g = prob.gradient(Y)
        chord = np.sum(np.linalg.norm(np.diff(prob.full(Y), axis=0), axis=-1))
        converged = bool(np.max(np.abs(g)) <= cfg.grad_tol * (2.0 * E / chord if chord > 0 else 1.0))
    return GeodesicPath(prob.full(Y), prob.length(Y), E, converged, it, history)


def _initial_paths(chart: Chart, p0, p1, cfg: GeodesicConfig) -> list:
    s = np.linspace(0.0, 1.0, cfg.n_nodes + 1)[:, None]
    chord = (1.0 - s) * p0 + s * p1
    paths = [chord]
    delta = p1 - p0
    normal = np.array([-delta[1], delta[0]])
    bump = np.sin(np.pi * s)
    k = 1
    while len(paths) < cfg.n_inits:
        amp = cfg.perturbation * ((k + 1) // 2) * (1 if k % 2 else -1)
        k += 1
        for _ in range(30):
            trial = chord + amp * bump * normal
            if np.all(chart.contains(trial)):
                paths.append(trial)
                break
            amp *= 0.5
        if k > 4 * cfg.n_inits + 4:
            break
    return paths


def _check_endpoints(chart: Chart, P0, P1):
    P0 = np.asarray(P0, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    if P0.shape != (chart.dim,) or P1.shape != (chart.dim,):
        raise GeometryError(f"chart points need {chart.dim} coordinates")
    if not (chart.contains(P0) and chart.contains(P1)):
        raise DomainError("endpoint outside the chart domain")
    return P0, P1


def geodesics(chart: Chart, P0, P1, config: GeodesicConfig | None = None) -> list:
    """Relax every initial path; returns one `GeodesicPath` per init, shortest first."""
    cfg = config or GeodesicConfig()
    P0, P1 = _check_endpoints(chart, P0, P1)
    if np.array_equal(P0, P1):
        nodes = np.repeat(P0[None], cfg.n_nodes + 1, axis=0)
        return [GeodesicPath(nodes, 0.0, 0.0, True)]
    if chart.is_degenerate_pair(P0, P1):
        warnings.warn(
            "antipodal points: minimizing geodesics form a continuum", DegenerateGeodesicWarning
        )
    paths = [_relax(chart, P0, P1, init, cfg) for init in _initial_paths(chart, P0, P1, cfg)]
    return sorted(paths, key=lambda p: (not p.converged, p.length))


def geodesic(chart: Chart, P0, P1, config: GeodesicConfig | None = None) -> GeodesicPath:
    """Shortest geodesic found from the configured initial paths."""
    return geodesics(chart, P0, P1, config)[0]


def distinct_paths(paths, tol: float = 1e-4) -> list:
    """Drop paths whose nodes lie within ``tol`` of an earlier path."""
    kept = []
    for p in paths:
        if not p.converged:
            continue
        if all(np.max(np.abs(p.nodes - q.nodes)) > tol for q in kept):
            kept.append(p)
    return kept


def sigma_R(chart: Chart, P0, P1, branch: str = "principal", config: GeodesicConfig | None = None):
    """Riemannian world function ``L^2 / 2`` along a numerically found geodesic.

    ``branch="principal"`` returns the value for the shortest geodesic
    found; ``"all_found"`` returns one value per distinct converged
    geodesic (default config then relaxes five initial paths).
    The endpoints are put in lexicographic order first, so the result is
    exactly symmetric.
    """
    P0, P1 = _check_endpoints(chart, P0, P1)
    if tuple(P1) < tuple(P0):
        P0, P1 = P1, P0
    if branch == "principal":
        return 0.5 * geodesic(chart, P0, P1, config).length ** 2
    if branch == "all_found":
        cfg = config or GeodesicConfig(n_inits=5)
        return [0.5 * p.length**2 for p in distinct_paths(geodesics(chart, P0, P1, cfg))]
    raise ValueError(f"unknown branch {branch!r}")


def chart_sigma(geom: core.GeometrySpec, P, Q):
    """Vectorized sigma for a ``riemannian_chart`` geometry."""
    chart = geom.chart()
    P, Q = np.broadcast_arrays(np.asarray(P, float), np.asarray(Q, float))
    if not (np.all(chart.contains(P)) and np.all(chart.contains(Q))):
        raise DomainError("point outside the chart domain")
    if geom.params["method"] == "exact":
        return chart.exact_sigma(P, Q)
    flatP = P.reshape(-1, chart.dim)
    flatQ = Q.reshape(-1, chart.dim)
    out = np.array([sigma_R(chart, p, q) for p, q in zip(flatP, flatQ)])
    return out.reshape(P.shape[:-1])


def eikonal_residual(target, x, x_fixed, h: float | None = None, config: GeodesicConfig | None = None) -> float:
    """Relative residual of ``dsigma g^{ik} dsigma = 2 sigma`` at ``x``.

    ``target`` is a `Chart` (sigma from geodesics) or a `GeometrySpec`.
    Derivatives are central differences with step ``h`` (default
    ``1e-4`` times the coordinate scale). Returns
    ``|dsigma g dsigma - 2 sigma| / max(1, 2|sigma|)``.
    """
    x = np.asarray(x, dtype=float)
    x_fixed = np.asarray(x_fixed, dtype=float)
    dim = x.shape[-1]
    if h is None:
        h = 1e-4 * max(1.0, float(np.max(np.abs(x))))
    if np.linalg.norm(x - x_fixed) <= 10 * h:
        raise DomainError("x must be separated from x_fixed by more than 10 h")
    stencil = x + h * np.concatenate([np.eye(dim), -np.eye(dim)])

    if isinstance(target, Chart):
        chart = target
        if not np.all(chart.contains(np.vstack([stencil, x, x_fixed]))):
            raise DomainError("finite-difference stencil leaves the chart domain")
        cfg = config or GeodesicConfig()
        center = geodesic(chart, x, x_fixed, cfg)
        s = np.linspace(0.0, 1.0, center.nodes.shape[0])[:, None]

        def sig(p):
            init = center.nodes + (1.0 - s) * (p - x)
            return 0.5 * _relax(chart, p, x_fixed, init, cfg).length ** 2

        s0 = 0.5 * center.length**2
        ginv = chart.inverse_metric(x)
    else:
        geom = target
        if geom.kind == "punctured_euclidean":
            c, r = np.asarray(geom.params["center"]), geom.params["radius"]
            if np.any(np.linalg.norm(stencil - c, axis=-1) < r):
                raise DomainError("finite-difference stencil enters the hole")
        elif geom.kind == "riemannian_chart" and not np.all(geom.chart().contains(stencil)):
            raise DomainError("finite-difference stencil leaves the chart domain")

        def sig(p):
            return core.sigma(geom, p, x_fixed)

        s0 = core.sigma(geom, x, x_fixed)
        ginv = core.inverse_metric(geom, x)

    vals = np.array([sig(p) for p in stencil])
    grad = (vals[:dim] - vals[dim:]) / (2.0 * h)
    lhs = grad @ ginv @ grad
    return float(abs(lhs - 2.0 * s0) / max(1.0, 2.0 * abs(s0)))


def punctured_length(hole, P0, P1):
    """Length of the shortest path in the plane avoiding an open disk.

    ``hole`` is ``(center, radius)``. When the chord passes through the
    disk the path is tangent segment, arc, tangent segment.
    """
    center, radius = hole
    center = np.asarray(center, dtype=float)
    radius = float(radius)
    P0, P1 = np.broadcast_arrays(np.asarray(P0, float), np.asarray(P1, float))
    if P0.shape[-1] != 2:
        raise GeometryError("punctured plane points need 2 coordinates")
    # canonical order keeps the branch decision symmetric
    swap = (P1[..., 0] < P0[..., 0]) | ((P1[..., 0] == P0[..., 0]) & (P1[..., 1] < P0[..., 1]))
    p = np.where(swap[..., None], P1, P0) - center
    q = np.where(swap[..., None], P0, P1) - center
    d0 = np.linalg.norm(p, axis=-1)
    d1 = np.linalg.norm(q, axis=-1)
    if np.any(d0 < radius) or np.any(d1 < radius):
        raise DomainError("point inside the hole")
    seg = q - p
    seg2 = np.sum(seg * seg, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(-np.sum(p * seg, axis=-1) / seg2, 0.0, 1.0)
    t = np.where(seg2 > 0, t, 0.0)
    closest = np.linalg.norm(p + t[..., None] * seg, axis=-1)
    chord = np.sqrt(seg2)
    theta = np.arctan2(np.abs(p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]), np.sum(p * q, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        tangents = np.sqrt(np.maximum(d0**2 - radius**2, 0.0)) + np.sqrt(np.maximum(d1**2 - radius**2, 0.0))
        arc = theta - np.arccos(np.minimum(radius / d0, 1.0)) - np.arccos(np.minimum(radius / d1, 1.0))
        wrapped = tangents + radius * np.maximum(arc, 0.0)
    L = np.where(closest < radius, wrapped, chord)
    return float(L) if L.ndim == 0 else L


def punctured_sigma(hole, P0, P1):
    L = punctured_length(hole, P0, P1)
    return 0.5 * L * L
