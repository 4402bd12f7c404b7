"""Segments and straights as implicit point sets.

A segment between P0 and P1 is the zero set of
``rho(P0,R) + rho(P1,R) - rho(P0,P1)``; the straight through Q0
collinear with P0P1 is the zero set of
``(P0P1.Q0R)^2 - |P0P1|^2 |Q0R|^2``. Both are found by scanning a grid
and refining candidates onto the zero set. In Euclidean space both
residuals have tangential zeros (they never change sign), so besides
bisection on sign-changing grid edges, near-zero nodes are projected
onto the zero set with gradient steps.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import core
from .core import DomainError, GeometrySpec


@dataclass
class PointCloud:
    points: np.ndarray
    residuals: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = self.points.shape[1] if self.points.ndim == 2 else 0
        w.writerow([f"x{i + 1}" for i in range(dim)] + ["residual"])
        for p, r in zip(self.points, self.residuals):
            w.writerow([f"{c:.17g}" for c in p] + [f"{r:.17g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "residuals": self.residuals.tolist(),
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "PointCloud":
        pts = np.asarray(data["points"], dtype=float)
        return cls(pts.reshape(len(pts), -1) if pts.size else pts.reshape(0, 0),
                   np.asarray(data["residuals"], dtype=float), dict(data.get("meta", {})))


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box sampled with ``n`` nodes per axis."""

    lo: tuple
    hi: tuple
    n: int | tuple = 101

    @property
    def counts(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.n, dtype=int), (len(self.lo),)).copy()

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi, float) - np.asarray(self.lo, float)) / (self.counts - 1)

    @property
    def resolution(self) -> float:
        return float(np.max(self.spacing))

    def axes(self):
        return [np.linspace(a, b, k) for a, b, k in zip(self.lo, self.hi, self.counts)]

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "n": np.asarray(self.n).tolist()}

    @classmethod
    def around(cls, points, pad: float = 0.5, n: int = 101) -> "Grid":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        ext = max(float(np.max(hi - lo)), 1e-3)
        return cls(tuple(lo - pad * ext), tuple(hi + pad * ext), n)


def _rho(geom, P, Q):
    s = np.asarray(core.sigma(geom, P, Q), dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(s >= 0, np.sqrt(2.0 * np.abs(s)), np.nan)


def _segment_field(geom, P0, P1):
    r01 = float(_rho(geom, P0, P1))

    def f(R):
        return _rho(geom, P0, R) + _rho(geom, P1, R) - r01

    return f


def _straight_field(geom, P0, P1, Q0):
    def f(R):
        Qb = np.broadcast_to(Q0, R.shape)
        return core.collinearity_residual(geom, (P0, P1), (Qb, R))

    return f


def segment_residual(geom: GeometrySpec, P0, P1, R):
    """``rho(P0,R) + rho(P1,R) - rho(P0,P1)`` with ``rho = sqrt(2 sigma)``."""
    P0, P1, R = (core.as_points(geom, p) for p in (P0, P1, R))
    for a, b in ((P0, R), (P1, R), (P0, P1)):
        if np.any(np.asarray(core.sigma(geom, a, b)) < 0):
            raise DomainError("segment residual needs nonnegative sigma")
    out = _segment_field(geom, P0, P1)(R)
    return float(out) if np.ndim(out) == 0 else out


def straight_residual(geom: GeometrySpec, P0, P1, Q0, R):
    """``(P0P1.Q0R)^2 - |P0P1|^2 |Q0R|^2``; uses squared moduli only."""
    P0, P1, Q0, R = (core.as_points(geom, p) for p in (P0, P1, Q0, R))
    out = _straight_field(geom, P0, P1, Q0)(R)
    return float(out) if np.ndim(out) == 0 else out


def _safe(f):
    def g(X):
        try:
            with np.errstate(all="ignore"):
                return np.asarray(f(X), dtype=float)
        except DomainError:
            out = np.empty(X.shape[:-1])
            for idx in np.ndindex(out.shape):
                try:
                    out[idx] = f(X[idx])
                except DomainError:
                    out[idx] = np.nan
            return out

    return g


def _bisect_edges(f, a, b, fa, xtol):
    """Bisect segments ``[a, b]`` whose endpoint values differ in sign."""
    lo, hi, flo = a.copy(), b.copy(), fa.copy()
    width = np.max(np.abs(b - a), axis=-1)
    n_iter = int(np.ceil(np.log2(max(float(np.max(width)), xtol) / xtol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left[:, None], mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left[:, None], hi, mid)
    return 0.5 * (lo + hi)


def _project(f, X, radius, ftol, max_iter=80):
    """Gradient projection ``x <- x - f grad f / |grad f|^2`` with backtracking."""
    X = X.copy()
    fx = f(X)
    origin = X.copy()
    dim = X.shape[1]
    eps = 1e-7 * float(np.min(radius))
    active = np.isfinite(fx) & (np.abs(fx) > ftol)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa, fa = X[idx], fx[idx]
        grad = np.empty_like(xa)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = eps
            grad[:, i] = (f(xa + e) - f(xa - e)) / (2 * eps)
        g2 = np.sum(grad * grad, axis=-1)
        ok = np.isfinite(g2) & (g2 > 0)
        step = np.zeros_like(xa)
        step[ok] = -(fa[ok] / g2[ok])[:, None] * grad[ok]
        alpha = np.ones(len(idx))
        improved = np.zeros(len(idx), dtype=bool)
        for _ in range(12):
            trial = xa + alpha[:, None] * step
            trial = origin[idx] + np.clip(trial - origin[idx], -radius, radius)
            ft = f(trial)
            better = np.isfinite(ft) & (np.abs(ft) < np.abs(fa)) & ~improved & ok
            X[idx[better]] = trial[better]
            fx[idx[better]] = ft[better]
            improved |= better
            alpha[~improved] *= 0.5
            if improved[ok].all():
                break
        active[idx[~improved]] = False
        active &= np.abs(fx) > ftol
    return X, fx


def _scan(f, grid: Grid, accept_tol: float, refine_tol: float):
    axes = grid.axes()
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = f(mesh)
    h = grid.spacing
    dim = len(axes)

    cand = np.isfinite(vals) & (np.abs(vals) <= accept_tol)
    near_pts, near_vals = mesh[cand], vals[cand]

    edge_a, edge_b, edge_fa = [], [], []
    for ax in range(dim):
        sl_a = [slice(None)] * dim
        sl_b = [slice(None)] * dim
        sl_a[ax] = slice(None, -1)
        sl_b[ax] = slice(1, None)
        fa, fb = vals[tuple(sl_a)], vals[tuple(sl_b)]
        change = np.isfinite(fa) & np.isfinite(fb) & (np.sign(fa) * np.sign(fb) < 0)
        edge_a.append(mesh[tuple(sl_a)][change])
        edge_b.append(mesh[tuple(sl_b)][change])
        edge_fa.append(fa[change])
    a = np.concatenate(edge_a) if edge_a else np.empty((0, dim))
    b = np.concatenate(edge_b) if edge_b else np.empty((0, dim))
    fa = np.concatenate(edge_fa) if edge_fa else np.empty(0)

    pts = [np.empty((0, dim))]
    if len(a):
        pts.append(_bisect_edges(f, a, b, fa, 1e-6 * float(np.min(h))))
    if len(near_pts):
        proj, _ = _project(f, near_pts, h, 0.0)
        pts.append(proj)
    pts = np.concatenate(pts)
    res = f(pts) if len(pts) else np.empty(0)
    keep = np.isfinite(res) & (np.abs(res) <= refine_tol)
    pts, res = pts[keep], res[keep]

    # one point per grid cell, the best one
    cells = np.round((pts - np.asarray(grid.lo)) / h).astype(np.int64)
    order = np.argsort(np.abs(res), kind="stable")
    _, first = np.unique(cells[order], axis=0, return_index=True)
    sel = order[first]
    pts, res = pts[sel], res[sel]
    lex = np.lexsort(pts.T[::-1]) if len(pts) else np.arange(0)
    return pts[lex], res[lex]


def scan_segment(geom: GeometrySpec, P0, P1, grid: Grid | None = None,
                 accept_tol: float | None = None) -> PointCloud:
    """Sample the segment between ``P0`` and ``P1`` on a grid.

    Grid nodes where sigma to either endpoint is negative are skipped.
    ``accept_tol`` (default ``1e-3 rho(P0,P1)``) selects candidate nodes;
    accepted points are refined to a residual of ``1e-3 accept_tol``.
    """
    P0, P1 = core.as_points(geom, P0), core.as_points(geom, P1)
    if core.sigma(geom, P0, P1) < 0:
        raise DomainError("segment endpoints must have nonnegative sigma")
    grid = grid or Grid.around([P0, P1])
    r01 = float(_rho(geom, P0, P1))
    meta = {"object": "segment", "P0": P0.tolist(), "P1": P1.tolist(), "grid": grid.to_dict()}
    if np.array_equal(P0, P1):
        meta["accept_tol"] = 0.0
        return PointCloud(P0[None].copy(), np.zeros(1), meta)
    if accept_tol is None:
        accept_tol = 1e-3 * r01
    meta["accept_tol"] = accept_tol
    pts, res = _scan(_safe(_segment_field(geom, P0, P1)), grid, accept_tol, 1e-3 * accept_tol)
    return PointCloud(pts, res, meta)


def scan_straight(geom: GeometrySpec, P0, P1, Q0, grid: Grid | None = None,
                  accept_tol: float | None = None) -> PointCloud:
    """Sample the straight through ``Q0`` collinear with ``P0P1``.

    The residual has units of length^4; the default ``accept_tol`` is
    ``1e-3 |P0P1|^2 e^2`` with ``e`` the largest grid half-width.
    """
    P0, P1, Q0 = (core.as_points(geom, p) for p in (P0, P1, Q0))
    grid = grid or Grid.around([P0, P1, Q0], pad=1.0)
    ns = abs(float(core.norm_squared(geom, (P0, P1))))
    ext = 0.5 * float(np.max(np.asarray(grid.hi) - np.asarray(grid.lo)))
    if accept_tol is None:
        accept_tol = 1e-3 * max(ns, 1e-300) * ext**2
    meta = {"object": "straight", "P0": P0.tolist(), "P1": P1.tolist(), "Q0": Q0.tolist(),
            "grid": grid.to_dict(), "accept_tol": accept_tol}
    pts, res = _scan(_safe(_straight_field(geom, P0, P1, Q0)), grid, accept_tol, 1e-3 * accept_tol)
    return PointCloud(pts, res, meta)


def estimate_dimension(cloud, k: int = 12, theta: float = 0.05) -> float:
    """Local-PCA intrinsic dimension.

    For each point, the covariance of its ``k`` nearest neighbours is
    diagonalized and eigenvalues above ``theta`` times the largest are
    counted. Returns the mean count.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.ndim != 2 or len(pts) < k + 1:
        raise ValueError(f"need at least {k + 1} points to estimate dimension, got {len(pts)}")
    _, idx = cKDTree(pts).query(pts, k=k + 1)
    nbrs = pts[idx]
    centered = nbrs - nbrs.mean(axis=1, keepdims=True)
    cov = np.einsum("mki,mkj->mij", centered, centered) / k
    ev = np.linalg.eigvalsh(cov)
    top = ev[:, -1:]
    counts = np.sum(ev > theta * np.maximum(top, 1e-300), axis=-1)
    counts = np.where(top[:, 0] > 0, counts, 0)
    return float(np.mean(counts))
