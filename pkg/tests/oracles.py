"""Independent reference computations used by the tests."""

import math

import numpy as np
from scipy.ndimage import label
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from sigmaspace import core


def deformed_equivalents(d):
    """Closed form for the unit timelike generator in 1+1: displacements (1+3d, +-sqrt(6d+9d^2))."""
    x = math.sqrt(6 * d + 9 * d * d)
    return np.array([[1 + 3 * d, -x], [1 + 3 * d, x]])


def grid_equivalence_scan(geom, v, Q0, lo, hi, h=1e-3, accept=None):
    """Brute-force search for endpoints Q1 with Q0Q1 equivalent to v.

    Evaluates both equations on a regular 2-D grid of spacing ``h`` and
    returns the best node of each connected patch of nodes where both
    residuals are below ``accept`` (default: a few grid steps of slope).
    Patches stretch along the nearly tangent residual curves, so a
    centroid would drift; the best node stays within about ``h``.
    """
    o, e = (np.asarray(p, float) for p in v)
    Q0 = np.asarray(Q0, float)
    ns = core.norm_squared(geom, (o, e))
    ts = np.arange(lo[0], hi[0] + h / 2, h)
    xs = np.arange(lo[1], hi[1] + h / 2, h)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    Q1 = np.stack([T, X], axis=-1)
    with np.errstate(invalid="ignore"):
        sp = core.scalar_product(geom, (o, e), (np.broadcast_to(Q0, Q1.shape), Q1))
        nq = 2 * np.asarray(core.sigma(geom, Q0, Q1))
    r = np.maximum(np.abs(sp - ns), np.abs(nq - ns)) / abs(ns)
    accept = accept if accept is not None else 8 * h
    mask = r <= accept
    labels, n = label(mask)
    centers = []
    for k in range(1, n + 1):
        sel = labels == k
        best = np.argmin(r[sel])
        centers.append([T[sel][best], X[sel][best]])
    return np.array(sorted(centers, key=lambda c: c[1]))


def grid_shortest_path(center, radius, P0, P1, h=0.01, reach=5, pad=1.0):
    """Shortest path avoiding an open disk, by Dijkstra on a grid graph.

    Every node is joined to all nodes within ``reach`` steps whose
    straight connection misses the disk, which keeps the angular bias
    of the lattice small.
    """
    P0, P1, c = (np.asarray(p, float) for p in (P0, P1, center))
    lo = np.minimum(P0, P1).min() - pad - radius
    hi = np.maximum(P0, P1).max() + pad + radius
    lo = np.minimum(lo, c - radius - pad).min()
    hi = np.maximum(hi, c + radius + pad).max()
    ax = np.arange(lo, hi + h / 2, h)
    n = len(ax)
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    pts = np.stack([ax[I], ax[J]], axis=-1).reshape(-1, 2)
    free = np.linalg.norm(pts - c, axis=-1) >= radius
    offsets = [(a, b) for a in range(-reach, reach + 1) for b in range(0, reach + 1)
               if (b > 0 or a > 0) and math.gcd(abs(a), b) == 1]
    rows, cols, wts = [], [], []
    idx = np.arange(n * n).reshape(n, n)
    for a, b in offsets:
        i0, i1 = max(0, -a), min(n, n - a)
        j0, j1 = 0, n - b
        src = idx[i0:i1, j0:j1].ravel()
        dst = idx[i0 + a:i1 + a, j0 + b:j1 + b].ravel()
        p, q = pts[src], pts[dst]
        seg = q - p
        t = np.clip(np.sum((c - p) * seg, axis=-1) / np.sum(seg * seg, axis=-1), 0, 1)
        clear = np.linalg.norm(p + t[:, None] * seg - c, axis=-1) >= radius
        ok = free[src] & free[dst] & clear
        rows.append(src[ok])
        cols.append(dst[ok])
        wts.append(np.full(ok.sum(), h * math.hypot(a, b)))
    rows, cols, wts = map(np.concatenate, (rows, cols, wts))
    graph = coo_matrix((wts, (rows, cols)), shape=(n * n, n * n)).tocsr()

    def nearest(P):
        return int(idx[np.argmin(np.abs(ax - P[0])), np.argmin(np.abs(ax - P[1]))])

    dist = dijkstra(graph, directed=False, indices=nearest(P0))
    return float(dist[nearest(P1)])
