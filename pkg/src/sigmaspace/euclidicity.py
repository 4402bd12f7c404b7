"""Numerical test battery for n-dimensional proper Euclidean σ-spaces.

Three conditions are probed by sampling:

I.   some n vectors at a point have nonzero Gram determinant ``F_n``
     while every ``n + 1`` vectors have ``F_{n+1} = 0``;
II.  with the covariant coordinates ``x_i(P) = (P0Pi . P0P)`` of a basis,
     ``sigma(P, Q)`` equals ``1/2 g^ik dx_i dx_k``;
III. every coordinate tuple is taken by exactly one point.

Gram determinants are normalized by the Hadamard bound (product of the
Gram matrix row norms), so ``|F| / scale`` lies in ``[0, 1]`` for any
signature.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import core
from .core import GeometryError, GeometrySpec
from .solvers import multistart_newton

VERDICTS = ("euclidean", "not_euclidean", "inconclusive")


@dataclass
class Basis:
    """Origin ``P0`` and axis points ``P1..Pn`` with their metric tensors.

    ``g[i, k] = (P0Pi . P0Pk)`` and ``g_inv`` is its inverse.
    """

    origin: np.ndarray
    points: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gram_det: float
    normalized_det: float

    @property
    def n(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data) -> "Basis":
        kw = dict(data)
        for k in ("origin", "points", "g", "g_inv"):
            kw[k] = np.asarray(kw[k], dtype=float)
        return cls(**kw)


@dataclass
class ConditionResult:
    passed: bool | None
    worst_residual: float
    witness: dict | None = None
    samples: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data) -> "ConditionResult":
        return cls(**data)


@dataclass
class EuclidicityReport:
    dim_tested: int
    condition_I: ConditionResult
    condition_II: ConditionResult
    condition_III: ConditionResult
    samples_used: int
    verdict: str
    basis: Basis | None = None

    def to_dict(self) -> dict:
        return {
            "dim_tested": self.dim_tested,
            "condition_I": self.condition_I.to_dict(),
            "condition_II": self.condition_II.to_dict(),
            "condition_III": self.condition_III.to_dict(),
            "samples_used": self.samples_used,
            "verdict": self.verdict,
            "basis": None if self.basis is None else self.basis.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "EuclidicityReport":
        kw = dict(data)
        for k in ("condition_I", "condition_II", "condition_III"):
            kw[k] = ConditionResult.from_dict(kw[k])
        if kw.get("basis") is not None:
            kw["basis"] = Basis.from_dict(kw["basis"])
        return cls(**kw)


@dataclass(frozen=True)
class CoordinateGrid:
    """Targets for condition III: a box of coordinate tuples.

    ``lo``/``hi`` are scalars or per-axis bounds in coordinate space;
    ``starts`` Newton starts per target are drawn from ``search_box``
    (point space, default: the sampling box doubled).
    """

    lo: float | tuple = -1.0
    hi: float | tuple = 1.0
    spacing: float = 0.25
    starts: int = 64
    tol: float = 1e-10
    seed: int = 0
    search_box: tuple | None = None

    def targets(self, n: int) -> np.ndarray:
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,))
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,))
        if not self.spacing > 0 or np.any(hi < lo):
            return np.empty((0, n))
        axes = [np.arange(a, b + 0.5 * self.spacing, self.spacing) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


# sampling

def sampling_box(geom: GeometrySpec):
    """Default region where random points are drawn."""
    if geom.kind == "riemannian_chart":
        if geom.params["chart"] == "poincare_disk":
            return -np.full(2, 0.6), np.full(2, 0.6)
        return -np.ones(2), np.ones(2)
    if geom.kind == "punctured_euclidean":
        c = np.asarray(geom.params["center"])
        r = geom.params["radius"]
        return c - 3 * r, c + 3 * r
    return -np.ones(geom.dim), np.ones(geom.dim)


def sample_points(geom: GeometrySpec, rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform points in the sampling box, kept inside the geometry's domain."""
    lo, hi = sampling_box(geom)
    shape = tuple(np.atleast_1d(shape))
    P = lo + (hi - lo) * rng.random(shape + (geom.dim,))
    if geom.kind == "punctured_euclidean":
        c = np.asarray(geom.params["center"])
        r = geom.params["radius"]
        inside = np.linalg.norm(P - c, axis=-1) <= r
        # push hole points radially out to the annulus r..2r
        off = P[inside] - c
        rad = np.linalg.norm(off, axis=-1, keepdims=True)
        off = np.where(rad > 0, off / np.where(rad > 0, rad, 1), [1.0, 0.0])
        P[inside] = c + off * (r * (1.0 + rad / r))
    return P


def _timelike_tuples(geom: GeometrySpec, rng, m: int, k: int) -> np.ndarray:
    """``m`` chains of ``k`` points, each step future timelike."""
    c = geom.params["c"]
    n_space = geom.dim - 1
    steps = np.empty((m, k - 1, geom.dim))
    steps[..., 0] = rng.uniform(0.5, 1.0, (m, k - 1))
    if n_space:
        dirs = rng.standard_normal((m, k - 1, n_space))
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        speed = 0.9 * c * rng.random((m, k - 1, 1)) ** (1.0 / n_space)
        steps[..., 1:] = dirs * speed * steps[..., :1]
    start = rng.uniform(-0.5, 0.5, (m, 1, geom.dim))
    return np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)


def _normalized_gram(geom: GeometrySpec, P0, basis):
    G = core.gram_matrix(geom, P0, basis)
    det = np.linalg.det(G)
    scale = np.prod(np.linalg.norm(G, axis=-1), axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(scale > 0, np.abs(det) / np.where(scale > 0, scale, 1.0), 0.0)
    return G, det, ratio


# operations

def find_basis(geom: GeometrySpec, n: int, samples: int = 200, seed: int = 0,
               threshold: float = 1e-6, timelike: bool | None = None) -> Basis | None:
    """Search sampled ``(n + 1)``-tuples for the best-conditioned basis.

    Returns the tuple maximizing ``|F_n| / scale``, or ``None`` when no
    tuple exceeds ``threshold``. For Minkowski-family geometries
    (``timelike`` defaults to true there) tuples are future timelike
    chains, so every separation in the tuple is real.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if timelike is None:
        timelike = geom.is_minkowski_family
    if timelike:
        tuples = _timelike_tuples(geom, rng, samples, n + 1)
    else:
        tuples = sample_points(geom, rng, (samples, n + 1))
    G, det, ratio = _normalized_gram(geom, tuples[:, 0], tuples[:, 1:])
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    best = int(np.argmax(ratio))
    if not ratio[best] > threshold:
        return None
    g = G[best]
    return Basis(tuples[best, 0].copy(), tuples[best, 1:].copy(), g, np.linalg.inv(g),
                 float(det[best]), float(ratio[best]))


def coordinates(geom: GeometrySpec, basis: Basis, P) -> np.ndarray:
    """Covariant coordinates ``x_i(P) = (P0Pi . P0P)``; shape ``(..., n)``."""
    P = core.as_points(geom, P)
    Pb = P[..., None, :]
    s0i = np.asarray(core.sigma(geom, basis.origin, basis.points))
    s0p = np.asarray(core.sigma(geom, basis.origin, P))[..., None]
    sip = np.asarray(core.sigma(geom, basis.points, Pb))
    return s0i + s0p - sip


def check_condition_I(geom: GeometrySpec, n: int, samples: int = 500, seed: int = 0,
                      tol: float = 1e-6, basis: Basis | None = None) -> ConditionResult:
    """Existence of a basis with ``F_n != 0`` and vanishing ``F_{n+1}`` on samples."""
    if basis is None:
        basis = find_basis(geom, n, seed=seed, threshold=tol)
    if basis is None:
        return ConditionResult(False, 0.0, None, 0, "no tuple with nonzero F_n found")
    rng = np.random.default_rng(seed + 1)
    tuples = sample_points(geom, rng, (samples, n + 2))
    _, det, ratio = _normalized_gram(geom, tuples[:, 0], tuples[:, 1:])
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    worst = int(np.argmax(ratio))
    passed = bool(ratio[worst] <= tol)
    witness = None if passed else {"tuple": tuples[worst].tolist(), "F": float(det[worst])}
    return ConditionResult(passed, float(ratio[worst]), witness, samples)


def check_condition_II(geom: GeometrySpec, basis: Basis, samples: int = 500, seed: int = 0,
                       tol: float = 1e-6) -> ConditionResult:
    """Compare ``sigma(P, Q)`` with the quadratic form of coordinate differences."""
    rng = np.random.default_rng(seed + 2)
    P, Q = np.moveaxis(sample_points(geom, rng, (samples, 2)), 1, 0)
    dx = coordinates(geom, basis, P) - coordinates(geom, basis, Q)
    quad = 0.5 * np.einsum("mi,ik,mk->m", dx, basis.g_inv, dx)
    s = np.asarray(core.sigma(geom, P, Q))
    denom = np.maximum(np.abs(s), np.abs(quad))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(denom > 0, np.abs(s - quad) / np.where(denom > 0, denom, 1.0), 0.0)
    worst = int(np.argmax(rel))
    passed = bool(rel[worst] <= tol)
    witness = None if passed else {"P": P[worst].tolist(), "Q": Q[worst].tolist(),
                                   "sigma": float(s[worst]), "quadratic_form": float(quad[worst])}
    return ConditionResult(passed, float(rel[worst]), witness, samples)


def check_condition_III(geom: GeometrySpec, basis: Basis,
                        grid: CoordinateGrid | None = None) -> ConditionResult:
    """Sampled bijectivity of the coordinate map on a box of targets.

    For each target tuple the equations ``x(P) = target`` are solved by
    multistart Newton. The condition fails if a target has two preimages
    farther apart than ``1e3 * grid.tol`` (relative); it is inconclusive
    if some target has none or the grid is empty.
    """
    grid = grid or CoordinateGrid()
    n = basis.n
    targets = grid.targets(n)
    if not len(targets):
        return ConditionResult(None, 0.0, None, 0, "empty target grid")
    if grid.search_box is None:
        lo, hi = sampling_box(geom)
        mid, half = 0.5 * (lo + hi), (hi - lo)
        lo, hi = mid - half, mid + half
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in grid.search_box)
    if geom.kind == "riemannian_chart" and geom.params["chart"] == "poincare_disk":
        lo, hi = np.maximum(lo, -0.95), np.minimum(hi, 0.95)
    rng = np.random.default_rng(grid.seed)
    m = grid.starts
    starts = lo + (hi - lo) * rng.random((len(targets) * m, geom.dim))
    tgt = np.repeat(targets, m, axis=0)
    scale = np.maximum(1.0, np.max(np.abs(basis.g)))

    def fun(X, rows):
        out = np.full((len(X), n), np.nan)
        ok = np.ones(len(X), dtype=bool)
        if geom.kind == "riemannian_chart":
            ok = geom.chart().contains(X)
        T = tgt[rows]
        try:
            with np.errstate(all="ignore"):
                out[ok] = (coordinates(geom, basis, X[ok]) - T[ok]) / scale
        except core.DomainError:
            for i in np.flatnonzero(ok):
                try:
                    out[i] = (coordinates(geom, basis, X[i]) - T[i]) / scale
                except core.DomainError:
                    pass
        return out

    res = multistart_newton(fun, starts, tol=grid.tol, indexed=True)
    missing, worst_sep, witness = 0, 0.0, None
    sep_tol = 1e3 * grid.tol * max(1.0, float(np.max(np.abs(hi - lo))))
    for j in range(len(targets)):
        sl = slice(j * m, (j + 1) * m)
        X = res.x[sl][res.converged[sl]]
        if not len(X):
            missing += 1
            continue
        d = np.max(np.abs(X - X[0]), axis=-1)
        k = int(np.argmax(d))
        if d[k] > worst_sep:
            worst_sep = float(d[k])
            if d[k] > sep_tol:
                witness = {"target": targets[j].tolist(), "preimages": [X[0].tolist(), X[k].tolist()]}
    if witness is not None:
        return ConditionResult(False, worst_sep, witness, len(targets),
                               "sampled: a target has several preimages")
    if missing:
        return ConditionResult(None, worst_sep, None, len(targets),
                               f"sampled: {missing} targets without a preimage found")
    return ConditionResult(True, worst_sep, None, len(targets), "sampled: unique preimages")


def euclidicity_report(geom: GeometrySpec, n: int | None = None, samples: int = 500,
                       seed: int = 0, grid: CoordinateGrid | None = None,
                       tol: float = 1e-6) -> EuclidicityReport:
    """Run conditions I to III for dimension ``n`` (default: ``geom.dim``).

    The verdict is ``euclidean`` only if all three conditions pass,
    ``not_euclidean`` if any fails, and ``inconclusive`` otherwise.
    Deterministic in ``(geom, n, samples, seed, grid)``.
    """
    n = geom.dim if n is None else n
    grid = grid or CoordinateGrid(seed=seed)
    basis = find_basis(geom, n, seed=seed, threshold=tol)
    c1 = check_condition_I(geom, n, samples, seed, tol, basis)
    if basis is None:
        skipped = ConditionResult(None, 0.0, None, 0, "no basis")
        return EuclidicityReport(n, c1, skipped, skipped, c1.samples, "not_euclidean", None)
    c2 = check_condition_II(geom, basis, samples, seed, tol)
    c3 = check_condition_III(geom, basis, grid)
    results = (c1.passed, c2.passed, c3.passed)
    if all(r is True for r in results):
        verdict = "euclidean"
    elif any(r is False for r in results):
        verdict = "not_euclidean"
    else:
        verdict = "inconclusive"
    used = c1.samples + c2.samples + c3.samples
    return EuclidicityReport(n, c1, c2, c3, used, verdict, basis)
