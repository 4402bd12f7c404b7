"""World functions and the quantities derived from them.

A geometry is described by a single symmetric function ``sigma(P, Q)``
(half the squared distance) with ``sigma(P, P) = 0``. Scalar products,
moduli, collinearity, parallelism and equivalence of vectors are all
computed from sigma alone; nothing here looks at coordinates except the
built-in world-function families themselves.

All evaluation functions broadcast over leading axes: a point is an
array whose last axis has length ``geom.dim``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping, NamedTuple

import numpy as np

KINDS = (
    "euclidean",
    "minkowski",
    "deformed_minkowski",
    "riemannian_chart",
    "punctured_euclidean",
)

DEFAULT_TOL = 1e-9


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class DomainError(GeometryError):
    """A point lies outside the domain of the world function."""


class ImaginaryMagnitudeError(GeometryError):
    """The modulus of a vector with negative squared length was requested."""


@dataclass(frozen=True)
class GeometrySpec:
    """Declarative description of a sigma-space.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    dim : int
        Number of coordinates of a point. For the Minkowski family the
        time coordinate comes first.
    params : mapping
        Kind-specific parameters:

        * ``minkowski``: ``c`` (light speed, default 1).
        * ``deformed_minkowski``: ``c`` and ``d`` (deformation, default 0).
        * ``riemannian_chart``: ``chart`` (``poincare_disk``, ``sphere_2d``
          or ``flat_patch``), ``method`` (``geodesic`` or ``exact``) and
          chart parameters such as ``radius``.
        * ``punctured_euclidean``: ``center`` and ``radius`` of the hole.
    """

    kind: str
    dim: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown geometry kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise GeometryError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        params = dict(self.params)
        if self.kind in ("minkowski", "deformed_minkowski"):
            params["c"] = float(params.get("c", 1.0))
            if not params["c"] > 0:
                raise GeometryError("light speed c must be positive")
        if self.kind == "deformed_minkowski":
            params["d"] = float(params.get("d", 0.0))
            if not params["d"] >= 0:
                raise GeometryError("deformation d must be nonnegative")
        if self.kind == "riemannian_chart":
            params.setdefault("chart", "poincare_disk")
            params.setdefault("method", "geodesic")
            if params["method"] not in ("geodesic", "exact"):
                raise GeometryError(f"unknown sigma method {params['method']!r}")
        if self.kind == "punctured_euclidean":
            if self.dim != 2:
                raise GeometryError("punctured_euclidean is only defined in the plane")
            params["center"] = tuple(float(c) for c in params.get("center", (0.0, 0.0)))
            params["radius"] = float(params.get("radius", 1.0))
            if len(params["center"]) != 2:
                raise GeometryError("hole center must have two coordinates")
            if not params["radius"] > 0:
                raise GeometryError("hole radius must be positive")
        object.__setattr__(self, "params", MappingProxyType(params))

    # convenience constructors

    @classmethod
    def euclidean(cls, dim: int) -> "GeometrySpec":
        return cls("euclidean", dim)

    @classmethod
    def minkowski(cls, dim: int, c: float = 1.0) -> "GeometrySpec":
        return cls("minkowski", dim, {"c": c})

    @classmethod
    def deformed_minkowski(cls, dim: int, d: float, c: float = 1.0) -> "GeometrySpec":
        return cls("deformed_minkowski", dim, {"d": d, "c": c})

    @classmethod
    def riemannian_chart(cls, chart: str, method: str = "geodesic", **chart_params) -> "GeometrySpec":
        return cls("riemannian_chart", 2, {"chart": chart, "method": method, **chart_params})

    @classmethod
    def punctured_euclidean(cls, center=(0.0, 0.0), radius: float = 1.0) -> "GeometrySpec":
        return cls("punctured_euclidean", 2, {"center": center, "radius": radius})

    def with_params(self, **updates) -> "GeometrySpec":
        return GeometrySpec(self.kind, self.dim, {**self.params, **updates})

    @property
    def is_minkowski_family(self) -> bool:
        return self.kind in ("minkowski", "deformed_minkowski")

    def chart(self):
        """The `Chart` backing a ``riemannian_chart`` geometry."""
        if self.kind != "riemannian_chart":
            raise GeometryError(f"{self.kind} geometry has no Riemannian chart")
        from .riemann import Chart

        extra = {k: v for k, v in self.params.items() if k not in ("chart", "method")}
        return Chart(self.params["chart"], extra)

    # serialization

    def to_dict(self) -> dict:
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {"kind": self.kind, "dim": self.dim, "params": params}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeometrySpec":
        try:
            return cls(data["kind"], data["dim"], data.get("params") or {})
        except KeyError as exc:
            raise GeometryError(f"geometry spec is missing field {exc.args[0]!r}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GeometrySpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GeometryError(f"malformed geometry JSON: {exc}") from None
        if not isinstance(data, dict):
            raise GeometryError("geometry JSON must be an object")
        return cls.from_dict(data)


class VectorPQ(NamedTuple):
    """Ordered pair of points; the vector from ``origin`` to ``end``."""

    origin: np.ndarray
    end: np.ndarray


class Check(NamedTuple):
    """Outcome of a tolerance test: the verdict and the raw residual."""

    holds: Any
    residual: Any

    def __bool__(self):
        return bool(np.all(self.holds))


class FactorizationCheck(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def as_points(geom: GeometrySpec, P) -> np.ndarray:
    """Validate coordinates against ``geom`` and return them as a float array."""
    P = np.asarray(P, dtype=float)
    if P.ndim == 0 or P.shape[-1] != geom.dim:
        raise GeometryError(
            f"point has {P.shape[-1] if P.ndim else 0} coordinates, geometry dim is {geom.dim}"
        )
    if not np.all(np.isfinite(P)):
        raise GeometryError("point coordinates must be finite")
    return P


def as_vector(geom: GeometrySpec, v) -> VectorPQ:
    origin, end = v
    return VectorPQ(as_points(geom, origin), as_points(geom, end))


def _scalar(x):
    return np.asarray(x).item() if np.ndim(x) == 0 else x


def minkowski_sigma(P, Q, c: float = 1.0):
    diff = np.asarray(Q, dtype=float) - np.asarray(P, dtype=float)
    return 0.5 * ((c * diff[..., 0]) ** 2 - np.sum(diff[..., 1:] ** 2, axis=-1))


def sigma(geom: GeometrySpec, P, Q):
    """World function ``sigma(P, Q)``.

    Euclidean: half the squared coordinate distance. Minkowski:
    ``(c^2 dt^2 - |dx|^2) / 2``. Deformed Minkowski adds
    ``d * sign(sigma_M)`` with ``sign(0) = 0``, which keeps
    ``sigma(P, P) = 0`` and leaves null separations at zero.
    """
    P = as_points(geom, P)
    Q = as_points(geom, Q)
    kind = geom.kind
    if kind == "euclidean":
        out = 0.5 * np.sum((Q - P) ** 2, axis=-1)
    elif kind == "minkowski":
        out = minkowski_sigma(P, Q, geom.params["c"])
    elif kind == "deformed_minkowski":
        sm = minkowski_sigma(P, Q, geom.params["c"])
        out = sm + geom.params["d"] * np.sign(sm)
    elif kind == "riemannian_chart":
        from . import riemann

        out = riemann.chart_sigma(geom, P, Q)
    else:
        from .riemann import punctured_sigma

        out = punctured_sigma((geom.params["center"], geom.params["radius"]), P, Q)
    return _scalar(out)


def scalar_product(geom: GeometrySpec, v1, v2):
    """Scalar product of two vectors with arbitrary origins.

    ``(P0P1 . Q0Q1) = s(P0,Q1) + s(P1,Q0) - s(P0,Q0) - s(P1,Q1)``.
    With a shared origin this reduces to
    ``s(P0,P1) + s(P0,Q1) - s(P1,Q1)``.
    """
    p0, p1 = as_vector(geom, v1)
    q0, q1 = as_vector(geom, v2)
    return (sigma(geom, p0, q1) + sigma(geom, p1, q0)) - (sigma(geom, p0, q0) + sigma(geom, p1, q1))


def norm_squared(geom: GeometrySpec, v):
    p0, p1 = as_vector(geom, v)
    return 2.0 * sigma(geom, p0, p1)


def norm(geom: GeometrySpec, v):
    """Modulus ``sqrt(2 sigma)``; raises for vectors with negative squared length."""
    ns = norm_squared(geom, v)
    if np.any(np.asarray(ns) < 0):
        raise ImaginaryMagnitudeError(
            "vector has negative squared length; its modulus is imaginary"
        )
    return _scalar(np.sqrt(ns))


def gram_matrix(geom: GeometrySpec, P0, basis) -> np.ndarray:
    """Matrix of scalar products ``(P0Pi . P0Pk)`` for the points in ``basis``.

    ``basis`` has shape ``(..., n, dim)`` and ``P0`` shape ``(..., dim)``.
    """
    P0 = as_points(geom, P0)
    basis = as_points(geom, basis)
    if basis.ndim < 2:
        raise GeometryError("basis must be a list of points")
    s0 = np.asarray(sigma(geom, P0[..., None, :], basis))
    sik = np.asarray(sigma(geom, basis[..., :, None, :], basis[..., None, :, :]))
    return s0[..., :, None] + s0[..., None, :] - sik


def gram_det(geom: GeometrySpec, P0, basis):
    """Gram determinant ``F_n`` of the vectors ``P0Pi``."""
    return _scalar(np.linalg.det(gram_matrix(geom, P0, basis)))


def collinearity_residual(geom: GeometrySpec, v1, v2):
    """``(v1.v2)^2 - |v1|^2 |v2|^2``: the 2x2 Gram determinant with its sign flipped."""
    sp = scalar_product(geom, v1, v2)
    return sp * sp - norm_squared(geom, v1) * norm_squared(geom, v2)


def is_collinear(geom: GeometrySpec, v1, v2, tol: float = DEFAULT_TOL) -> Check:
    if not tol > 0:
        raise ValueError("tol must be positive")
    res = collinearity_residual(geom, v1, v2)
    scale = np.maximum(1.0, np.abs(norm_squared(geom, v1) * norm_squared(geom, v2)))
    return Check(_scalar(np.abs(res) <= tol * scale), res)


def is_parallel(geom: GeometrySpec, v1, v2, tol: float = DEFAULT_TOL) -> Check:
    """Signed parallelism ``(v1.v2) = |v1||v2|``; antiparallel vectors fail."""
    sp = scalar_product(geom, v1, v2)
    mods = norm(geom, v1) * norm(geom, v2)
    res = sp - mods
    scale = np.maximum(1.0, np.maximum(np.abs(sp), mods))
    return Check(_scalar(np.abs(res) <= tol * scale), _scalar(res))


def is_equivalent(geom: GeometrySpec, v1, v2, tol: float = DEFAULT_TOL) -> Check:
    """Vector equality: parallel with equal moduli.

    The residual is the larger of the parallelism residual and the
    difference of moduli.
    """
    par = is_parallel(geom, v1, v2, tol)
    n1, n2 = norm(geom, v1), norm(geom, v2)
    dmod = n1 - n2
    mod_ok = np.abs(dmod) <= tol * np.maximum(1.0, np.maximum(n1, n2))
    res = np.maximum(np.abs(par.residual), np.abs(dmod))
    return Check(_scalar(np.logical_and(par.holds, mod_ok)), _scalar(res))


def factorization_check(s01: float, s0R: float, s1R: float, coefficient: float = 2.0) -> FactorizationCheck:
    """Audit the factorization of the collinearity expression with shared origin.

    ``lhs = (s01 + s0R - s1R)^2 - 4 s01 s0R`` is
    ``(P0P1.P0R)^2 - |P0P1|^2 |P0R|^2`` written in sigma values;
    ``rhs = A(P0,P1,R) A(P0,R,P1) B`` with
    ``B = s1R - s0R - s01 - coefficient * sqrt(s01 s0R)``.
    Only ``coefficient = 2`` makes ``rhs`` equal ``lhs`` identically.
    """
    s = np.array([s01, s0R, s1R], dtype=float)
    if np.any(s < 0):
        raise DomainError("factorization requires nonnegative sigma values")
    r01, r0R, r1R = np.sqrt(s)
    lhs = (s01 + s0R - s1R) ** 2 - 4.0 * s01 * s0R
    a_inner = r0R + r1R - r01
    a_outer = r01 + r1R - r0R
    b = s1R - s0R - s01 - coefficient * np.sqrt(s01 * s0R)
    rhs = a_inner * a_outer * b
    return FactorizationCheck(float(lhs), float(rhs), float(lhs - rhs))


def factorization_check_points(geom: GeometrySpec, P0, P1, R, coefficient: float = 2.0) -> FactorizationCheck:
    return factorization_check(
        sigma(geom, P0, P1), sigma(geom, P0, R), sigma(geom, P1, R), coefficient
    )


def distance(geom: GeometrySpec, P, Q):
    """``rho = sqrt(2 sigma)``; raises where sigma is negative."""
    s = np.asarray(sigma(geom, P, Q))
    if np.any(s < 0):
        raise DomainError("negative world function: distance is undefined")
    return _scalar(np.sqrt(2.0 * s))


def triangle_defect(geom: GeometrySpec, P, Q, R):
    """``rho(P,Q) + rho(P,R) - rho(R,Q)``; nonnegative when the triangle axiom holds."""
    return distance(geom, P, Q) + distance(geom, P, R) - distance(geom, R, Q)


def inverse_metric(geom: GeometrySpec, x) -> np.ndarray:
    """Contravariant metric ``g^{ik}`` at ``x`` for the coordinate chart of ``geom``."""
    x = as_points(geom, x)
    if geom.kind in ("euclidean", "punctured_euclidean"):
        return np.eye(geom.dim)
    if geom.is_minkowski_family:
        diag = -np.ones(geom.dim)
        diag[0] = 1.0 / geom.params["c"] ** 2
        return np.diag(diag)
    return geom.chart().inverse_metric(x)
