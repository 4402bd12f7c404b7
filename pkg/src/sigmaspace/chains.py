"""Stochastic world chains in deformed Minkowski geometry.

A chain grows one link at a time. The next link is drawn uniformly from
the set of vectors, attached at the current endpoint, that are
equivalent to a reference link. With ``d > 0`` that set is a sphere in
the rest frame of the reference link (two points in 1+1), so chains are
random walks.

Two reference rules are offered:

``"fixed"`` (default)
    the initial link carried to the current endpoint. Increments are
    i.i.d., so the spatial variance grows linearly in the step count.
``"previous"``
    the link just added. Each step boosts the link by a random rapidity,
    so the spread grows much faster than linearly.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import GeometryError, GeometrySpec
from .multivariance import SolverConfig, solve_equivalent

RULES = ("fixed", "previous")
METHODS = ("closed_form", "solver")


def _deformed_params(geom: GeometrySpec):
    if geom.kind not in ("deformed_minkowski", "minkowski"):
        raise GeometryError("world chains need a Minkowski-family geometry")
    return float(geom.params.get("d", 0.0)), float(geom.params["c"])


def equivalent_displacements(link_disp, directions, d: float, c: float = 1.0) -> np.ndarray:
    """Displacements ``b`` with ``(Q0, Q0 + b)`` equivalent to an adjacent link.

    Parameters
    ----------
    link_disp : array_like, shape (..., n)
        Timelike displacement ``a`` of the link ending at ``Q0``.
    directions : array_like, shape (..., n - 1)
        Unit spatial directions in the rest frame of ``a``. In 1+1 these
        are ``+1`` or ``-1``.
    d, c : float
        Deformation and light speed.

    Returns
    -------
    ndarray, shape (..., n)

    Notes
    -----
    With ``m = sigma_M(a)`` the equations reduce to ``B(a, b) = 2m + 3d``
    and ``sigma_M(b) = m``, where ``B`` is the Minkowski bilinear form.
    In the rest frame ``b`` has time part ``(2m + 3d) / sqrt(2m)`` (in
    units of ``c t``) and spatial length ``sqrt(b_t^2 - 2m)``; the result
    is boosted back.
    """
    a = np.asarray(link_disp, dtype=float)
    nvec = np.asarray(directions, dtype=float)
    if a.shape[-1] < 2:
        raise GeometryError("multivariant links need at least one spatial dimension")
    at, ax = c * a[..., 0], a[..., 1:]
    two_m = at * at - np.sum(ax * ax, axis=-1)
    if np.any(two_m <= 0) or np.any(at <= 0):
        raise GeometryError("chain links must be future-pointing timelike")
    tau = np.sqrt(two_m)
    bt_rest = (two_m + 3.0 * d) / tau
    y = np.sqrt(np.maximum(bt_rest**2 - two_m, 0.0))[..., None] * nvec
    gamma = at / tau
    w = ax / tau[..., None]
    wy = np.sum(w * y, axis=-1)
    bt = gamma * bt_rest + wy
    bx = y + w * (bt_rest + wy / (gamma + 1.0))[..., None]
    return np.concatenate([(bt / c)[..., None], bx], axis=-1)


def _random_directions(rng: np.random.Generator, size: int, n_space: int) -> np.ndarray:
    if n_space == 1:
        return rng.choice([-1.0, 1.0], size=(size, 1))
    g = rng.standard_normal((size, n_space))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def chain_step(geom: GeometrySpec, link, rng: np.random.Generator,
               method: str = "closed_form", config: SolverConfig | None = None) -> np.ndarray:
    """Sample the next chain point after ``link``.

    The new link starts at ``link.end`` and is equivalent to ``link``.
    ``method="solver"`` draws uniformly among the numerically found
    solution representatives instead of using the closed form.
    """
    d, c = _deformed_params(geom)
    p0, p1 = core.as_vector(geom, link)
    if method == "closed_form":
        direction = _random_directions(rng, 1, geom.dim - 1)[0]
        return p1 + equivalent_displacements(p1 - p0, direction, d, c)
    if method == "solver":
        sols = solve_equivalent(geom, (p0, p1), p1, config).solutions
        if not len(sols):
            raise GeometryError("no equivalent continuation found")
        return sols[int(rng.integers(len(sols)))].copy()
    raise ValueError(f"method must be one of {METHODS}")


@dataclass
class EnsembleStats:
    """Spread of an ensemble of world chains.

    ``variance_curve`` has rows ``(step, variance)``: the spatial
    variance of the chain endpoints after each step, summed over axes.
    ``axis_variance`` keeps the per-axis values. The slope is a least
    squares fit over the second half of the steps; its standard error
    comes from the scatter of slopes fitted to independent batches of
    chains.
    """

    n_steps: int
    n_chains: int
    d: float
    rule: str
    seed: int
    variance_curve: np.ndarray
    axis_variance: np.ndarray
    fitted_slope: float
    slope_stderr: float
    r_squared: float
    max_link_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.variance_curve, delimiter=",", fmt=["%d", "%.17g"],
                   header="step,variance", comments="")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps, "n_chains": self.n_chains, "d": self.d,
            "rule": self.rule, "seed": self.seed,
            "variance_curve": self.variance_curve.tolist(),
            "axis_variance": self.axis_variance.tolist(),
            "fitted_slope": self.fitted_slope, "slope_stderr": self.slope_stderr,
            "r_squared": self.r_squared, "max_link_residual": self.max_link_residual,
            "meta": dict(self.meta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "EnsembleStats":
        kw = dict(data)
        kw["variance_curve"] = np.asarray(kw["variance_curve"], dtype=float).reshape(-1, 2)
        kw["axis_variance"] = np.asarray(kw["axis_variance"], dtype=float)
        return cls(**kw)


def _fit(steps: np.ndarray, var: np.ndarray):
    """Least squares slope of ``var`` against ``steps`` and its R^2."""
    A = np.column_stack([steps, np.ones_like(steps)])
    coef, *_ = np.linalg.lstsq(A, var, rcond=None)
    resid = var - A @ coef
    ss_tot = float(np.sum((var - var.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def simulate_chains(geom: GeometrySpec, init_link, n_steps: int, n_chains: int,
                    seed: int = 0, rule: str = "fixed", check_tol: float = 1e-6):
    """Grow ``n_chains`` independent chains for ``n_steps`` links each.

    Returns ``(points, max_residual)`` with ``points`` of shape
    ``(n_steps + 1, n_chains, dim)``, starting at the end of
    ``init_link``. Chain ``i`` draws from the ``i``-th generator spawned
    from ``seed``, so it does not depend on how many chains are run.
    Every new link is re-checked with `core.is_equivalent` at
    ``check_tol``; a failure raises.
    """
    if n_steps < 1 or n_chains < 1:
        raise ValueError("need n_steps >= 1 and n_chains >= 1")
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}")
    d, c = _deformed_params(geom)
    p0, p1 = core.as_vector(geom, init_link)
    n_space = geom.dim - 1
    if n_space < 1:
        raise GeometryError("multivariant links need at least one spatial dimension")
    children = np.random.SeedSequence(seed).spawn(n_chains)
    dirs = np.stack([_random_directions(np.random.default_rng(s), n_steps, n_space)
                     for s in children], axis=1)  # (n_steps, n_chains, n_space)

    ref = np.broadcast_to(p1 - p0, (n_chains, geom.dim)).copy()
    pos = np.broadcast_to(p1, (n_chains, geom.dim)).copy()
    out = np.empty((n_steps + 1, n_chains, geom.dim))
    out[0] = pos
    worst = 0.0
    for k in range(n_steps):
        step = equivalent_displacements(ref, dirs[k], d, c)
        new = pos + step
        check = core.is_equivalent(geom, (pos - ref, pos), (pos, new), check_tol)
        if not np.all(check.holds):
            raise GeometryError(f"link {k + 1} failed the equivalence re-check")
        worst = max(worst, float(np.max(np.abs(check.residual))))
        pos = new
        if rule == "previous":
            ref = step
        out[k + 1] = pos
    return out, worst


def simulate_ensemble(geom: GeometrySpec, init_link, n_steps: int, n_chains: int,
                      seed: int = 0, rule: str = "fixed", n_batches: int = 20,
                      check_tol: float = 1e-6) -> EnsembleStats:
    """Spatial spread of an ensemble of chains from `simulate_chains`.

    The slope is fitted over steps ``[n_steps / 2, n_steps]``; its
    standard error is the scatter of slopes fitted to ``n_batches``
    disjoint batches of chains, divided by ``sqrt(n_batches)``.
    """
    if n_chains < 2:
        raise ValueError("need n_chains >= 2")
    pts, worst = simulate_chains(geom, init_link, n_steps, n_chains, seed, rule, check_tol)
    spatial = pts[..., 1:]
    axis_var = np.var(spatial, axis=1, ddof=1)
    total = axis_var.sum(axis=-1)
    steps = np.arange(n_steps + 1, dtype=float)
    tail = steps >= n_steps / 2
    slope, r2 = _fit(steps[tail], total[tail])
    nb = min(n_batches, n_chains // 2)
    if nb >= 2:
        batches = np.array_split(spatial, nb, axis=1)
        slopes = [_fit(steps[tail], np.var(b, axis=1, ddof=1).sum(-1)[tail])[0] for b in batches]
        stderr = float(np.std(slopes, ddof=1) / np.sqrt(nb))
    else:
        stderr = float("nan")
    p0, p1 = core.as_vector(geom, init_link)
    return EnsembleStats(
        n_steps, n_chains, float(geom.params.get("d", 0.0)), rule, seed,
        np.column_stack([steps, total]), axis_var, slope, stderr, r2, worst,
        {"init_link": [p0.tolist(), p1.tolist()], "n_batches": nb, "c": geom.params["c"]},
    )


def random_walk_slope(d: float, c: float = 1.0, link_sigma_m: float = 0.5) -> float:
    """Spatial variance gained per step under the fixed rule.

    Equal to ``b_t^2 - 2m`` for a reference link at rest with
    ``sigma_M = m``; ``6d + 9d^2`` for the unit link with ``c = 1``.
    """
    two_m = 2.0 * link_sigma_m
    bt = (two_m + 3.0 * d) / np.sqrt(two_m)
    return float(bt * bt - two_m)
