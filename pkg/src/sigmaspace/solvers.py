"""Vectorized multistart damped Newton iteration.

Every start is iterated independently but all of them are advanced in
one array operation. Systems may be rectangular: the step is the
minimum-norm solution of the linearized system (pseudo-inverse), so an
underdetermined system is driven onto its solution manifold near the
start point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class NewtonResult:
    x: np.ndarray          # (m, n) final iterates
    residual: np.ndarray   # (m,) final residual sup-norm
    converged: np.ndarray  # (m,) residual <= tol
    iterations: int


def fd_jacobian(fun, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian for a batch of points: ``(m, k, n)``."""
    m, n = x.shape
    cols = []
    for i in range(n):
        step = np.zeros_like(x)
        step[:, i] = h
        cols.append((fun(x + step) - fun(x - step)) / (2.0 * h[:, None]))
    return np.stack(cols, axis=-1)


def multistart_newton(fun, starts, tol: float = 1e-10, max_iter: int = 60,
                      rel_step: float = 1e-7, xtol: float = 1e-15,
                      indexed: bool = False) -> NewtonResult:
    """Solve ``fun(x) = 0`` from each row of ``starts``.

    ``fun`` maps an ``(m, n)`` array to ``(m, k)``. Iteration of a start
    stops when its step falls below ``xtol`` (relative), when no damped
    step reduces the residual, or after ``max_iter`` iterations; it is
    reported converged when its residual sup-norm is at most ``tol``.
    Starting points where ``fun`` is not finite are dropped as failed.
    With ``indexed=True`` it is called as ``fun(x, rows)``, ``rows`` being
    the indices of the starts in ``x``, so per-start data can be used.
    """
    x = np.array(starts, dtype=float, copy=True)
    if x.ndim != 2:
        raise ValueError("starts must be a 2-D array")
    call = fun if indexed else (lambda y, rows: fun(y))
    F = call(x, np.arange(len(x)))
    r = np.max(np.abs(F), axis=-1)
    r = np.where(np.isfinite(r), r, np.inf)
    active = np.isfinite(r)
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        h = rel_step * np.maximum(1.0, np.max(np.abs(xa), axis=-1))
        J = fd_jacobian(lambda y: call(y, idx), xa, h)
        step = -np.einsum("mnk,mk->mn", np.linalg.pinv(J, rcond=1e-13), F[idx])
        alpha = np.ones(idx.size)
        done = np.zeros(idx.size, dtype=bool)
        x_new = xa.copy()
        F_new = F[idx].copy()
        r_new = r[idx].copy()
        for _ in range(30):
            pending = ~done
            if not pending.any():
                break
            trial = xa[pending] + alpha[pending, None] * step[pending]
            Ft = call(trial, idx[pending])
            rt = np.max(np.abs(Ft), axis=-1)
            better = np.isfinite(rt) & (rt < r[idx][pending])
            sel = np.flatnonzero(pending)[better]
            x_new[sel], F_new[sel], r_new[sel] = trial[better], Ft[better], rt[better]
            done[sel] = True
            alpha[pending & ~done] *= 0.5
        moved = np.max(np.abs(x_new - xa), axis=-1)
        x[idx], F[idx], r[idx] = x_new, F_new, r_new
        scale = np.maximum(1.0, np.max(np.abs(xa), axis=-1))
        stop = ~done | (moved <= xtol * scale) | (r_new == 0.0)
        active[idx[stop]] = False
    return NewtonResult(x, r, r <= tol, it)
