"""Lasso and naive elastic-net fits by cyclic coordinate descent.

Objective (un-normalized, standardized data)::

    1/2 ||Y - X b||^2 + lam1 ||b||_1 + lam2/2 ||b||^2

``lam2 = 0`` is the Lasso.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from dlselect import _kernels
from dlselect.data import ActiveSet, Dataset
from dlselect.errors import DimensionMismatch, NotConverged

ZERO_RTOL = 64 * np.finfo(float).eps  # relative to max |beta_j|


@dataclass(frozen=True)
class SolverOptions:
    tol_obj: float = 1e-9
    # None: min(1e-7 * lambda_max, 1e-9 * max(lam1, lam2)).
    tol_kkt: float | None = None
    max_sweeps: int = 100_000
    order: tuple[int, ...] | None = None  # custom cyclic order; default 0..p-1
    active_set: bool = True  # iterate on the nonzero set between full sweeps
    kernel: str | None = None  # "cython" / "python"; None = import-time default

    def __post_init__(self):
        if not self.tol_obj > 0:
            raise ValueError("tol_obj must be > 0")
        if self.tol_kkt is not None and not self.tol_kkt > 0:
            raise ValueError("tol_kkt must be > 0")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


@dataclass(frozen=True, eq=False)
class LassoFit:
    beta: np.ndarray
    lam: float
    subgradient: np.ndarray | None
    iterations: int
    kkt_residual: float
    objective: float
    converged: bool
    tol_kkt: float
    lambda2: float = 0.0
    unique: bool | None = None
    objective_trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def support(self) -> ActiveSet:
        return ActiveSet.support(self.beta)


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return float(np.sign(z) * max(abs(z) - gamma, 0.0))


def lambda_max(ds: Dataset) -> float:
    """Smallest penalty at which beta = 0 is optimal: max_j |X_j'Y|."""
    return float(np.max(np.abs(ds.X.T @ ds.Y)))


def lasso_objective(ds: Dataset, beta, lam: float, lam2: float = 0.0) -> float:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (ds.p,):
        raise DimensionMismatch(f"beta has shape {beta.shape}, expected ({ds.p},)")
    r = ds.Y - ds.X @ beta
    return float(0.5 * (r @ r) + lam * np.abs(beta).sum() + 0.5 * lam2 * (beta @ beta))


def _kkt(X, Y, beta, lam1, lam2):
    """Return (residual, kkt_residual, X'r)."""
    r = Y - X @ beta
    g = X.T @ r - lam2 * beta
    on = beta != 0
    viol = np.where(on, np.abs(g - lam1 * np.sign(beta)), np.maximum(np.abs(g) - lam1, 0.0))
    return r, float(viol.max(initial=0.0)), g


def default_tol_kkt(lmax: float, lam1: float, lam2: float = 0.0) -> float:
    scale = max(lam1, lam2)
    tol = min(1e-7 * lmax, 1e-9 * scale) if scale > 0 else 1e-7 * lmax
    return max(tol, 1e-13 * (1.0 + lmax))


def _least_squares(ds: Dataset) -> LassoFit:
    beta, _, rank, _ = np.linalg.lstsq(ds.X, ds.Y, rcond=None)
    r = ds.Y - ds.X @ beta
    kkt = float(np.max(np.abs(ds.X.T @ r)))
    obj = 0.5 * float(r @ r)
    return LassoFit(
        beta=beta, lam=0.0, subgradient=None, iterations=0, kkt_residual=kkt,
        objective=obj, converged=True, tol_kkt=max(kkt, 1e-13), unique=bool(rank == ds.p),
        objective_trace=(obj,),
    )


def _coordinate_descent(ds, lam1, lam2, opts, beta0):
    X = np.asfortranarray(ds.X)
    Y = ds.Y
    p = ds.p
    sweep = _kernels.get_kernel(opts.kernel)
    col_sq = np.ascontiguousarray((X * X).sum(axis=0))
    full_order = np.arange(p, dtype=np.intp) if opts.order is None else np.asarray(opts.order, dtype=np.intp)
    if sorted(full_order.tolist()) != list(range(p)):
        raise ValueError("order must be a permutation of range(p)")
    lmax = float(np.max(np.abs(X.T @ Y)))
    tol_kkt = opts.tol_kkt if opts.tol_kkt is not None else default_tol_kkt(lmax, lam1, lam2)

    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    if beta.shape != (p,):
        raise DimensionMismatch(f"warm start has shape {beta.shape}, expected ({p},)")
    resid = Y - X @ beta

    def objective():
        return 0.5 * float(resid @ resid) + lam1 * float(np.abs(beta).sum()) + 0.5 * lam2 * float(beta @ beta)

    obj = objective()
    trace = [obj]
    sweeps = 0
    full = True
    converged = False
    kkt = np.inf
    next_check, backoff = 0, 1
    while sweeps < opts.max_sweeps:
        if full:
            order = full_order
        else:
            order = full_order[beta[full_order] != 0]
        new_obj = sweep(X, beta, resid, col_sq, lam1, lam2, order)
        sweeps += 1
        trace.append(new_obj)
        rel = abs(obj - new_obj) / max(abs(new_obj), 1e-300)
        obj = new_obj
        if rel > opts.tol_obj:
            # after a full sweep move to the active set; inside it stay there
            full = not opts.active_set
            continue
        if not full:
            full = True
            continue
        if sweeps < next_check:
            full = not opts.active_set or not np.any(beta)
            continue
        resid, kkt, _ = _kkt(X, Y, beta, lam1, lam2)
        obj = objective()
        if kkt <= tol_kkt:
            converged = True
            break
        # objective has stalled but KKT has not: space out the O(np) checks
        next_check = sweeps + backoff
        backoff = min(2 * backoff, 64)
        full = not opts.active_set or not np.any(beta)

    # a coordinate whose correlation sits exactly on the boundary (tied or
    # duplicated columns) can pick up a roundoff-sized value; make it zero
    tiny = (beta != 0) & (np.abs(beta) <= ZERO_RTOL * np.abs(beta).max(initial=0.0))
    if tiny.any():
        beta[tiny] = 0.0
        resid, kkt, _ = _kkt(X, Y, beta, lam1, lam2)
        converged = converged and kkt <= tol_kkt
    elif not converged:
        resid, kkt, _ = _kkt(X, Y, beta, lam1, lam2)
    return beta, sweeps, kkt, tol_kkt, objective(), converged, tuple(trace)


def _finish(ds, beta, lam1, lam2, sweeps, kkt, tol_kkt, obj, converged, trace) -> LassoFit:
    beta = np.array(beta)
    beta.setflags(write=False)
    sub = None
    if lam1 > 0:
        g = ds.X.T @ (ds.Y - ds.X @ beta) - lam2 * beta
        sub = np.clip(g / lam1, -1.0, 1.0)
        on = beta != 0
        sub[on] = np.sign(beta[on])
        sub.setflags(write=False)
    return LassoFit(
        beta=beta, lam=float(lam1), subgradient=sub, iterations=sweeps, kkt_residual=kkt,
        objective=obj, converged=converged, tol_kkt=tol_kkt, lambda2=float(lam2),
        unique=True if lam2 > 0 else None, objective_trace=trace,
    )


def fit_enet(ds: Dataset, lambda1: float, lambda2: float, opts: SolverOptions | None = None,
             warm_start=None) -> LassoFit:
    """Minimize 1/2||Y-Xb||^2 + lambda1 ||b||_1 + lambda2/2 ||b||^2.

    Raises NotConverged (carrying the last iterate) if ``max_sweeps`` runs out.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties must be nonnegative")
    opts = opts or SolverOptions()
    if lambda1 == 0 and lambda2 == 0:
        return _least_squares(ds)
    beta, sweeps, kkt, tol_kkt, obj, ok, trace = _coordinate_descent(ds, lambda1, lambda2, opts, warm_start)
    fit = _finish(ds, beta, lambda1, lambda2, sweeps, kkt, tol_kkt, obj, ok, trace)
    if not ok:
        raise NotConverged(fit, opts.max_sweeps)
    return fit


def fit_lasso(ds: Dataset, lam: float, opts: SolverOptions | None = None, warm_start=None) -> LassoFit:
    """Lasso fit at penalty ``lam``.

    ``lam = 0`` returns the minimum-norm least-squares solution with
    ``unique`` set to whether X has full column rank.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return fit_enet(ds, lam, 0.0, opts, warm_start)


def lasso_path(ds: Dataset, grid: Sequence[float], opts: SolverOptions | None = None,
               lambda2: float = 0.0) -> list[LassoFit]:
    """Warm-started fits along a strictly decreasing penalty grid."""
    grid = [float(g) for g in grid]
    if any(g < 0 for g in grid):
        raise ValueError("grid values must be nonnegative")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly decreasing")
    fits = []
    warm = None
    for lam in grid:
        if lambda2 == 0.0:
            fit = fit_lasso(ds, lam, opts, warm_start=warm)
        else:
            fit = fit_enet(ds, lam, lambda2, opts, warm_start=warm)
        fits.append(fit)
        warm = fit.beta
    return fits


def default_lambda_grid(ds: Dataset, size: int = 50, ratio: float = 1e-3) -> np.ndarray:
    """``size`` log-spaced values from lambda_max down to ``ratio * lambda_max``."""
    lmax = lambda_max(ds)
    if size == 1:
        return np.array([lmax])
    return np.geomspace(lmax, ratio * lmax, size)


def with_order(opts: SolverOptions | None, order) -> SolverOptions:
    return replace(opts or SolverOptions(), order=tuple(int(i) for i in order))
