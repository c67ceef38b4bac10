"""Dual vector of a Lasso fit, dual objective, duality gap and the dual active set."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dlselect.data import ActiveSet, Dataset
from dlselect.errors import DegenerateLambda, DimensionMismatch, InfeasibleDual
from dlselect.lasso import LassoFit, lasso_objective

TOL_ACTIVE = 1e-4


@dataclass(frozen=True, eq=False)
class DualState:
    theta: np.ndarray
    lam: float
    correlations: np.ndarray  # X_j' theta
    active: ActiveSet
    feasibility_margin: float  # min_j (lam - |X_j' theta|), over all j
    inactive_slack: float  # same minimum restricted to columns outside ``active``
    tol_active: float


def _active_mask(corr, lam, tol_active):
    return np.abs(corr) >= lam * (1.0 - tol_active)


def dual_vector(ds: Dataset, fit: LassoFit, tol_active: float = TOL_ACTIVE) -> DualState:
    """theta = Y - X beta, with its correlations and tight constraints."""
    if fit.beta.shape != (ds.p,):
        raise DimensionMismatch("fit does not match dataset")
    theta = ds.Y - ds.X @ fit.beta
    corr = ds.X.T @ theta
    lam = fit.lam
    worst = float(np.max(np.abs(corr)))
    if worst > lam + 10 * fit.tol_kkt:
        raise InfeasibleDual(
            f"max |X_j' theta| = {worst:.6g} exceeds lambda = {lam:.6g}; the fit is not converged"
        )
    margins = lam - np.abs(corr)
    mask = _active_mask(corr, lam, tol_active) if lam > 0 else np.zeros(ds.p, dtype=bool)
    theta.setflags(write=False)
    corr.setflags(write=False)
    return DualState(
        theta=theta,
        lam=lam,
        correlations=corr,
        active=ActiveSet.from_mask(mask),
        feasibility_margin=float(margins.min()),
        inactive_slack=float(margins[~mask].min()) if (~mask).any() else float("inf"),
        tol_active=tol_active,
    )


def dual_objective(Y, theta) -> float:
    """g(theta) = theta'Y - theta'theta / 2."""
    Y = np.asarray(Y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if Y.shape != theta.shape:
        raise DimensionMismatch(f"Y has shape {Y.shape}, theta {theta.shape}")
    return float(theta @ Y - 0.5 * (theta @ theta))


def feasible_dual_point(ds: Dataset, beta, lam: float) -> np.ndarray:
    """Residual scaled radially into {|X_j' theta| <= lam}."""
    theta = ds.Y - ds.X @ np.asarray(beta, dtype=float)
    worst = float(np.max(np.abs(ds.X.T @ theta)))
    if worst > lam:
        theta = theta * (lam / worst)
    return theta


def duality_gap(ds: Dataset, fit: LassoFit) -> float:
    primal = lasso_objective(ds, fit.beta, fit.lam)
    return primal - dual_objective(ds.Y, feasible_dual_point(ds, fit.beta, fit.lam))


def dual_active_set(state: DualState) -> ActiveSet:
    """Columns whose dual constraint is tight: |X_j' theta| >= lam (1 - tol_active)."""
    if state.lam == 0:
        raise DegenerateLambda("dual active set is undefined at lambda = 0")
    return ActiveSet.from_mask(_active_mask(state.correlations, state.lam, state.tol_active))
