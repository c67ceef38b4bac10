"""Ridge regression through the normal equations (primal or n x n dual form)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from dlselect.data import Dataset
from dlselect.errors import NonPositiveLambda
from dlselect.lasso import fit_enet  # noqa: F401  (re-exported baseline)


@dataclass(frozen=True, eq=False)
class RidgeFit:
    beta: np.ndarray
    lambda2: float
    normal_residual: float
    form: str


def _primal(X, Y, lam2):
    A = X.T @ X
    A[np.diag_indices_from(A)] += lam2
    return linalg.solve(A, X.T @ Y, assume_a="pos")


def _dual(X, Y, lam2):
    K = X @ X.T
    K[np.diag_indices_from(K)] += lam2
    return X.T @ linalg.solve(K, Y, assume_a="pos")


def fit_ridge(ds: Dataset, lambda2: float, form: str = "auto") -> RidgeFit:
    """argmin 1/2||Y - Xb||^2 + lambda2/2 ||b||^2.

    ``form="auto"`` solves the p x p system when p <= n and
    b = X'(XX' + lambda2 I)^{-1} Y otherwise.
    """
    if not lambda2 > 0:
        raise NonPositiveLambda(f"lambda2 must be > 0, got {lambda2}")
    if form == "auto":
        form = "primal" if ds.p <= ds.n else "dual"
    X, Y = ds.X, ds.Y
    if form == "primal":
        beta = _primal(X, Y, lambda2)
    elif form == "dual":
        beta = _dual(X, Y, lambda2)
    else:
        raise ValueError(f"unknown form {form!r}")
    res = float(np.max(np.abs(X.T @ (X @ beta) + lambda2 * beta - X.T @ Y)))
    beta.setflags(write=False)
    return RidgeFit(beta=beta, lambda2=float(lambda2), normal_residual=res, form=form)
