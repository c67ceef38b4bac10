"""Dual Lasso selection followed by a Ridge refit on the selected columns.

Steps: Lasso fit -> dual vector theta = Y - X beta -> columns with a tight
dual constraint -> Ridge on those columns, zeros elsewhere.  The two
penalties are tuned one after the other on a held-out validation set, so
tuning costs |grid1| + |grid2| fits rather than |grid1| * |grid2|.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dlselect import lasso as _lasso
from dlselect.data import ActiveSet, Dataset
from dlselect.dual import TOL_ACTIVE, DualState, dual_active_set, dual_vector
from dlselect.errors import EmptySelection
from dlselect.lasso import LassoFit, SolverOptions, default_lambda_grid, lambda_max
from dlselect.ridge import RidgeFit, fit_ridge

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class TuneStep:
    lam: float
    val_mse: float
    n_selected: int


@dataclass(frozen=True, eq=False)
class PipelineResult:
    lambda1: float
    lambda2: float
    selected: ActiveSet
    beta: np.ndarray
    diagnostics: dict = field(default_factory=dict, repr=False)


def _val_mse(val: Dataset, beta) -> float:
    r = val.Y - val.X @ beta
    return float(r @ r) / val.n


def default_lambda2_grid(size: int = 50, lo: float = 1e-4, hi: float = 1e4) -> np.ndarray:
    return np.geomspace(hi, lo, size)


def _pick(steps: Sequence[TuneStep]) -> int:
    """Index of the smallest validation MSE; near-ties go to the larger penalty."""
    best = 0
    for i, st in enumerate(steps[1:], start=1):
        b = steps[best]
        if abs(st.val_mse - b.val_mse) <= TIE_TOL * max(1.0, abs(b.val_mse)):
            if st.lam > b.lam:
                best = i
        elif st.val_mse < b.val_mse:
            best = i
    return best


def reduced_design(ds: Dataset, S: ActiveSet) -> Dataset:
    """Column subset of ``ds``; ``columns`` keeps the original indices."""
    if len(S) == 0:
        raise EmptySelection("cannot reduce to an empty column set")
    idx = S.array
    return Dataset(
        ds.X[:, idx], ds.Y, standardized=ds.standardized, std_record=ds.std_record,
        columns=tuple(ds.columns[i] for i in idx),
    )


def embed(beta_red, S: ActiveSet) -> np.ndarray:
    beta = np.zeros(S.p)
    beta[S.array] = beta_red
    return beta


def _select(ds, fit, tol_active):
    state = dual_vector(ds, fit, tol_active=tol_active)
    return dual_active_set(state), state


def dlselect(ds: Dataset, lambda1: float, opts: SolverOptions | None = None,
             tol_active: float = TOL_ACTIVE) -> tuple[ActiveSet, DualState, LassoFit]:
    if not lambda1 > 0:
        raise ValueError("lambda1 must be > 0")
    fit = _lasso.fit_lasso(ds, lambda1, opts)
    S, state = _select(ds, fit, tol_active)
    if len(S) == 0:
        raise EmptySelection(f"no tight dual constraint at lambda1={lambda1:.6g} (lambda_max={lambda_max(ds):.6g})")
    return S, state, fit


def _fallback_selection(ds: Dataset) -> ActiveSet:
    j = int(np.argmax(np.abs(ds.X.T @ ds.Y)))
    log.warning("empty dual selection; falling back to the single column %d", j)
    return ActiveSet((j,), ds.p)


def dlselect_ridge(ds: Dataset, lambda1: float, lambda2: float, opts: SolverOptions | None = None,
                   tol_active: float = TOL_ACTIVE) -> PipelineResult:
    S, state, fit = dlselect(ds, lambda1, opts, tol_active)
    ridge = fit_ridge(reduced_design(ds, S), lambda2)
    return PipelineResult(
        lambda1=float(lambda1), lambda2=float(lambda2), selected=S, beta=embed(ridge.beta, S),
        diagnostics={"lasso": fit, "dual": state, "ridge": ridge},
    )


def _lambda1_search(train, val, grid, opts, tol_active):
    grid = np.asarray(grid if grid is not None else default_lambda_grid(train), dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    fits = _lasso.lasso_path(train, grid, opts)
    steps = []
    for lam, fit in zip(grid, fits):
        n_sel = len(_select(train, fit, tol_active)[0]) if lam > 0 else train.p
        steps.append(TuneStep(float(lam), _val_mse(val, fit.beta), n_sel))
    return _pick(steps), steps, fits


def tune_lambda1(train: Dataset, val: Dataset, grid=None, opts: SolverOptions | None = None,
                 tol_active: float = TOL_ACTIVE) -> tuple[float, list[TuneStep]]:
    """Choose lambda1 by validation MSE of the Lasso predictor itself."""
    best, steps, _ = _lambda1_search(train, val, grid, opts, tol_active)
    return steps[best].lam, steps


def _lambda2_search(train, val, grid):
    grid = default_lambda2_grid() if grid is None else grid
    grid = sorted({float(g) for g in grid}, reverse=True)
    if not grid:
        raise ValueError("grid must be nonempty")
    fits = [fit_ridge(train, g) for g in grid]
    steps = [TuneStep(g, _val_mse(val, f.beta), train.p) for g, f in zip(grid, fits)]
    return _pick(steps), steps, fits


def tune_lambda2(train_reduced: Dataset, val_reduced: Dataset, grid=None) -> tuple[float, list[TuneStep]]:
    """Choose the Ridge penalty by validation MSE; duplicate grid values are merged."""
    best, steps, _ = _lambda2_search(train_reduced, val_reduced, grid)
    return steps[best].lam, steps


def fit_dlselect_ridge(train: Dataset, val: Dataset, grid1=None, grid2=None,
                       opts: SolverOptions | None = None,
                       tol_active: float = TOL_ACTIVE) -> PipelineResult:
    """Tuned pipeline: lambda1 search, dual selection, lambda2 search on the reduced data.

    Every fit is reused, so exactly ``len(grid1) + len(grid2)`` solver
    calls are made.
    """
    i1, steps1, fits = _lambda1_search(train, val, grid1, opts, tol_active)
    fit = fits[i1]
    lam1 = steps1[i1].lam
    if lam1 > 0:
        S, state = _select(train, fit, tol_active)
    else:
        S, state = ActiveSet(tuple(range(train.p)), train.p), None
    if len(S) == 0:
        S = _fallback_selection(train)
    i2, steps2, ridges = _lambda2_search(reduced_design(train, S), reduced_design(val, S), grid2)
    ridge: RidgeFit = ridges[i2]
    return PipelineResult(
        lambda1=lam1, lambda2=steps2[i2].lam, selected=S, beta=embed(ridge.beta, S),
        diagnostics={"lasso": fit, "dual": state, "ridge": ridge, "trace1": steps1, "trace2": steps2},
    )
