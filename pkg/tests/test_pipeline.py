import logging

import numpy as np
import pytest

import dlselect.lasso as lasso_mod
import dlselect.pipeline as pipeline_mod
from dlselect.data import ActiveSet, apply_standardization, standardize
from dlselect.errors import EmptySelection
from dlselect.lasso import default_lambda_grid, fit_lasso, lambda_max
from dlselect.pipeline import (
    TuneStep,
    _pick,
    dlselect,
    dlselect_ridge,
    fit_dlselect_ridge,
    reduced_design,
    tune_lambda1,
    tune_lambda2,
)
from dlselect.ridge import fit_ridge
from oracles import design_with_covariance, orthonormal_design


def _split(rng, n=60, p=10, noise=1.0):
    X = rng.standard_normal((2 * n, p))
    beta = np.zeros(p)
    beta[:3] = (1.5, -1.0, 0.8)
    Y = X @ beta + noise * rng.standard_normal(2 * n)
    train = standardize(X[:n], Y[:n])
    val = apply_standardization(X[n:], Y[n:], train.std_record)
    return train, val


def test_reduced_design(rng):
    ds = standardize(rng.standard_normal((10, 3)), rng.standard_normal(10))
    full = reduced_design(ds, ActiveSet.of(range(3), 3))
    np.testing.assert_array_equal(full.X, ds.X)
    one = reduced_design(ds, ActiveSet.of([1], 3))
    np.testing.assert_array_equal(one.X[:, 0], ds.X[:, 1])
    assert one.columns == (1,)
    with pytest.raises(EmptySelection):
        reduced_design(ds, ActiveSet.of([], 3))


def test_selection_at_lambda_max_is_argmax_column(small_ds):
    S, state, fit = dlselect(small_ds, lambda_max(small_ds))
    assert list(S) == [int(np.argmax(np.abs(small_ds.X.T @ small_ds.Y)))]


def test_selection_above_lambda_max_is_empty(small_ds):
    with pytest.raises(EmptySelection):
        dlselect(small_ds, 1.5 * lambda_max(small_ds))


def test_duplicated_active_pair_is_kept_together(rng):
    C = np.array([[1.0, 1.0, 0.2, 0.1],
                  [1.0, 1.0, 0.2, 0.1],
                  [0.2, 0.2, 1.0, 0.0],
                  [0.1, 0.1, 0.0, 1.0]])
    X = design_with_covariance(C, 30, rng)
    ds = standardize(X, X @ [1.0, 1.0, 1.0, 0.0])
    S, state, fit = dlselect(ds, 0.05 * lambda_max(ds))
    assert {0, 1} <= set(S) and 3 not in S
    assert len({0, 1} & set(fit.support)) == 1


def test_full_selection_matches_plain_ridge(rng):
    X = rng.standard_normal((40, 5))
    ds = standardize(X, X.sum(axis=1) + 0.1 * rng.standard_normal(40))
    res = dlselect_ridge(ds, 1e-3 * lambda_max(ds), 2.0)
    assert list(res.selected) == list(range(5))
    np.testing.assert_allclose(res.beta, fit_ridge(ds, 2.0).beta, atol=1e-12)


def test_ridge_refit_bias_on_orthonormal_design(rng):
    n, lam2 = 1000, 1.0
    X = orthonormal_design(n, 8, rng)
    beta = np.r_[np.ones(4), np.zeros(4)]
    res = dlselect_ridge(standardize(X, X @ beta), 0.01 * n, lam2)
    assert list(res.selected) == [0, 1, 2, 3]
    assert np.abs(res.beta[:4] - 1).max() <= lam2 / n


def test_pipeline_support_is_dual_active_set(rng):
    train, val = _split(rng)
    res = fit_dlselect_ridge(train, val, default_lambda_grid(train, 15), np.geomspace(10, 0.01, 7))
    assert res.selected == res.diagnostics["dual"].active
    assert set(np.flatnonzero(res.beta)) <= set(res.selected)


def test_tie_break_prefers_larger_penalty():
    steps = [TuneStep(1.0, 2.0, 3), TuneStep(5.0, 2.0 * (1 + 1e-13), 1), TuneStep(0.1, 3.0, 5)]
    assert _pick(steps) == 1
    assert _pick([TuneStep(0.3, 1.0, 1)]) == 0


def test_lambda1_single_grid_and_noiseless_smallest(rng):
    train, val = _split(rng)
    lam, _ = tune_lambda1(train, val, [0.3 * lambda_max(train)])
    assert lam == 0.3 * lambda_max(train)
    X = rng.standard_normal((40, 5))
    ds = standardize(X, X @ [1.0, -2.0, 0.0, 0.5, 0.0])
    grid = list(np.geomspace(lambda_max(ds), 1e-6 * lambda_max(ds), 8)) + [0.0]
    lam, steps = tune_lambda1(ds, ds, grid)
    assert lam == 0.0


def test_lambda2_noise_prefers_heavy_shrinkage(rng):
    X = rng.standard_normal((60, 25))
    Y = rng.standard_normal(60)
    train = standardize(X[:30], Y[:30])
    val = apply_standardization(X[30:], Y[30:], train.std_record)
    lam, steps = tune_lambda2(train, val, [1e-4, 1e4])
    assert lam == 1e4
    lam_dup, steps_dup = tune_lambda2(train, val, [1e-4, 1e4, 1e4, 1e-4])
    assert lam_dup == lam and len(steps_dup) == 2
    assert tune_lambda2(train, val, [3.0])[0] == 3.0


def test_tuning_cost_is_additive(rng, monkeypatch):
    train, val = _split(rng)
    calls = {"lasso": 0, "ridge": 0}
    real_lasso, real_ridge = lasso_mod.fit_lasso, pipeline_mod.fit_ridge

    def counting_lasso(*a, **k):
        calls["lasso"] += 1
        return real_lasso(*a, **k)

    def counting_ridge(*a, **k):
        calls["ridge"] += 1
        return real_ridge(*a, **k)

    monkeypatch.setattr(lasso_mod, "fit_lasso", counting_lasso)
    monkeypatch.setattr(pipeline_mod, "fit_ridge", counting_ridge)
    g1, g2 = default_lambda_grid(train, 13), np.geomspace(100, 0.01, 9)
    fit_dlselect_ridge(train, val, g1, g2)
    assert calls == {"lasso": 13, "ridge": 9}


def test_pipeline_is_bitwise_reproducible(rng):
    train, val = _split(rng)
    a = fit_dlselect_ridge(train, val, default_lambda_grid(train, 10), np.geomspace(10, 0.1, 5))
    b = fit_dlselect_ridge(train, val, default_lambda_grid(train, 10), np.geomspace(10, 0.1, 5))
    assert a.beta.tobytes() == b.beta.tobytes()
    assert (a.lambda1, a.lambda2, a.selected) == (b.lambda1, b.lambda2, b.selected)


def test_empty_selection_falls_back_with_warning(rng, caplog):
    train, val = _split(rng)
    with caplog.at_level(logging.WARNING, logger="dlselect"):
        res = fit_dlselect_ridge(train, val, [2 * lambda_max(train)], [1.0])
    j = int(np.argmax(np.abs(train.X.T @ train.Y)))
    assert list(res.selected) == [j]
    assert "falling back" in caplog.text
