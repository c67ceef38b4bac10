import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dlselect import _kernels
from dlselect.data import standardize
from dlselect.errors import NotConverged
from dlselect.lasso import (
    SolverOptions,
    default_lambda_grid,
    fit_enet,
    fit_lasso,
    lambda_max,
    lasso_objective,
    lasso_path,
    soft_threshold,
    with_order,
)
from oracles import exact_objective, lasso_by_sign_patterns


@pytest.mark.parametrize("z,g,want", [(5, 2, 3), (-1, 2, 0), (0, 0, 0), (-5, 2, -3), (2, 2, 0)])
def test_soft_threshold(z, g, want):
    assert soft_threshold(z, g) == want


def test_soft_threshold_rejects_negative_gamma():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_lambda_max_definitions(rng):
    X = rng.standard_normal((10, 4))
    assert lambda_max(standardize(X, np.zeros(10))) == 0.0
    from dlselect.data import Dataset
    one = Dataset(np.array([[1.0], [2.0]]), np.array([1.0, 3.0]))
    assert lambda_max(one) == 7.0


def test_fit_at_lambda_max_is_zero(rng):
    ds = standardize(rng.standard_normal((10, 4)), rng.standard_normal(10))
    for lam in (lambda_max(ds), 2 * lambda_max(ds)):
        fit = fit_lasso(ds, lam)
        assert not fit.beta.any()
        assert fit.kkt_residual <= fit.tol_kkt


def test_matches_sign_pattern_oracle():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((20, 4))
    Y = X @ np.array([1.5, 0.0, -0.7, 0.2]) + 0.5 * rng.standard_normal(20)
    ds = standardize(X, Y)
    for frac in (0.05, 0.2, 0.5, 0.9):
        lam = frac * lambda_max(ds)
        fit = fit_lasso(ds, lam)
        np.testing.assert_allclose(fit.beta, lasso_by_sign_patterns(ds.X, ds.Y, lam), atol=1e-6)


def test_objective_examples(small_ds):
    ds = small_ds
    assert lasso_objective(ds, np.zeros(ds.p), 3.0) == pytest.approx(0.5 * ds.Y @ ds.Y)
    ols = np.linalg.lstsq(ds.X, ds.Y, rcond=None)[0]
    rss = np.sum((ds.Y - ds.X @ ols) ** 2)
    assert lasso_objective(ds, ols, 0.0) == pytest.approx(0.5 * rss, rel=1e-12)


@given(st.integers(0, 10_000), st.floats(0, 5), st.floats(0, 5))
def test_objective_matches_rational_arithmetic(seed, lam, lam2):
    rng = np.random.default_rng(seed)
    ds = standardize(rng.standard_normal((8, 3)), rng.standard_normal(8))
    beta = rng.standard_normal(3)
    want = exact_objective(ds.X, ds.Y, beta, lam, lam2)
    assert lasso_objective(ds, beta, lam, lam2) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_kkt_and_subgradient_invariants(small_ds):
    ds = small_ds
    for lam in default_lambda_grid(ds, 8, 0.01):
        fit = fit_lasso(ds, lam)
        corr = ds.X.T @ (ds.Y - ds.X @ fit.beta)
        assert fit.converged and fit.kkt_residual <= fit.tol_kkt
        assert np.all(np.abs(corr) <= lam + fit.tol_kkt)
        on = fit.beta != 0
        np.testing.assert_allclose(corr[on], lam * np.sign(fit.beta[on]), atol=fit.tol_kkt)
        assert np.all(np.abs(fit.subgradient) <= 1 + 1e-10)


def test_sweeps_never_increase_objective(small_ds):
    fit = fit_lasso(small_ds, 0.05 * lambda_max(small_ds))
    trace = np.array(fit.objective_trace)
    assert np.all(np.diff(trace) <= 1e-12 * np.abs(trace[1:]))


def test_path_grid_of_one_and_warm_start_equivalence(small_ds):
    ds = small_ds
    lmax = lambda_max(ds)
    (only,) = lasso_path(ds, [lmax])
    assert not only.beta.any()
    a, b = lasso_path(ds, [0.5 * lmax, 0.1 * lmax])
    cold = fit_lasso(ds, 0.1 * lmax)
    np.testing.assert_allclose(b.beta, cold.beta, atol=1e-8)


def test_path_optimal_objective_monotone(small_ds):
    fits = lasso_path(small_ds, default_lambda_grid(small_ds, 12))
    objs = [f.objective for f in fits]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(objs, objs[1:]))


def test_path_rejects_unsorted_grid(small_ds):
    with pytest.raises(ValueError):
        lasso_path(small_ds, [1.0, 2.0])


def test_coordinate_order_uniqueness_proxies(small_ds):
    ds = small_ds
    lam = 0.1 * lambda_max(ds)
    fwd = fit_lasso(ds, lam)
    rev = fit_lasso(ds, lam, with_order(None, np.arange(ds.p)[::-1]))
    assert not np.any(np.sign(fwd.beta) * np.sign(rev.beta) < 0)
    np.testing.assert_allclose(ds.X @ fwd.beta, ds.X @ rev.beta, atol=1e-6)


def test_duplicated_columns_keep_unique_fit_but_not_beta(rng):
    X = rng.standard_normal((30, 3))
    X = np.column_stack([X, X[:, 0]])
    ds = standardize(X, X[:, 0] * 2 + 0.1 * rng.standard_normal(30))
    lam = 0.1 * lambda_max(ds)
    a = fit_lasso(ds, lam)
    b = fit_lasso(ds, lam, with_order(None, [3, 2, 1, 0]))
    np.testing.assert_allclose(ds.X @ a.beta, ds.X @ b.beta, atol=1e-6)
    assert not np.any(np.sign(a.beta) * np.sign(b.beta) < 0)


def test_lambda_zero_least_squares(rng):
    ds = standardize(rng.standard_normal((20, 3)), rng.standard_normal(20))
    fit = fit_lasso(ds, 0.0)
    np.testing.assert_allclose(fit.beta, np.linalg.lstsq(ds.X, ds.Y, rcond=None)[0], atol=1e-12)
    assert fit.unique
    X = rng.standard_normal((5, 8))
    assert fit_lasso(standardize(X, rng.standard_normal(5)), 0.0).unique is False


def test_not_converged_carries_iterate(small_ds):
    with pytest.raises(NotConverged) as err:
        fit_lasso(small_ds, 0.01 * lambda_max(small_ds), SolverOptions(max_sweeps=1))
    assert err.value.fit.iterations == 1
    assert err.value.fit.kkt_residual > 0


def test_options_validate():
    with pytest.raises(ValueError):
        SolverOptions(tol_obj=0)
    with pytest.raises(ValueError):
        SolverOptions(max_sweeps=0)


@pytest.mark.skipif("cython" not in _kernels.KERNELS, reason="compiled kernel not built")
def test_compiled_and_python_kernels_agree(small_ds):
    ds = small_ds
    lam = 0.05 * lambda_max(ds)
    a = fit_lasso(ds, lam, SolverOptions(kernel="cython"))
    b = fit_lasso(ds, lam, SolverOptions(kernel="python"))
    np.testing.assert_allclose(a.beta, b.beta, atol=1e-10)
    X = np.asfortranarray(ds.X)
    col_sq = (X * X).sum(axis=0)
    order = np.arange(ds.p, dtype=np.intp)
    beta_c, beta_p = np.zeros(ds.p), np.zeros(ds.p)
    r_c, r_p = ds.Y.copy(), ds.Y.copy()
    for _ in range(3):
        oc = _kernels.get_kernel("cython")(X, beta_c, r_c, col_sq, lam, 0.3, order)
        op = _kernels.get_kernel("python")(X, beta_p, r_p, col_sq, lam, 0.3, order)
        assert oc == pytest.approx(op, rel=1e-12)
    np.testing.assert_allclose(beta_c, beta_p, atol=1e-12)
    np.testing.assert_allclose(r_c, r_p, atol=1e-12)


def test_enet_reductions(small_ds):
    ds = small_ds
    lam = 0.1 * lambda_max(ds)
    np.testing.assert_allclose(fit_enet(ds, lam, 0.0).beta, fit_lasso(ds, lam).beta, atol=1e-8)
