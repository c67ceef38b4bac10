"""Time the compiled and pure-Python coordinate-descent kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports raw sweep throughput and end-to-end Lasso path time per backend,
and checks that both backends give the same coefficients.
"""
import argparse
import time

import numpy as np

from dlselect import _kernels
from dlselect.data import standardize
from dlselect.designs import DesignSpec, generate_replication
from dlselect.lasso import SolverOptions, default_lambda_grid, lasso_path

SIZES = [(200, 100), (200, 500), (1000, 50)]


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def sweep_rate(name, X, Y, repeat, sweeps=200):
    X = np.asfortranarray(X)
    col_sq = (X * X).sum(axis=0)
    order = np.arange(X.shape[1], dtype=np.intp)
    lam = 0.05 * np.abs(X.T @ Y).max()
    kernel = _kernels.get_kernel(name)

    def run():
        beta, resid = np.zeros(X.shape[1]), Y.copy()
        for _ in range(sweeps):
            kernel(X, beta, resid, col_sq, lam, 0.0, order)
        return beta

    t, beta = _best_of(run, repeat)
    return t / sweeps, beta


def path_time(name, ds, repeat):
    grid = default_lambda_grid(ds, 50)
    opts = SolverOptions(kernel=name)
    t, fits = _best_of(lambda: lasso_path(ds, grid, opts), repeat)
    return t, fits


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = [k for k in ("cython", "python") if k in _kernels.KERNELS]
    print(f"default backend: {_kernels.BACKEND}; available: {', '.join(names)}")
    rng = np.random.default_rng(0)

    print("\nper-sweep time (us), full cyclic sweep")
    print(f"{'n x p':>12} " + " ".join(f"{k:>10}" for k in names) + "   speedup")
    for n, p in SIZES:
        X = rng.standard_normal((n, p))
        ds = standardize(X, X[:, :10].sum(axis=1) + rng.standard_normal(n))
        res = {k: sweep_rate(k, ds.X, ds.Y, args.repeat) for k in names}
        if len(names) == 2:
            assert np.allclose(res["cython"][1], res["python"][1], atol=1e-10)
        times = [res[k][0] * 1e6 for k in names]
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) == 2 else ""
        print(f"{n:>5} x {p:<5} " + " ".join(f"{t:10.1f}" for t in times) + f"  {speed}")

    print("\n50-point warm-started Lasso path (s), block-diagonal design p=100, n=200")
    spec = DesignSpec("block_diagonal", p=100, rho=0.9, block_size=10, n_train=200)
    ds = generate_replication(spec, 0).train
    res = {k: path_time(k, ds, args.repeat) for k in names}
    for k in names:
        sweeps = sum(f.iterations for f in res[k][1])
        print(f"{k:>8}: {res[k][0]:.3f}s ({sweeps} sweeps)")
    if len(names) == 2:
        diff = max(np.abs(a.beta - b.beta).max() for a, b in zip(res["cython"][1], res["python"][1]))
        print(f"max |beta_cython - beta_python| over the path: {diff:.1e}")
        print(f"speedup: {res['python'][0] / res['cython'][0]:.1f}x")


if __name__ == "__main__":
    main()
