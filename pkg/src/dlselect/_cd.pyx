# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic coordinate-descent sweep for the l1/l2-penalised least squares."""

from scipy.linalg.cython_blas cimport ddot, daxpy


cdef inline double _soft(double z, double gamma) nogil:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def cd_sweep(const double[::1, :] X, double[::1] beta, double[::1] resid,
             const double[::1] col_sq, double lam1, double lam2,
             const Py_ssize_t[::1] order):
    """One pass over ``order``; updates ``beta`` and ``resid`` in place.

    Returns the objective 1/2 r'r + lam1 |b|_1 + lam2/2 b'b after the pass.
    """
    cdef int n = X.shape[0]
    cdef int one = 1
    cdef Py_ssize_t k, j
    cdef double old, new, z, delta, neg, l1 = 0.0, l2 = 0.0, rr
    cdef double *xj
    with nogil:
        for k in range(order.shape[0]):
            j = order[k]
            if col_sq[j] == 0.0:
                continue
            xj = <double *> &X[0, j]
            old = beta[j]
            z = ddot(&n, xj, &one, &resid[0], &one) + col_sq[j] * old
            new = _soft(z, lam1) / (col_sq[j] + lam2)
            if new != old:
                delta = new - old
                neg = -delta
                daxpy(&n, &neg, xj, &one, &resid[0], &one)
                beta[j] = new
        for j in range(beta.shape[0]):
            l1 += beta[j] if beta[j] >= 0 else -beta[j]
            l2 += beta[j] * beta[j]
        rr = ddot(&n, &resid[0], &one, &resid[0], &one)
    return 0.5 * rr + lam1 * l1 + 0.5 * lam2 * l2
