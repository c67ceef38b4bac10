"""Pure numpy fallback for the coordinate-descent sweep.

Mirrors the compiled kernel in ``_cd.pyx`` operation for operation so the
two backends produce the same iterates up to floating-point reassociation.
"""
import numpy as np


def cd_sweep(X, beta, resid, col_sq, lam1, lam2, order):
    for j in order:
        cj = col_sq[j]
        if cj == 0.0:
            continue
        xj = X[:, j]
        old = beta[j]
        z = xj @ resid + cj * old
        new = np.sign(z) * max(abs(z) - lam1, 0.0) / (cj + lam2)
        if new != old:
            delta = new - old
            resid -= delta * xj
            beta[j] = new
    return 0.5 * float(resid @ resid) + lam1 * float(np.abs(beta).sum()) + 0.5 * lam2 * float(beta @ beta)
