"""Numerical checks of design conditions for support recovery.

The irrepresentable condition (IC) bounds ||C21 C11^{-1} sign(beta_1)||_inf
below one.  When C11 is singular, the pseudo irrepresentable condition (PIC)
replaces C11^{-1} by every generalized inverse that embeds the inverse of a
full-rank principal submatrix of C11 and zeros elsewhere; it must hold for
all of them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dlselect.data import ActiveSet, partition_covariance
from dlselect.errors import (
    AsymmetricInput,
    CombinatorialBlowup,
    DimensionMismatch,
    EmptySupport,
    SingularC11,
)

TOL_COND = 1e-8
TOL_PSD = 1e-8
TOL_RANK = 1e-8
MAX_COND = 1e12
CANDIDATE_CAP = 10_000


@dataclass(frozen=True)
class ConditionReport:
    kind: str  # "PSD", "IC", "PIC" or "BetaMin"
    holds: bool
    margin: float
    witness: tuple[int, ...] | int | None = None
    details: dict = field(default_factory=dict, repr=False)


def sign_vector(beta) -> np.ndarray:
    """Componentwise sign in {-1, 0, 1}; exact zeros map to 0."""
    return np.sign(np.asarray(beta, dtype=float)).astype(np.int8)


def _as_active(S, p) -> ActiveSet:
    return S if isinstance(S, ActiveSet) else ActiveSet.of(S, p)


def _active_signs(signs, S: ActiveSet) -> np.ndarray:
    signs = np.asarray(signs, dtype=float)
    if signs.shape == (S.p,):
        signs = signs[S.array]
    elif signs.shape != (len(S),):
        raise DimensionMismatch(f"signs must have length p={S.p} or s={len(S)}, got {signs.shape}")
    if np.any(signs == 0) or not np.all(np.isin(signs, (-1.0, 1.0))):
        raise ValueError("signs on the active set must be +1 or -1")
    return signs


def _symmetric(C, tol=1e-10) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {C.shape}")
    if not np.allclose(C, C.T, rtol=0, atol=tol):
        raise AsymmetricInput("matrix is not symmetric")
    return C


def check_psd(C) -> ConditionReport:
    C = _symmetric(C)
    eig = np.linalg.eigvalsh((C + C.T) / 2)
    lo = float(eig[0])
    return ConditionReport("PSD", lo >= -TOL_PSD, lo, details={"eigenvalues": eig})


def check_ic(C, S, signs, tol: float = TOL_COND) -> ConditionReport:
    """margin = 1 - ||C21 C11^{-1} sign||_inf; raises SingularC11 when C11 is not invertible."""
    C = _symmetric(C)
    S = _as_active(S, C.shape[0])
    if len(S) == 0:
        raise EmptySupport("IC needs a nonempty active set")
    s = _active_signs(signs, S)
    part = partition_covariance(C, S)
    cond = np.linalg.cond(part.C11)
    if not np.isfinite(cond) or cond > MAX_COND:
        raise SingularC11(cond)
    vals = np.abs(part.C21 @ np.linalg.solve(part.C11, s))
    if vals.size == 0:
        return ConditionReport("IC", True, 1.0, None, {"values": vals})
    k = int(np.argmax(vals))
    margin = 1.0 - float(vals[k])
    return ConditionReport("IC", margin > tol, margin, int(part.inactive.indices[k]), {"values": vals})


def numerical_rank(A, tol_rank: float = TOL_RANK) -> int:
    sv = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv >= tol_rank * sv[0]))


def enumerate_candidate_submatrices(C11, tol_rank: float = TOL_RANK,
                                    cap: int | None = None) -> list[tuple[int, ...]]:
    """All r-subsets R (r = rank C11) whose principal block C11[R, R] has rank r.

    Indices are 0-based positions within C11.  For positive semidefinite
    input the search prunes any partial set that is already rank deficient
    (a principal block of a Gram matrix is singular exactly when its
    columns are dependent, and dependence is inherited by supersets).
    """
    C11 = np.asarray(C11, dtype=float)
    s = C11.shape[0]
    if cap is None:
        if s > 25:
            raise CombinatorialBlowup(CANDIDATE_CAP)
        cap = CANDIDATE_CAP
    if s == 0:
        return []
    sv = np.linalg.svd(C11, compute_uv=False)
    if sv[0] == 0:
        return []
    cut = tol_rank * sv[0]
    r = int(np.sum(sv >= cut))

    def full_rank(idx):
        sub = C11[np.ix_(idx, idx)]
        return np.linalg.svd(sub, compute_uv=False)[-1] >= cut

    out: list[tuple[int, ...]] = []

    def push(R):
        out.append(R)
        if len(out) > cap:
            raise CombinatorialBlowup(cap)

    psd = np.linalg.eigvalsh((C11 + C11.T) / 2)[0] >= -cut
    if not psd:
        for R in itertools.combinations(range(s), r):
            if full_rank(list(R)):
                push(R)
        return out

    def extend(prefix, start):
        if len(prefix) == r:
            push(tuple(prefix))
            return
        # leave room for the remaining picks
        for j in range(start, s - (r - len(prefix)) + 1):
            cand = prefix + [j]
            if full_rank(cand):
                extend(cand, j + 1)

    extend([], 0)
    return out


def check_pic(C, S, signs, tol: float = TOL_COND, tol_rank: float = TOL_RANK,
              cap: int | None = None) -> ConditionReport:
    """Worst case over candidate generalized inverses of 1 - ||C21 G sign||_inf.

    ``witness`` is the candidate (0-based column indices of C) with the
    smallest margin; ``details["candidates"]`` maps each candidate to its
    margin.
    """
    C = _symmetric(C)
    S = _as_active(S, C.shape[0])
    if len(S) == 0:
        raise EmptySupport("PIC needs a nonempty active set")
    s = _active_signs(signs, S)
    part = partition_covariance(C, S)
    cands = enumerate_candidate_submatrices(part.C11, tol_rank=tol_rank, cap=cap)
    active = S.array
    margins = {}
    for R in cands:
        idx = list(R)
        g = np.zeros(len(S))
        g[idx] = np.linalg.solve(part.C11[np.ix_(idx, idx)], s[idx])
        vals = np.abs(part.C21 @ g)
        margins[tuple(int(active[i]) for i in R)] = 1.0 - (float(vals.max()) if vals.size else 0.0)
    if not margins:
        return ConditionReport("PIC", False, float("-inf"), None, {"candidates": margins})
    witness = min(margins, key=margins.get)
    margin = margins[witness]
    return ConditionReport("PIC", margin > tol, margin, witness,
                           {"candidates": margins, "rank": len(cands[0])})


def beta_min_margin(beta, S) -> float:
    """min_{j in S} |beta_j|.  Reported only; no threshold is enforced."""
    beta = np.asarray(beta, dtype=float)
    S = _as_active(S, beta.size)
    if len(S) == 0:
        raise EmptySupport("beta-min margin needs a nonempty active set")
    return float(np.min(np.abs(beta[S.array])))


def check_beta_min(beta, S, threshold: float = 0.0) -> ConditionReport:
    m = beta_min_margin(beta, S)
    return ConditionReport("BetaMin", m > threshold, m)


def noise_correlated_covariance(rho: float, s: int = 4) -> np.ndarray:
    """``s`` uncorrelated active columns plus one noise column correlated rho with each."""
    C = np.eye(s + 1)
    C[:s, s] = C[s, :s] = rho
    return C


def duplicated_active_covariance(rho: float) -> np.ndarray:
    """7 x 7 covariance: columns 0/1 and 2/3 are exact copies, 4 and 5 are
    independent actives, and column 6 is noise correlated rho with all six."""
    C = np.eye(7)
    C[0, 1] = C[1, 0] = 1.0
    C[2, 3] = C[3, 2] = 1.0
    C[:6, 6] = C[6, :6] = rho
    return C


EXAMPLES = {
    "paper5x5": (noise_correlated_covariance, (0, 1, 2, 3)),
    "paper7x7": (duplicated_active_covariance, (0, 1, 2, 3, 4, 5)),
}


def example_covariance(name: str, rho: float) -> tuple[np.ndarray, ActiveSet]:
    """Built-in example matrices with their active sets."""
    build, S = EXAMPLES[name]
    C = build(rho)
    return C, ActiveSet(S, C.shape[0])


def condition_summary(C, S, signs: Sequence[float] | None = None, **kw) -> dict[str, ConditionReport]:
    """PSD, IC and PIC reports for one design; IC holds the SingularC11 error when C11 is singular."""
    C = _symmetric(C)
    S = _as_active(S, C.shape[0])
    if signs is None:
        signs = np.ones(len(S))
    out = {"PSD": check_psd(C)}
    try:
        out["IC"] = check_ic(C, S, signs)
    except SingularC11 as exc:
        out["IC"] = exc
    out["PIC"] = check_pic(C, S, signs, **kw)
    return out
