"""Simulation designs: covariance builders, fixed Gaussian designs and noisy responses.

The training split is standardized; validation and test are mapped with
the training split's means and scales so that coefficients fitted on the
training scale transfer without a systematic rescaling error.

Randomness comes from Philox streams keyed by
``SeedSequence([design_seed, replication slot, split tag])``.  The design
matrices depend on ``design_seed`` only and stay fixed across
replications; the noise of replication ``r`` depends on ``(design_seed, r)``.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from dlselect.data import ActiveSet, Dataset, apply_standardization, standardize
from dlselect.errors import InvalidSpec, NotPSD

KINDS = ("block_diagonal", "single_block_noise", "single_block", "toeplitz", "identity")
SPLITS = ("train", "val", "test")
_TAGS = {"X_train": 0, "X_val": 1, "X_test": 2, "train": 3, "val": 4, "test": 5}
JITTER = 1e-10


@dataclass(frozen=True)
class DesignSpec:
    kind: str
    p: int
    rho: float = 0.0
    block_size: int | None = None
    num_blocks: int | None = None
    n_train: int = 100
    n_val: int = 100
    n_test: int = 1000
    s: int = 20
    sigma: float = 1.0
    design_seed: int = 0
    reps: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown design kind {self.kind!r}; choose from {KINDS}")
        if self.p < 1:
            raise InvalidSpec("p must be >= 1")
        if not -1 < self.rho < 1:
            raise InvalidSpec(f"rho must lie in (-1, 1), got {self.rho}")
        if not 0 <= self.s <= self.p:
            raise InvalidSpec(f"need 0 <= s <= p, got s={self.s}, p={self.p}")
        if min(self.n_train, self.n_val, self.n_test) < 2:
            raise InvalidSpec("every split needs at least 2 observations")
        if self.sigma < 0:
            raise InvalidSpec("sigma must be nonnegative")
        if self.reps < 1:
            raise InvalidSpec("reps must be >= 1")
        if self.design_seed < 0:
            raise InvalidSpec("design_seed must be nonnegative")
        if self.kind == "block_diagonal":
            b, k = self.block_size, self.num_blocks
            if b is None and k is None:
                b = 10
            if b is None:
                b = self.p // k if k else 0
            if k is None:
                k = self.p // b if b else 0
            if b < 1 or k < 1 or b * k != self.p:
                raise InvalidSpec(f"num_blocks * block_size must equal p ({k} * {b} != {self.p})")
            object.__setattr__(self, "block_size", b)
            object.__setattr__(self, "num_blocks", k)
        elif self.kind == "single_block_noise":
            b = 20 if self.block_size is None else self.block_size
            if not 1 <= b <= self.p:
                raise InvalidSpec(f"block_size must be in [1, p], got {b}")
            object.__setattr__(self, "block_size", b)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ReplicationData:
    train: Dataset
    val: Dataset
    test: Dataset
    beta: np.ndarray
    support: ActiveSet
    rep_index: int
    seeds: dict

    def split(self, name: str) -> Dataset:
        return getattr(self, name)


def _equicorrelated(b: int, rho: float) -> np.ndarray:
    B = np.full((b, b), rho)
    np.fill_diagonal(B, 1.0)
    return B


def make_covariance(spec: DesignSpec) -> np.ndarray:
    p, rho = spec.p, spec.rho
    if spec.kind == "identity":
        return np.eye(p)
    if spec.kind == "single_block":
        return _equicorrelated(p, rho)
    if spec.kind == "toeplitz":
        i = np.arange(p)
        return rho ** np.abs(i[:, None] - i[None, :]).astype(float)
    if spec.kind == "single_block_noise":
        S = np.eye(p)
        b = spec.block_size
        S[:b, :b] = _equicorrelated(b, rho)
        return S
    # block_diagonal
    return np.kron(np.eye(spec.num_blocks), _equicorrelated(spec.block_size, rho))


def true_beta(spec: DesignSpec) -> tuple[np.ndarray, ActiveSet]:
    """Ones on the first ``s`` coordinates, zeros elsewhere."""
    beta = np.zeros(spec.p)
    beta[: spec.s] = 1.0
    return beta, ActiveSet(tuple(range(spec.s)), spec.p)


def rng_for(design_seed: int, slot: int, tag: str) -> np.random.Generator:
    ss = np.random.SeedSequence([int(design_seed), int(slot), _TAGS[tag]])
    return np.random.Generator(np.random.Philox(ss))


def sample_mvn(Sigma, n: int, seed) -> np.ndarray:
    """n rows i.i.d. N(0, Sigma) via a Cholesky factor.

    ``seed`` may be an int, a SeedSequence or a Generator.  A failed
    factorization is retried once with ``JITTER * I`` added.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    try:
        L = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(Sigma + JITTER * np.eye(Sigma.shape[0]))
        except np.linalg.LinAlgError:
            raise NotPSD("covariance is not positive semidefinite") from None
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)
                                                   if not isinstance(seed, np.random.SeedSequence) else seed))
    Z = rng.standard_normal((n, Sigma.shape[0]))
    return Z @ L.T


def _design_key(spec: DesignSpec):
    return (spec.kind, spec.p, spec.rho, spec.block_size, spec.num_blocks,
            spec.n_train, spec.n_val, spec.n_test, spec.design_seed)


@lru_cache(maxsize=8)
def _fixed_design(key) -> dict[str, np.ndarray]:
    kind, p, rho, block_size, num_blocks, n_train, n_val, n_test, seed = key
    spec = DesignSpec(kind=kind, p=p, rho=rho, block_size=block_size, num_blocks=num_blocks,
                      n_train=n_train, n_val=n_val, n_test=n_test, s=0, design_seed=seed)
    Sigma = make_covariance(spec)
    out = {}
    for split, n in zip(SPLITS, (n_train, n_val, n_test)):
        X = sample_mvn(Sigma, n, rng_for(seed, 0, f"X_{split}"))
        X.setflags(write=False)
        out[split] = X
    return out


def fixed_design(spec: DesignSpec) -> dict[str, np.ndarray]:
    """Raw (unstandardized) design matrices for the three splits."""
    return _fixed_design(_design_key(spec))


def generate_replication(spec: DesignSpec, rep_index: int, standardization: str = "train") -> ReplicationData:
    """Fresh noise on the fixed design.

    ``standardization="train"`` (default) maps val/test with the training
    record; ``"independent"`` standardizes every split on its own.
    """
    if rep_index < 0:
        raise InvalidSpec("rep_index must be nonnegative")
    if standardization not in ("train", "independent"):
        raise InvalidSpec(f"unknown standardization {standardization!r}")
    Xs = fixed_design(spec)
    beta, support = true_beta(spec)
    data = {}
    for split in SPLITS:
        X = Xs[split]
        eps = rng_for(spec.design_seed, rep_index + 1, split).standard_normal(X.shape[0])
        Y = X @ beta + spec.sigma * eps
        if split == "train" or standardization == "independent":
            data[split] = standardize(X, Y)
        else:
            data[split] = apply_standardization(X, Y, data["train"].std_record)
    seeds = {"design_seed": spec.design_seed, "rep_index": rep_index, "rng": "Philox"}
    return ReplicationData(beta=beta, support=support, rep_index=rep_index, seeds=seeds, **data)
