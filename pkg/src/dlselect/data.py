"""Regression data model: standardized datasets, supports and covariance blocks."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from dlselect.errors import (
    CSVFormatError,
    DimensionMismatch,
    IndexOutOfRange,
    ZeroVarianceColumn,
)

STD_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StdRecord:
    """Column means/scales and the response mean removed by :func:`standardize`."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    def to_original(self, beta: np.ndarray) -> tuple[np.ndarray, float]:
        """Map standardized-scale coefficients to (coef, intercept) on the raw scale."""
        coef = np.asarray(beta, dtype=float) / self.x_scale
        return coef, float(self.y_mean - self.x_mean @ coef)


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    standardized: bool = False
    std_record: StdRecord | None = None
    columns: tuple[int, ...] | None = None  # original column index of each column

    def __post_init__(self):
        X = _frozen(self.X)
        Y = _frozen(self.Y)
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
        if Y.ndim != 1:
            raise DimensionMismatch(f"Y must be 1-D, got shape {Y.shape}")
        n, p = X.shape
        if Y.shape[0] != n:
            raise DimensionMismatch(f"|Y| = {Y.shape[0]} but X has {n} rows")
        if n < 2 or p < 1:
            raise DimensionMismatch(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise ValueError("X and Y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        cols = tuple(range(p)) if self.columns is None else tuple(int(c) for c in self.columns)
        if len(cols) != p:
            raise DimensionMismatch("columns mapping must have one entry per column")
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def check_standardized(self, tol: float = STD_TOL) -> bool:
        X, Y, n = self.X, self.Y, self.n
        return bool(
            np.all(np.abs(X.mean(axis=0)) <= tol)
            and np.all(np.abs((X * X).sum(axis=0) / n - 1.0) <= tol)
            and abs(Y.mean()) <= tol
        )


@dataclass(frozen=True)
class ActiveSet:
    """Strictly increasing column indices in ``[0, p)``."""

    indices: tuple[int, ...]
    p: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.p):
            raise IndexOutOfRange(f"indices {idx} not within [0, {self.p})")

    @classmethod
    def of(cls, indices: Iterable[int], p: int) -> "ActiveSet":
        """Build from any iterable, sorting and removing duplicates."""
        return cls(tuple(sorted({int(i) for i in indices})), p)

    @classmethod
    def from_mask(cls, mask) -> "ActiveSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(tuple(np.flatnonzero(mask).tolist()), mask.size)

    @classmethod
    def support(cls, beta) -> "ActiveSet":
        """Indices of the nonzero entries of ``beta``."""
        return cls.from_mask(np.asarray(beta) != 0)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j):
        return j in set(self.indices)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.p, dtype=bool)
        m[list(self.indices)] = True
        return m

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp)

    def complement(self) -> "ActiveSet":
        return ActiveSet.from_mask(~self.mask)

    def issubset(self, other: "ActiveSet") -> bool:
        return set(self.indices) <= set(other.indices)


@dataclass(frozen=True)
class CovariancePartition:
    C11: np.ndarray
    C12: np.ndarray
    C21: np.ndarray
    C22: np.ndarray
    active: ActiveSet
    inactive: ActiveSet = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "inactive", self.active.complement())

    def reassemble(self) -> np.ndarray:
        """Blocks put back together in active-first order."""
        return np.block([[self.C11, self.C12], [self.C21, self.C22]])

    @property
    def permutation(self) -> np.ndarray:
        return np.concatenate([self.active.array, self.inactive.array]).astype(np.intp)


def standardize(X, Y) -> Dataset:
    """Center every column and Y, and scale columns to ``(1/n) X_j'X_j = 1``.

    Y is centered only, never scaled.
    """
    X = np.array(X, dtype=float)
    Y = np.array(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim != 1 or Y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"|Y| = {Y.size} but X has {X.shape[0]} rows")
    n = X.shape[0]
    if n < 2:
        raise DimensionMismatch("need at least two observations")
    for j in range(X.shape[1]):
        if np.ptp(X[:, j]) == 0:
            raise ZeroVarianceColumn(j)
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    x_scale = np.sqrt((Xc * Xc).sum(axis=0) / n)
    y_mean = float(Y.mean())
    rec = StdRecord(_frozen(x_mean), _frozen(x_scale), y_mean)
    return Dataset(Xc / x_scale, Y - y_mean, standardized=True, std_record=rec)


def apply_standardization(X, Y, record: StdRecord) -> Dataset:
    """Transform new data with a previously fitted record (e.g. the training split's).

    The result is not flagged standardized: its column moments are only
    approximately 0 and 1.
    """
    X = np.array(X, dtype=float)
    Y = np.array(Y, dtype=float)
    if X.ndim != 2 or X.shape[1] != record.x_mean.size:
        raise DimensionMismatch(f"X has shape {X.shape}, record expects {record.x_mean.size} columns")
    return Dataset((X - record.x_mean) / record.x_scale, Y - record.y_mean,
                   standardized=False, std_record=record)


def empirical_covariance(ds: Dataset) -> np.ndarray:
    """C = X'X / n."""
    C = ds.X.T @ ds.X / ds.n
    return (C + C.T) / 2


def partition_covariance(C, S: ActiveSet | Sequence[int]) -> CovariancePartition:
    C = np.asarray(C, dtype=float)
    p = C.shape[0]
    if C.ndim != 2 or C.shape[1] != p:
        raise DimensionMismatch(f"C must be square, got {C.shape}")
    if not isinstance(S, ActiveSet):
        S = ActiveSet.of(S, p)
    elif S.p != p:
        raise IndexOutOfRange(f"active set built for p={S.p}, matrix has p={p}")
    a = S.array
    b = S.complement().array
    return CovariancePartition(
        C11=C[np.ix_(a, a)],
        C12=C[np.ix_(a, b)],
        C21=C[np.ix_(b, a)],
        C22=C[np.ix_(b, b)],
        active=S,
    )


def _resolve_column(name_or_index: str | int | None, header: list[str] | None, width: int) -> int:
    if name_or_index is None:
        return width - 1
    if isinstance(name_or_index, int) or str(name_or_index).lstrip("-").isdigit():
        idx = int(name_or_index)
        if idx < 0:
            idx += width
        if not 0 <= idx < width:
            raise CSVFormatError(f"response column index {name_or_index} out of range (width {width})")
        return idx
    if header is None:
        raise CSVFormatError(f"response column {name_or_index!r} given by name but the file has no header")
    try:
        return header.index(str(name_or_index))
    except ValueError:
        raise CSVFormatError(f"response column {name_or_index!r} not in header {header}") from None


def read_matrix_csv(path, header: bool = True) -> tuple[np.ndarray, list[str] | None]:
    """Parse a numeric CSV. Non-numeric cells raise with row/column diagnostics."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    names = None
    if header:
        if not rows:
            raise CSVFormatError(f"{path}: empty file")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise CSVFormatError(f"{path}: no data rows")
    width = len(names) if names is not None else len(rows[0])
    out = np.empty((len(rows), width))
    first_line = 2 if header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CSVFormatError(f"{path}: row {i + first_line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                col = names[j] if names else str(j)
                raise CSVFormatError(
                    f"{path}: non-numeric value {cell!r} at row {i + first_line}, column {col}"
                ) from None
    return out, names


def load_csv(path, response: str | int | None = None, header: bool = True,
             standardize_data: bool = True) -> Dataset:
    """Read one observation per row; ``response`` picks the Y column (default: last)."""
    M, names = read_matrix_csv(path, header=header)
    j = _resolve_column(response, names, M.shape[1])
    Y = M[:, j]
    X = np.delete(M, j, axis=1)
    if standardize_data:
        return standardize(X, Y)
    return Dataset(X, Y)


def write_dataset_csv(path, ds: Dataset, y_name: str = "y") -> None:
    cols = [f"x{j + 1}" for j in ds.columns] + [y_name]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for xrow, y in zip(ds.X, ds.Y):
            w.writerow([repr(float(v)) for v in xrow] + [repr(float(y))])
