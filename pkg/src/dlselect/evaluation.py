"""Metrics, the replication runner and table-style reports.

Each replication tunes every method on train/validation and scores it on
the test split.  Lasso and Enet report the nonzero coefficients as their
selection, DLSelect+Ridge its dual active set; Ridge reports no selection.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from dlselect.data import ActiveSet
from dlselect.designs import DesignSpec, generate_replication
from dlselect.dual import TOL_ACTIVE
from dlselect.errors import DimensionMismatch, EmptySequence, EmptyTruth, NumericalError
from dlselect.lasso import SolverOptions, default_lambda_grid, lasso_path
from dlselect.pipeline import (
    TIE_TOL,
    _fallback_selection,
    _lambda1_search,
    _lambda2_search,
    _select,
    default_lambda2_grid,
    embed,
    reduced_design,
)

log = logging.getLogger(__name__)

METHODS = ("Lasso", "Ridge", "Enet", "DLSelect+Ridge")
REPORT_COLUMNS = ["n", "Method", "MSE(SE)", "TPR", "FDR"]
EXTRA_COLUMNS = ["median_mse", "se_mse", "median_tpr", "median_fdr", "reps", "failures"]


def tpr(selected: ActiveSet, truth: ActiveSet) -> float:
    """|selected & truth| / |truth|."""
    if len(truth) == 0:
        raise EmptyTruth("TPR is undefined for an empty true support")
    return len(set(selected) & set(truth)) / len(truth)


def fdr(selected: ActiveSet, truth: ActiveSet) -> float:
    """|selected - truth| / |selected|; 0 when nothing is selected."""
    if len(selected) == 0:
        return 0.0
    return len(set(selected) - set(truth)) / len(selected)


def mse(Y, Yhat) -> float:
    Y = np.asarray(Y, dtype=float)
    Yhat = np.asarray(Yhat, dtype=float)
    if Y.shape != Yhat.shape:
        raise DimensionMismatch(f"{Y.shape} vs {Yhat.shape}")
    r = Y - Yhat
    return float(r @ r) / Y.size


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """(median, standard error) with SE = sample std (ddof=1) / sqrt(R); SE is 0 for R = 1."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise EmptySequence("cannot aggregate an empty sequence")
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(np.median(v)), se


@dataclass
class MethodResult:
    method: str
    n: int
    mse: list[float] = field(default_factory=list)
    tpr: list[float] | None = field(default_factory=list)
    fdr: list[float] | None = field(default_factory=list)
    failures: int = 0

    @property
    def reps(self) -> int:
        return len(self.mse)

    @property
    def median_mse(self) -> float:
        return aggregate(self.mse)[0]

    @property
    def se_mse(self) -> float:
        return aggregate(self.mse)[1]

    @property
    def median_tpr(self) -> float | None:
        return aggregate(self.tpr)[0] if self.tpr else None

    @property
    def median_fdr(self) -> float | None:
        return aggregate(self.fdr)[0] if self.fdr else None


@dataclass(frozen=True)
class GridConfig:
    lambda1_size: int = 50
    lambda1_ratio: float = 1e-3
    lambda2: tuple[float, ...] = tuple(default_lambda2_grid(50))
    enet_lambda2: tuple[float, ...] = tuple(np.geomspace(1e2, 1e-2, 9))


@dataclass
class ExperimentResult:
    spec: DesignSpec
    methods: dict[str, MethodResult]
    failed_reps: list[int]
    containment_violations: int
    rows: list[dict] = field(default_factory=list, repr=False)

    def ordered(self) -> list[MethodResult]:
        return [self.methods[m] for m in METHODS if m in self.methods]


def _score(test, beta):
    return mse(test.Y, test.X @ beta)


def run_replication(spec: DesignSpec, rep: int, methods: Sequence[str] = METHODS,
                    grids: GridConfig = GridConfig(), opts: SolverOptions | None = None,
                    tol_active: float = TOL_ACTIVE) -> list[dict]:
    """One replication; returns one row per method.

    The DLSelect row also carries ``containment_ok``: whether the dual set
    contains the Lasso support.
    """
    data = generate_replication(spec, rep)
    train, val, test, truth = data.train, data.val, data.test, data.support
    grid1 = default_lambda_grid(train, grids.lambda1_size, grids.lambda1_ratio)
    rows = []

    def row(method, beta, selected):
        rows.append({
            "rep": rep, "method": method, "mse": _score(test, beta),
            "tpr": None if selected is None or len(truth) == 0 else tpr(selected, truth),
            "fdr": None if selected is None else fdr(selected, truth),
            "n_selected": None if selected is None else len(selected),
            "containment_ok": None,
        })

    if "Lasso" in methods or "DLSelect+Ridge" in methods:
        i1, _, fits = _lambda1_search(train, val, grid1, opts, tol_active)
        fit = fits[i1]
        lasso_sel = fit.support
        if "Lasso" in methods:
            row("Lasso", fit.beta, lasso_sel)
        if "DLSelect+Ridge" in methods:
            S, _ = _select(train, fit, tol_active)
            ok = lasso_sel.issubset(S)
            if not ok:
                log.warning("rep %d: Lasso support not contained in the dual active set", rep)
            if len(S) == 0:
                S = _fallback_selection(train)
            i2, _, ridges = _lambda2_search(reduced_design(train, S), reduced_design(val, S), grids.lambda2)
            row("DLSelect+Ridge", embed(ridges[i2].beta, S), S)
            rows[-1]["containment_ok"] = ok
    if "Ridge" in methods:
        i2, _, ridges = _lambda2_search(train, val, grids.lambda2)
        row("Ridge", ridges[i2].beta, None)
    if "Enet" in methods:
        best = None  # (val_mse, lam1, lam2, fit)
        for l2 in grids.enet_lambda2:
            for lam1, f in zip(grid1, lasso_path(train, grid1, opts, lambda2=l2)):
                cand = (mse(val.Y, val.X @ f.beta), float(lam1), float(l2), f)
                if best is None or _better_2d(cand, best):
                    best = cand
        row("Enet", best[3].beta, best[3].support)
    order = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: order[r["method"]])
    return rows


def _better_2d(a, b) -> bool:
    """Lower validation MSE wins; near-ties go to larger lambda1, then larger lambda2."""
    if abs(a[0] - b[0]) <= TIE_TOL * max(1.0, abs(b[0])):
        return (a[1], a[2]) > (b[1], b[2])
    return a[0] < b[0]


def _safe_replication(args):
    spec, rep, methods, grids, opts, tol_active = args
    try:
        return rep, run_replication(spec, rep, methods, grids, opts, tol_active), None
    except NumericalError as exc:
        return rep, None, str(exc)


def run_experiment(spec: DesignSpec, methods: Sequence[str] = METHODS, grids: GridConfig = GridConfig(),
                   opts: SolverOptions | None = None, jobs: int | None = 1,
                   tol_active: float = TOL_ACTIVE) -> ExperimentResult:
    """Run ``spec.reps`` replications; failed ones are excluded and counted."""
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}")
    methods = [m for m in METHODS if m in set(methods)]
    if jobs is None:
        jobs = os.cpu_count() or 1
    tasks = [(spec, r, tuple(methods), grids, opts, tol_active) for r in range(spec.reps)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_safe_replication, tasks))
    else:
        outcomes = [_safe_replication(t) for t in tasks]
    outcomes.sort(key=lambda o: o[0])

    results = {m: MethodResult(m, spec.n_train, tpr=None if m == "Ridge" else [],
                               fdr=None if m == "Ridge" else []) for m in methods}
    failed, violations, all_rows = [], 0, []
    for rep, rows, err in outcomes:
        if rows is None:
            log.warning("replication %d failed and is excluded: %s", rep, err)
            failed.append(rep)
            continue
        for r in rows:
            all_rows.append(r)
            res = results[r["method"]]
            res.mse.append(r["mse"])
            if res.tpr is not None and r["tpr"] is not None:
                res.tpr.append(r["tpr"])
                res.fdr.append(r["fdr"])
            if r["containment_ok"] is False:
                violations += 1
    for res in results.values():
        res.failures = len(failed)
    return ExperimentResult(spec, results, failed, violations, all_rows)


def _fmt_rate(v):
    return "NA" if v is None else format(v, ".3g")


def report_rows(results: Iterable[MethodResult]) -> list[dict]:
    order = {m: i for i, m in enumerate(METHODS)}
    res = sorted(results, key=lambda r: (r.n, order.get(r.method, len(order)), r.method))
    out = []
    for r in res:
        if r.reps == 0:
            continue
        out.append({
            "n": r.n, "Method": r.method, "MSE(SE)": "%.2f(%.2f)" % (r.median_mse, r.se_mse),
            "TPR": _fmt_rate(r.median_tpr), "FDR": _fmt_rate(r.median_fdr),
            "median_mse": repr(r.median_mse), "se_mse": repr(r.se_mse),
            "median_tpr": "" if r.median_tpr is None else repr(r.median_tpr),
            "median_fdr": "" if r.median_fdr is None else repr(r.median_fdr),
            "reps": r.reps, "failures": r.failures,
        })
    return out


def write_report(results: Iterable[MethodResult], fmt: str = "csv", path=None) -> str:
    """Render results as CSV (table columns plus full-precision aggregates) or Markdown."""
    rows = report_rows(results)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS + EXTRA_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    elif fmt == "markdown":
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "---|" * len(REPORT_COLUMNS)]
        for r in rows:
            lines.append("| " + " | ".join(str(r[c]) for c in REPORT_COLUMNS) + " |")
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_report(text: str) -> list[dict]:
    """Parse a CSV report back into typed aggregates."""
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        out.append({
            "n": int(r["n"]), "method": r["Method"],
            "median_mse": float(r["median_mse"]), "se_mse": float(r["se_mse"]),
            "median_tpr": float(r["median_tpr"]) if r["median_tpr"] else None,
            "median_fdr": float(r["median_fdr"]) if r["median_fdr"] else None,
            "reps": int(r["reps"]), "failures": int(r["failures"]),
        })
    return out


RAW_COLUMNS = ["n", "rep", "method", "mse", "tpr", "fdr", "n_selected", "containment_ok"]


def write_raw(result: ExperimentResult, path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RAW_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in result.rows:
        w.writerow({**{k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                       for k, v in r.items()}, "n": result.spec.n_train})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def results_from_raw(text: str) -> list[MethodResult]:
    """Rebuild per-method results from the per-replication CSV written by :func:`write_raw`."""
    res: dict[tuple[int, str], MethodResult] = {}
    for r in csv.DictReader(io.StringIO(text)):
        key = (int(r["n"]), r["method"])
        if key not in res:
            none = r["tpr"] == ""
            res[key] = MethodResult(r["method"], key[0], tpr=None if none else [], fdr=None if none else [])
        m = res[key]
        m.mse.append(float(r["mse"]))
        if m.tpr is not None and r["tpr"] != "":
            m.tpr.append(float(r["tpr"]))
            m.fdr.append(float(r["fdr"]))
    return list(res.values())
