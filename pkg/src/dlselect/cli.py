"""Command-line interface: generate, fit, select, check, benchmark, report.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
Diagnostics go to stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from dlselect import __version__
from dlselect.conditions import EXAMPLES, condition_summary, example_covariance
from dlselect.data import (
    ActiveSet,
    apply_standardization,
    empirical_covariance,
    read_matrix_csv,
    standardize,
    write_dataset_csv,
    _resolve_column,
)
from dlselect.designs import KINDS, SPLITS, DesignSpec, generate_replication, make_covariance
from dlselect.dual import TOL_ACTIVE
from dlselect.errors import DLSelectError, NumericalError, SingularC11
from dlselect.evaluation import (
    METHODS,
    GridConfig,
    results_from_raw,
    run_experiment,
    write_raw,
    write_report,
)
from dlselect.lasso import SolverOptions, fit_enet, fit_lasso
from dlselect.pipeline import default_lambda2_grid, dlselect_ridge, fit_dlselect_ridge
from dlselect.ridge import fit_ridge

log = logging.getLogger("dlselect")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _rho(text):
    v = float(text)
    if not -1 < v < 1:
        raise argparse.ArgumentTypeError(f"rho must lie in (-1, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return v


def _index_list(text):
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _methods(text):
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [m for m in names if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown methods {bad}; choose from {list(METHODS)}")
    return names


def _add_data_flags(p):
    p.add_argument("--response", default=None, help="response column name or 0-based index (default: last)")
    p.add_argument("--no-header", dest="header", action="store_false", help="CSV has no header row")


def _add_design_flags(p):
    p.add_argument("--design", choices=KINDS, default="block_diagonal")
    p.add_argument("--p", type=_positive_int, default=100)
    p.add_argument("--rho", type=_rho, default=0.9)
    p.add_argument("--block-size", type=_positive_int, default=None)
    p.add_argument("--num-blocks", type=_positive_int, default=None)
    p.add_argument("--n", type=_positive_int, default=200, help="training size")
    p.add_argument("--n-val", type=_positive_int, default=None, help="validation size (default: --n)")
    p.add_argument("--n-test", type=_positive_int, default=1000)
    p.add_argument("--s", type=int, default=20)
    p.add_argument("--sigma", type=_nonneg_float, default=1.0)
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dlselect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", default=None, help="YAML/JSON file of flag defaults; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="simulate train/val/test splits with truth metadata")
    _add_design_flags(g)
    g.add_argument("--rep", type=int, default=0, help="replication index")
    g.add_argument("--out", required=False, default=None, help="output directory")

    f = sub.add_parser("fit", help="fit Lasso, Ridge or Elastic-Net at fixed penalties")
    f.add_argument("input")
    _add_data_flags(f)
    f.add_argument("--method", choices=("lasso", "ridge", "enet"), default="lasso")
    f.add_argument("--lambda1", type=_nonneg_float, default=None)
    f.add_argument("--lambda2", type=_nonneg_float, default=None)
    f.add_argument("--original-scale", action="store_true", help="report coefficients on the raw scale")
    f.add_argument("--out", default=None, help="coefficient CSV (default: stdout)")

    s = sub.add_parser("select", help="dual Lasso selection plus Ridge refit")
    s.add_argument("input")
    _add_data_flags(s)
    s.add_argument("--val", default=None, help="validation CSV for --tune (default: split the input)")
    s.add_argument("--val-fraction", type=float, default=0.5)
    s.add_argument("--lambda1", type=_nonneg_float, default=None)
    s.add_argument("--lambda2", type=_nonneg_float, default=None)
    s.add_argument("--tune", action="store_true", help="choose both penalties on validation data")
    s.add_argument("--grid-size", type=_positive_int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol-active", type=float, default=TOL_ACTIVE)
    s.add_argument("--out", default=None, help="CSV of selected columns, coefficients and dual margins")

    c = sub.add_parser("check", help="PSD / IC / PIC verdicts for a covariance or design")
    src = c.add_mutually_exclusive_group(required=False)
    src.add_argument("--matrix", default=None,
                     help=f"covariance CSV, or a built-in example name ({', '.join(EXAMPLES)})")
    src.add_argument("--design-csv", default=None, help="raw design CSV; its standardized covariance is checked")
    src.add_argument("--example", choices=sorted(EXAMPLES), default=None)
    c.add_argument("--rho", type=_rho, default=0.2, help="parameter of the built-in examples")
    c.add_argument("--support", type=_index_list, default=None, help="1-based active columns, e.g. 1,2,3,4")
    c.add_argument("--signs", type=_float_list, default=None, help="signs on the support (default all +1)")
    c.add_argument("--candidates-csv", default=None, help="write per-candidate PIC margins here")
    c.add_argument("--cap", type=_positive_int, default=None)
    _add_data_flags(c)
    c.add_argument("--header", dest="header", action="store_true",
                   help="file has a header row (default: yes for --design-csv, no for --matrix)")
    c.set_defaults(header=None)

    b = sub.add_parser("benchmark", help="replicated comparison of Lasso, Ridge, Enet, DLSelect+Ridge")
    _add_design_flags(b)
    b.add_argument("--reps", type=_positive_int, default=20)
    b.add_argument("--methods", type=_methods, default=list(METHODS))
    b.add_argument("--grid-size", type=_positive_int, default=50)
    b.add_argument("--enet-grid-size", type=_positive_int, default=9)
    b.add_argument("--jobs", type=_positive_int, default=None, help="worker processes (default: all CPUs)")
    b.add_argument("--out", default=None, help="output prefix for .csv, .md and .raw.csv")

    r = sub.add_parser("report", help="re-aggregate a per-replication CSV written by benchmark")
    r.add_argument("raw")
    r.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    r.add_argument("--out", default=None)
    return parser


def _load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    cfg = yaml.safe_load(p.read_text()) or {}
    if not isinstance(cfg, dict):
        raise UsageError(f"{p}: config must be a mapping of flag names to values")
    return {str(k).replace("-", "_"): v for k, v in cfg.items()}


def _config_tokens(sub: argparse.ArgumentParser, cfg: dict, source) -> list[str]:
    """Turn a config mapping into flags; they precede user flags, so user flags win."""
    tokens = []
    for key, value in cfg.items():
        acts = [a for a in sub._actions if a.dest == key and a.option_strings and key != "help"]
        if not acts:
            raise UsageError(f"{source}: unknown key {key!r} for this command")
        if isinstance(value, bool):
            # pick the switch that stores this value (--header / --no-header)
            match = [a for a in acts if isinstance(a, argparse._StoreConstAction) and a.const is value]
            if match:
                tokens.append(match[0].option_strings[-1])
            elif any(isinstance(a, argparse._StoreConstAction) for a in acts):
                continue  # value equals the switch's default
            else:
                tokens += [acts[0].option_strings[-1], str(value)]
        elif isinstance(value, list):
            tokens += [acts[0].option_strings[-1], ",".join(map(str, value))]
        else:
            tokens += [acts[0].option_strings[-1], str(value)]
    return tokens


def parse_args(argv=None) -> argparse.Namespace:
    """Parse and validate; raises UsageError on any bad flag."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        at = argv.index(args.command, argv.index(args.config) + 1 if args.config in argv else 0)
        argv = argv[: at + 1] + _config_tokens(sub, cfg, args.config) + argv[at + 1:]
        args = parser.parse_args(argv)
    _validate(args)
    return args


def _validate(args):
    if args.command == "benchmark" and args.seed is None:
        raise UsageError("benchmark requires --seed (runs are reproducible by construction)")
    if args.command in ("generate", "benchmark") and args.seed is not None and args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    if args.command == "generate" and args.out is None:
        raise UsageError("generate requires --out DIR")
    if args.command == "fit":
        if args.method in ("lasso", "enet") and args.lambda1 is None:
            raise UsageError(f"--method {args.method} requires --lambda1")
        if args.method in ("ridge", "enet") and args.lambda2 is None:
            raise UsageError(f"--method {args.method} requires --lambda2")
    if args.command == "select":
        if not args.tune and (args.lambda1 is None or args.lambda2 is None):
            raise UsageError("select needs --lambda1 and --lambda2, or --tune")
        if args.tune and (args.lambda1 is not None or args.lambda2 is not None):
            raise UsageError("--tune chooses the penalties; drop --lambda1/--lambda2")
        if not 0 < args.val_fraction < 1:
            raise UsageError("--val-fraction must lie in (0, 1)")
    if args.command == "check":
        if not (args.matrix or args.design_csv or args.example):
            raise UsageError("check needs --matrix, --design-csv or --example")


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {p}")
    return p


def _spec_from(args, reps=1) -> DesignSpec:
    return DesignSpec(
        kind=args.design, p=args.p, rho=args.rho if args.design != "identity" else 0.0,
        block_size=args.block_size, num_blocks=args.num_blocks,
        n_train=args.n, n_val=args.n_val or args.n, n_test=args.n_test, s=args.s, sigma=args.sigma,
        design_seed=args.seed if args.seed is not None else 0, reps=reps,
    )


def _read_xy(path, response, header):
    M, names = read_matrix_csv(_require_file(path), header=header)
    j = _resolve_column(response, names, M.shape[1])
    X = np.delete(M, j, axis=1)
    if names is not None:
        xnames = [n for i, n in enumerate(names) if i != j]
    else:
        xnames = [f"x{i + 1}" for i in range(X.shape[1])]
    return X, M[:, j], xnames


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args):
    spec = _spec_from(args)
    data = generate_replication(spec, args.rep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for split in SPLITS:
        write_dataset_csv(out / f"{split}.csv", data.split(split))
    with (out / "truth.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["column", "beta", "active"])
        for j, b in enumerate(data.beta):
            w.writerow([j + 1, repr(float(b)), int(j in data.support)])
    manifest = {
        "spec": spec.to_dict(), "rep_index": args.rep, "seeds": data.seeds,
        "support": [j + 1 for j in data.support], "files": [f"{s}.csv" for s in SPLITS] + ["truth.csv"],
        "covariance_min_eigenvalue": float(np.linalg.eigvalsh(make_covariance(spec))[0]),
        "standardization": "train split standardized; val/test mapped with the train record",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(SPLITS)} splits, truth.csv and manifest.json to {out}", file=sys.stderr)
    return EXIT_OK


def _coef_csv(names, beta, extra=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["column", "name", "coefficient"] + list(extra or {})
    w.writerow(cols)
    for j, (nm, b) in enumerate(zip(names, beta)):
        row = [j + 1, nm, repr(float(b))]
        for vals in (extra or {}).values():
            row.append(vals[j])
        w.writerow(row)
    return buf.getvalue()


def cmd_fit(args):
    X, Y, names = _read_xy(args.input, args.response, args.header)
    ds = standardize(X, Y)
    if args.method == "lasso":
        beta = fit_lasso(ds, args.lambda1).beta
    elif args.method == "ridge":
        beta = fit_ridge(ds, args.lambda2).beta
    else:
        beta = fit_enet(ds, args.lambda1, args.lambda2).beta
    text = _coef_csv(names, beta)
    if args.original_scale:
        coef, icpt = ds.std_record.to_original(beta)
        text = _coef_csv(names, coef) + f"0,(intercept),{icpt!r}\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_select(args):
    X, Y, names = _read_xy(args.input, args.response, args.header)
    if args.tune:
        if args.val is not None:
            Xv, Yv, _ = _read_xy(args.val, args.response, args.header)
            Xt, Yt = X, Y
        else:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
            perm = rng.permutation(X.shape[0])
            n_val = int(round(args.val_fraction * X.shape[0]))
            if n_val < 2 or X.shape[0] - n_val < 2:
                raise UsageError("not enough rows to split into training and validation sets")
            vi, ti = np.sort(perm[:n_val]), np.sort(perm[n_val:])
            Xt, Yt, Xv, Yv = X[ti], Y[ti], X[vi], Y[vi]
        train = standardize(Xt, Yt)
        val = apply_standardization(Xv, Yv, train.std_record)
        from dlselect.lasso import default_lambda_grid
        res = fit_dlselect_ridge(train, val, default_lambda_grid(train, args.grid_size),
                                 default_lambda2_grid(args.grid_size), tol_active=args.tol_active)
    else:
        train = standardize(X, Y)
        res = dlselect_ridge(train, args.lambda1, args.lambda2, tol_active=args.tol_active)
    state = res.diagnostics.get("dual")
    lam = res.lambda1
    corr = state.correlations if state is not None else np.full(train.p, np.nan)
    extra = {
        "selected": [int(j in res.selected) for j in range(train.p)],
        "dual_correlation": [repr(float(c)) for c in corr],
        "dual_margin": [repr(float(lam - abs(c))) for c in corr],
    }
    text = _coef_csv(names, res.beta, extra)
    if args.out is not None:
        Path(args.out).write_text(text)
    sel_names = [names[j] for j in res.selected]
    lines = [
        f"lambda1 = {res.lambda1:.6g}",
        f"lambda2 = {res.lambda2:.6g}",
        f"selected ({len(res.selected)}): " + ", ".join(f"{j + 1}:{nm}" for j, nm in zip(res.selected, sel_names)),
    ]
    if state is not None:
        lines.append(f"lasso support size = {len(res.diagnostics['lasso'].support)}; "
                     f"dual feasibility margin = {state.feasibility_margin:.3g}")
    print("\n".join(lines))
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def _fmt_candidate(R):
    return ",".join(str(j + 1) for j in R)


def cmd_check(args):
    if args.example or (args.matrix and not Path(args.matrix).exists()
                        and Path(args.matrix).stem in EXAMPLES):
        name = args.example or Path(args.matrix).stem
        C, S = example_covariance(name, args.rho)
        print(f"matrix: built-in {name} with rho = {args.rho:g}")
    elif args.matrix:
        C, _ = read_matrix_csv(_require_file(args.matrix), header=bool(args.header))
        S = None
    else:
        X, Y, _ = _read_xy(args.design_csv, args.response, args.header is not False)
        C = empirical_covariance(standardize(X, Y))
        S = None
    p = C.shape[0]
    if args.support is not None:
        bad = [j for j in args.support if not 1 <= j <= p]
        if bad:
            raise UsageError(f"--support indices {bad} outside 1..{p}")
        S = ActiveSet.of([j - 1 for j in args.support], p)
    if S is None:
        raise UsageError("--support is required for a covariance or design file")
    signs = args.signs if args.signs is not None else [1.0] * len(S)
    if len(signs) != len(S):
        raise UsageError(f"--signs has {len(signs)} entries but the support has {len(S)}")
    rep = condition_summary(C, S, signs, cap=args.cap)
    psd, ic, pic = rep["PSD"], rep["IC"], rep["PIC"]
    print(f"support: {_fmt_candidate(S)}")
    print(f"PSD: {'holds' if psd.holds else 'fails'}; min eigenvalue = {psd.margin:.6g}")
    if isinstance(ic, SingularC11):
        print(f"IC: SingularC11 (condition number {ic.cond:.3g})")
    else:
        worst = "" if ic.witness is None else f"; worst row = {ic.witness + 1}"
        print(f"IC: {'holds' if ic.holds else 'fails'}; margin = {ic.margin:.6g}{worst}")
    cands = pic.details["candidates"]
    wit = "" if pic.witness is None else f"; worst candidate = {_fmt_candidate(pic.witness)}"
    print(f"PIC: {'holds' if pic.holds else 'fails'}; margin = {pic.margin:.6g}; "
          f"{len(cands)} candidate(s){wit}")
    for R, m in cands.items():
        print(f"  candidate {_fmt_candidate(R)}: margin = {m:.6g}")
    if args.candidates_csv:
        with open(args.candidates_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["candidate", "margin"])
            for R, m in cands.items():
                w.writerow([_fmt_candidate(R), repr(m)])
    return EXIT_OK


def cmd_benchmark(args):
    spec = _spec_from(args, reps=args.reps)
    grids = GridConfig(
        lambda1_size=args.grid_size,
        lambda2=tuple(default_lambda2_grid(args.grid_size)),
        enet_lambda2=tuple(np.geomspace(1e2, 1e-2, args.enet_grid_size)),
    )
    res = run_experiment(spec, methods=args.methods, grids=grids, jobs=args.jobs)
    csv_text = write_report(res.ordered(), "csv")
    md_text = write_report(res.ordered(), "markdown")
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.csv").write_text(csv_text)
        Path(f"{prefix}.md").write_text(md_text)
        write_raw(res, f"{prefix}.raw.csv")
        print(f"wrote {prefix}.csv, {prefix}.md, {prefix}.raw.csv", file=sys.stderr)
    sys.stdout.write(md_text)
    if res.failed_reps:
        print(f"{len(res.failed_reps)} replication(s) failed and were excluded: {res.failed_reps}",
              file=sys.stderr)
    if res.containment_violations:
        print(f"warning: {res.containment_violations} Lasso-support containment violation(s)", file=sys.stderr)
    return EXIT_OK


def cmd_report(args):
    raw = _require_file(args.raw).read_text()
    results = results_from_raw(raw)
    text = write_report(results, args.format)
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate, "fit": cmd_fit, "select": cmd_select,
    "check": cmd_check, "benchmark": cmd_benchmark, "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DLSelectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
