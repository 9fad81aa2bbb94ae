"""Command-line front end.

Exit codes: 0 success, 2 input/parse error, 3 solver failure, 4 config error.
Diagnostics go to stderr; data goes to stdout unless ``--out`` is given.
Output files are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__
from .backends import BACKEND
from .exceptions import ParameterError, TrimregError
from .model import L1, SCAD, Dataset, PenaltySpec, ProxyMatrices
from .pipeline import (
    default_lambda_grid,
    fit_heur,
    fit_lasso,
    fit_scad2s,
    fit_scadws,
    fit_sparselts,
    tune_lambda_step1,
)
from .simulate import Scenario, run_scenario
from .step1 import Step1Config, solve_step1
from .step2 import build_augmented_design
from .step3 import estimate_single_weight, plugin_weight, refit_with_weights
from .tuning import bicr

EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4

METHODS = ("scadws", "scad2s", "heur", "lasso", "sparselts")


class CliError(Exception):
    def __init__(self, message, code):
        self.code = code
        super().__init__(message)


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-trimreg-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None):
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def load_csv(path: str, response: str, intercept: bool) -> tuple[Dataset, list]:
    """Strict CSV reader: header required, no missing values, '.' decimals.

    Parse failures name the offending row and column.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc}", EXIT_INPUT)
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CliError(f"{path}: empty file", EXIT_INPUT)
        if response not in header:
            raise CliError(f"{path}: response column {response!r} not in header", EXIT_INPUT)
        y_idx = header.index(response)
        feat_names = [h for i, h in enumerate(header) if i != y_idx]
        y, rows = [], []
        for r, rec in enumerate(reader, start=2):  # header is line 1
            if len(rec) != len(header):
                raise CliError(f"{path}: row {r} has {len(rec)} fields, expected {len(header)}", EXIT_INPUT)
            vals = []
            for c, cell in enumerate(rec):
                cell = cell.strip()
                if cell == "":
                    raise CliError(f"{path}: row {r}, column {header[c]}: missing value", EXIT_INPUT)
                try:
                    v = float(cell)
                except ValueError:
                    raise CliError(f"{path}: row {r}, column {header[c]}: not a number: {cell!r}", EXIT_INPUT)
                vals.append(v)
            y.append(vals[y_idx])
            rows.append([v for i, v in enumerate(vals) if i != y_idx])
    X = np.asarray(rows, dtype=float)
    yv = np.asarray(y, dtype=float)
    names = list(feat_names)
    if intercept:
        X = np.hstack([np.ones((X.shape[0], 1)), X])
        names = ["(intercept)"] + names
    try:
        return Dataset(yv, X, intercept=intercept), names
    except ParameterError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT)


def _parse_trim(value: str, n: int) -> int:
    try:
        x = float(value)
    except ValueError:
        raise CliError(f"invalid --trim value {value!r}", EXIT_CONFIG)
    if 0 <= x < 1:
        return int(np.floor(x * n))
    if x == int(x) and 0 <= int(x) < n:
        return int(x)
    raise CliError(f"--trim must be a fraction in [0,1) or a count below n, got {value!r}", EXIT_CONFIG)


def _grid_arg(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise CliError(f"invalid grid {text!r}", EXIT_CONFIG)


def _robust_standardize(data: Dataset) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Center and scale non-intercept columns by median and scaled MAD
    (falling back to the standard deviation for near-constant columns)."""
    X = data.X.copy()
    start = 1 if data.intercept else 0
    center = np.zeros(data.p)
    scale = np.ones(data.p)
    for j in range(start, data.p):
        c = np.median(X[:, j])
        s = 1.4826 * np.median(np.abs(X[:, j] - c))
        if s <= 0:
            s = float(np.std(X[:, j]))
        if s <= 0:
            s = 1.0
        X[:, j] = (X[:, j] - c) / s
        center[j], scale[j] = c, s
    return Dataset(data.y, X, intercept=data.intercept), center, scale


def _destandardize_beta(beta_std: np.ndarray, center: np.ndarray, scale: np.ndarray,
                        intercept: bool) -> np.ndarray:
    beta = beta_std / scale
    if intercept:
        beta[0] = beta_std[0] - np.sum(beta_std[1:] * center[1:] / scale[1:])
    return beta


def cmd_fit(args) -> int:
    raw, names = load_csv(args.data, args.response, args.intercept)
    if args.standardize:
        data, center, scale = _robust_standardize(raw)
    else:
        data, center, scale = raw, np.zeros(raw.p), np.ones(raw.p)
    n = data.n
    k_n = _parse_trim(args.trim, n)
    if args.method not in METHODS:
        raise CliError(f"unknown method {args.method!r}", EXIT_CONFIG)
    family = L1 if args.method in ("lasso", "sparselts") else SCAD
    cfg = Step1Config(k_n=k_n, penalty=PenaltySpec(family, 0.1), seed=args.seed,
                      n_starts=args.starts)

    try:
        if args.lam == "auto":
            proxies = (ProxyMatrices.identity(n) if args.method in ("lasso", "sparselts", "heur")
                       else ProxyMatrices.default(n))
            tune_cfg = replace(cfg, k_n=0) if args.method == "lasso" else cfg
            lams = default_lambda_grid(data, tune_cfg.k_n, n_points=15, decades=3.0)
            lam, _ = tune_lambda_step1(data, tune_cfg, proxies, lams)
        else:
            try:
                lam = float(args.lam)
            except ValueError:
                raise CliError(f"--lambda must be a number or 'auto', got {args.lam!r}", EXIT_CONFIG)
        cfg = replace(cfg, penalty=cfg.penalty.with_lambda(lam))

        if args.method == "scadws":
            fit = fit_scadws(data, cfg)
        elif args.method == "scad2s":
            fit = fit_scad2s(data, cfg)
        elif args.method == "heur":
            fit = fit_heur(data, cfg)
        elif args.method == "lasso":
            fit = fit_lasso(data, lam, seed=args.seed)
        else:
            fit = fit_sparselts(data, k_n, lam, seed=args.seed, n_starts=args.starts)
    except CliError:
        raise
    except TrimregError as exc:
        raise CliError(f"solver failed: {exc}", EXIT_SOLVER)

    beta_out = _destandardize_beta(fit.beta_hat, center, scale, args.intercept)
    doc = fit.to_dict()
    doc["beta_hat"] = beta_out.tolist()
    doc["method"] = args.method
    doc["lambda"] = lam
    doc["standardized"] = bool(args.standardize)
    doc["feature_names"] = names
    doc["beta_nonzero"] = {names[j]: beta_out[j] for j in fit.support}
    doc["viom_detail"] = [
        {
            "index": int(i),
            "gamma_hat": float(fit.outliers.gamma_hat[i]),
            "omega_hat": float(fit.omega_hat[i]) if fit.omega_hat is not None else None,
            "weight": float(fit.weights[i]),
        }
        for i in fit.outliers.viom
    ]
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_tune(args) -> int:
    data, names = load_csv(args.data, args.response, args.intercept)
    n = data.n
    if args.fix == "trim" and args.trim_grid and len(_grid_arg(args.trim_grid)) > 1:
        raise CliError("--fix trim expects a single --trim-grid value", EXIT_CONFIG)
    trim_grid = _grid_arg(args.trim_grid) if args.trim_grid else [0.0, 0.05, 0.10, 0.15, 0.20, 0.25]
    k_grid = sorted(set(_parse_trim(str(t), n) for t in trim_grid))
    if args.fix == "lambda" and args.lambda_grid and len(_grid_arg(args.lambda_grid)) > 1:
        raise CliError("--fix lambda expects a single --lambda-grid value", EXIT_CONFIG)

    family = L1 if args.method in ("lasso", "sparselts") else SCAD
    lines = ["k_n,lambda,k_p,bicr,sigma2_hat,n_viom"]
    best = None
    try:
        for k_n in k_grid:
            cfg = Step1Config(k_n=k_n, penalty=PenaltySpec(family, 0.1), seed=args.seed,
                              n_starts=args.starts)
            if args.lambda_grid:
                lams = _grid_arg(args.lambda_grid)
            else:
                lams = list(default_lambda_grid(data, k_n))
            for lam in lams:
                lam = float(lam)
                c = replace(cfg, penalty=cfg.penalty.with_lambda(lam))
                s1 = solve_step1(data, ProxyMatrices.identity(n), c)
                e = data.y - data.X @ s1.beta_hat
                rss = float(np.sum(e[s1.retained] ** 2))
                k_p = int(s1.support.size)
                crit = bicr(rss, n - k_n, n, k_p, k_n)
                dof = max(n - k_n - k_p, 1)
                sigma2 = rss / dof
                lines.append(f"{k_n},{lam!r},{k_p},{crit!r},{sigma2!r},0")
                if best is None or crit > best[0]:
                    best = (crit, k_n, float(lam), k_p)
    except TrimregError as exc:
        raise CliError(f"solver failed: {exc}", EXIT_SOLVER)
    lines.append("")
    text = "\n".join(lines)
    _emit(text, args.out)
    sys.stderr.write(f"best: k_n={best[1]} lambda={best[2]} bicr={best[0]!r} k_p={best[3]}\n")
    return 0


def cmd_simulate(args) -> int:
    try:
        sc = Scenario.from_file(args.scenario)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read scenario {args.scenario}: {exc}", EXIT_INPUT)
    except TypeError as exc:
        raise CliError(f"bad scenario keys: {exc}", EXIT_CONFIG)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    n_grid = _grid_arg(args.n_grid) if args.n_grid else None
    try:
        rows, manifest = run_scenario(sc, estimators, n_grid=n_grid, reps=args.reps,
                                      jobs=args.jobs, n_starts=args.starts)
    except ParameterError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    manifest["version"] = __version__
    manifest["backend"] = BACKEND

    cols = ["estimator", "n", "replicates", "failed", "mse_beta", "var_beta", "bias2_beta",
            "mse_s2", "var_s2", "bias2_s2",
            "outlier_fpr", "outlier_fnr", "selection_fpr", "selection_fnr", "msom_capture"]
    out_lines = [",".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row.get(c)
            cells.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
        out_lines.append(",".join(cells))
    out_lines.append("")
    csv_text = "\n".join(out_lines)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        _atomic_write(os.path.join(args.out_dir, "metrics.csv"), csv_text)
        _atomic_write(os.path.join(args.out_dir, "manifest.json"),
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_weights(args) -> int:
    data, names = load_csv(args.data, args.response, args.intercept)
    n = data.n
    viom = sorted(set(int(i) for i in _grid_arg(args.viom))) if args.viom else []
    msom = sorted(set(int(i) for i in _grid_arg(args.msom))) if args.msom else []
    for i in viom + msom:
        if not (0 <= i < n):
            raise CliError(f"outlier index {i} out of range", EXIT_CONFIG)
    if set(viom) & set(msom):
        raise CliError("viom and msom index sets must be disjoint", EXIT_CONFIG)
    s_beta = np.arange(data.p)
    try:
        Xbar = build_augmented_design(data, s_beta, np.asarray(msom, dtype=int))
        weights = np.ones(n)
        weights[msom] = 0.0
        records = []
        if args.plugin:
            fit0 = refit_with_weights(data, s_beta, np.asarray(msom, dtype=int), weights)
            c1 = args.c1 if args.c1 is not None else 1.0 / n
            for i in viom:
                e_i = data.y[i] - data.X[i] @ fit0.beta_hat
                w_i = plugin_weight(e_i, fit0.sigma2_hat, c1)
                weights[i] = w_i
                records.append({"index": i, "omega_hat": None, "weight": w_i})
        else:
            for i in viom:
                om, w_i = estimate_single_weight(Xbar, data.y, i)
                weights[i] = w_i
                records.append({"index": i, "omega_hat": om, "weight": w_i})
        refit = refit_with_weights(data, s_beta, np.asarray(msom, dtype=int), weights)
    except TrimregError as exc:
        raise CliError(f"solver failed: {exc}", EXIT_SOLVER)
    doc = {
        "weights": weights.tolist(),
        "viom": records,
        "msom": msom,
        "beta_hat": refit.beta_hat.tolist(),
        "sigma2_hat": refit.sigma2_hat,
        "plugin": bool(args.plugin),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trimreg",
                                 description="Sparse robust regression with outlier trimming and down-weighting")
    ap.add_argument("--version", action="version", version=f"trimreg {__version__}")
    ap.add_argument("--manifest", action="store_true", help="print build/config provenance and exit")
    sub = ap.add_subparsers(dest="command")

    def add_data_args(p):
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--response", required=True, help="name of the response column")
        p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (stdout if omitted)")

    p = sub.add_parser("fit", help="fit a model to a CSV dataset")
    add_data_args(p)
    p.add_argument("--method", default="scadws", choices=METHODS)
    p.add_argument("--trim", default="0", help="trimming level: fraction in [0,1) or absolute count")
    p.add_argument("--lambda", dest="lam", default="auto", help="shrinkage level or 'auto'")
    p.add_argument("--starts", type=int, default=500, help="elemental starts for the trimmed search")
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True,
                   help="robustly center/scale the predictors (coefficients reported on the original scale)")

    p = sub.add_parser("tune", help="robust criterion grid over trimming and shrinkage")
    add_data_args(p)
    p.add_argument("--method", default="sparselts", choices=METHODS)
    p.add_argument("--trim-grid", help="comma-separated trimming levels (fractions or counts)")
    p.add_argument("--lambda-grid", help="comma-separated shrinkage levels")
    p.add_argument("--fix", choices=("trim", "lambda"), help="hold one parameter fixed")
    p.add_argument("--starts", type=int, default=200)

    p = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    p.add_argument("--scenario", required=True, help="JSON scenario file")
    p.add_argument("--estimators", default="scadws,ols", help="comma-separated estimator names")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--starts", type=int, default=200)
    p.add_argument("--n-grid", help="comma-separated sample sizes")
    p.add_argument("--out-dir", help="directory for metrics.csv and manifest.json")

    p = sub.add_parser("weights", help="estimate per-unit weights for declared outlier sets")
    add_data_args(p)
    p.add_argument("--viom", help="comma-separated unit indices to down-weight")
    p.add_argument("--msom", help="comma-separated unit indices to exclude")
    p.add_argument("--plugin", action="store_true", help="use the closed-form plug-in weights")
    p.add_argument("--c1", type=float, default=None, help="plug-in normalizing constant (default 1/n)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.manifest:
        print(json.dumps({"version": __version__, "backend": BACKEND,
                          "numpy": np.__version__}, indent=2))
        return 0
    handlers = {"fit": cmd_fit, "tune": cmd_tune, "simulate": cmd_simulate, "weights": cmd_weights}
    if args.command not in handlers:
        ap.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        return handlers[args.command](args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
