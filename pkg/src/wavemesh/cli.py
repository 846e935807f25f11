"""Command-line interface and the JSON model file format.

Subcommands::

    wavemesh fit      --data train.csv --response y --out model.json [...]
    wavemesh predict  --model model.json --data new.csv [--out pred.csv]
    wavemesh simulate --study {univariate,additive,k-effect,adaptive} --out-dir DIR [...]

Exit codes: 0 success, 2 malformed input or invalid flags, 3 dimension or
label errors, 4 non-convergence under ``--strict``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import simbench
from .additive import AdditiveModel, fit_additive, predict_additive
from .errors import (CsvFormatError, InvalidConfig, InvalidLabels, InvalidScenario,
                     ModelFormatError, NonDyadicLength, UnknownWavelet, WaveMeshError)
from .interp import InterpolationMatrix
from .penalty import make_penalty
from .select import (cross_validate, lambda_grid, lambda_max_univariate,
                     univariate_path_fitter)
from .solver import FitConfig, FittedModel, UnivariateProblem, auto_K, predict, rescale
from .wavelet import WAVELET_NAMES, get_wavelet, is_power_of_two

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4

_INPUT_ERRORS = (CsvFormatError, ModelFormatError, InvalidConfig, NonDyadicLength,
                 UnknownWavelet, InvalidScenario)


class UsageError(WaveMeshError):
    """Invalid combination of command-line flags."""


class ColumnMismatch(WaveMeshError):
    """Prediction columns differ from the model's covariates."""


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row; accepts LF and CRLF line endings."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from None
    except csv.Error as exc:
        raise CsvFormatError(f"{path}: {exc}") from None
    if not rows:
        raise CsvFormatError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise CsvFormatError(f"{path}: header names must be unique and nonempty")
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        try:
            data[i] = [float(c) for c in row]
        except ValueError:
            raise CsvFormatError(f"{path}: row {i + 2} has a non-numeric field") from None
    if not np.all(np.isfinite(data)):
        raise CsvFormatError(f"{path}: NaN or infinite values are not allowed")
    return header, data


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(float(v)) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


# ---------------------------------------------------------------------------
# Model file
# ---------------------------------------------------------------------------

def model_to_dict(model, covariates: list[str], response: str = "y") -> dict:
    """JSON-ready representation; floats survive a round trip exactly."""
    if isinstance(model, FittedModel):
        kind, blocks, intercept = "univariate", [model.coeffs], 0.0
        lam1, lam2, scales = model.lam, 0.0, [model.x_scale]
        fit = {"iterations": model.iterations, "converged": model.converged,
               "objective": model.objective}
    elif isinstance(model, AdditiveModel):
        kind, blocks, intercept = "additive", list(model.blocks), model.intercept
        lam1, lam2, scales = model.lambda1, model.lambda2, list(model.x_scales)
        fit = {"sweeps": model.sweeps, "converged": model.converged,
               "objective": model.objective}
    else:
        raise ModelFormatError(f"cannot serialize {type(model).__name__}")
    if len(covariates) != len(blocks):
        raise ModelFormatError("one covariate name per coefficient block is required")
    spec = model.penalty
    return {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "loss": model.loss,
        "wavelet": model.wavelet,
        "K": model.K,
        "j0": model.j0,
        "penalty": {"kind": spec.kind, "s": spec.s},
        "lambda1": lam1,
        "lambda2": lam2,
        "response": response,
        "covariates": list(covariates),
        "x_scales": [[float(lo), float(hi)] for lo, hi in scales],
        "intercept": float(intercept),
        "coefficients": [[float(v) for v in b] for b in blocks],
        "fit": fit,
    }


def model_from_dict(doc: dict):
    """Rebuild a model from :func:`model_to_dict` output."""
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format_version {version!r}")
        K, j0 = int(doc["K"]), int(doc["j0"])
        wavelet = get_wavelet(doc["wavelet"]).name
        spec = make_penalty(doc["penalty"]["kind"], K, j0, doc["penalty"].get("s"))
        coeffs = np.array(doc["coefficients"], dtype=float)
        scales = tuple((float(lo), float(hi)) for lo, hi in doc["x_scales"])
        fit = doc.get("fit", {})
        if coeffs.ndim != 2 or coeffs.shape[1] != K or len(scales) != coeffs.shape[0]:
            raise ModelFormatError("coefficient blocks do not match K or the covariate list")
        if len(doc["covariates"]) != coeffs.shape[0]:
            raise ModelFormatError("covariate names do not match the coefficient blocks")
        trace = np.array([float(fit.get("objective", math.nan))])
        coeffs.setflags(write=False)
        if doc["kind"] == "univariate":
            return FittedModel(coeffs=coeffs[0], wavelet=wavelet, K=K, j0=j0,
                               lam=float(doc["lambda1"]), penalty=spec, loss=doc["loss"],
                               x_scale=scales[0], objective_trace=trace,
                               iterations=int(fit.get("iterations", 0)),
                               converged=bool(fit.get("converged", False)))
        if doc["kind"] == "additive":
            return AdditiveModel(blocks=coeffs, intercept=float(doc["intercept"]),
                                 lambda1=float(doc["lambda1"]), lambda2=float(doc["lambda2"]),
                                 penalty=spec, wavelet=wavelet, K=K, j0=j0, x_scales=scales,
                                 objective_trace=trace, update_trace=trace,
                                 sweeps=int(fit.get("sweeps", 0)),
                                 converged=bool(fit.get("converged", False)))
        raise ModelFormatError(f"unknown model kind {doc['kind']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, WaveMeshError):
            raise
        raise ModelFormatError(f"malformed model file: {exc}") from None


def save_model(path, model, covariates: list[str], response: str = "y") -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, covariates, response), fh, indent=1)
        fh.write("\n")


def load_model(path) -> tuple[object, dict]:
    """Return ``(model, document)``; the document carries column names."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path} does not hold a model object")
    return model_from_dict(doc), doc


def model_predict(model, X: np.ndarray) -> np.ndarray:
    """Scores at raw covariates ``X`` of shape ``(m, p)``."""
    if isinstance(model, FittedModel):
        return predict(model, X[:, 0])
    return predict_additive(model, X)


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _parse_k(text: str, n: int) -> int:
    full = auto_K(n)
    if text == "auto":
        return full
    try:
        K = int(text)
    except ValueError:
        raise UsageError(f"--k must be 'auto' or a power of two, got {text!r}") from None
    if not is_power_of_two(K) or K < 2:
        raise UsageError(f"--k must be a power of two, got {K}")
    if K > full:
        raise UsageError(f"--k={K} exceeds 2^ceil(log2 n) = {full}")
    return K


def _scale_columns(X: np.ndarray) -> tuple[np.ndarray, list[tuple[float, float]]]:
    lo, hi = X.min(axis=0), X.max(axis=0)
    scales = [(float(a), float(b)) for a, b in zip(lo, hi)]
    X01 = np.column_stack([rescale(X[:, j], scales[j]) for j in range(X.shape[1])])
    return X01, scales


def _labels(y: np.ndarray) -> np.ndarray:
    vals = set(np.unique(y).tolist())
    if vals <= {-1.0, 1.0}:
        return y
    if vals <= {0.0, 1.0}:
        return np.where(y > 0, 1.0, -1.0)
    raise InvalidLabels("logistic labels must be -1/+1 or 0/1")


def cmd_fit(args) -> int:
    header, data = read_csv(args.data)
    if args.response not in header:
        raise UsageError(f"response column {args.response!r} not found in {args.data}")
    r = header.index(args.response)
    covariates = [h for h in header if h != args.response]
    if not covariates:
        raise UsageError("no covariate columns")
    y = data[:, r]
    X = np.delete(data, r, axis=1)
    n, p = X.shape
    if n < 2:
        raise UsageError("need at least two data rows")
    if args.lambda1 is None and args.cv == 0:
        raise UsageError("give --lambda1 or --cv FOLDS")
    if args.lambda1 is not None and args.lambda1 < 0 or args.lambda2 < 0:
        raise UsageError("penalty levels must be nonnegative")
    if args.cv == 1 or args.cv < 0:
        raise UsageError("--cv must be 0 or at least 2")
    K = _parse_k(args.k, n)
    config = FitConfig(max_iter=args.max_iter, rel_tol=args.tol)
    X01, scales = _scale_columns(X)
    if args.loss == "logistic":
        if p != 1 or args.lambda2 > 0:
            raise UsageError("logistic fits take a single covariate and no --lambda2")
        y = _labels(y)
    univariate = p == 1 and args.lambda2 == 0
    spec = make_penalty(args.penalty, K, args.j0)

    cv_report = None
    lam1 = args.lambda1
    if args.cv:
        # Held-out errors are insensitive to the last digits of the objective.
        cv_config = replace(config, rel_tol=max(config.rel_tol, simbench.STUDY_CONFIG.rel_tol),
                            kkt_tol=None)
        if univariate:
            R = InterpolationMatrix(X01[:, 0], K)
            grid = lambda_grid(lambda_max_univariate(y, R, args.wavelet, spec, loss=args.loss))
            fitter = univariate_path_fitter(K, args.j0, args.wavelet, spec, args.loss, cv_config)
            cv = cross_validate(X01[:, 0], y, grid, fitter, args.cv, args.seed, args.loss)
        else:
            grid = lambda_grid(simbench.additive_lambda_max(y, X01, K, args.wavelet, args.j0, spec))

            def fitter(Xtr, ytr, lambdas):
                return simbench.additive_path(ytr, Xtr, lambdas, args.lambda2, K, cv_config,
                                              j0=args.j0, wavelet=args.wavelet, penalty=spec)
            cv = cross_validate(X01, y, grid, fitter, args.cv, args.seed, args.loss)
        lam1 = cv.best_lambda
        cv_report = {"folds": args.cv, "lambda": lam1,
                     "mean_error": float(cv.mean_error[cv.best_index]),
                     "se_error": float(cv.se_error[cv.best_index])}

    if univariate:
        problem = UnivariateProblem(y, X01[:, 0], K, args.j0, args.wavelet, spec, args.loss,
                                    config, scales[0])
        model = problem.solve(lam1)
        fitted = model.fitted
        converged, active = model.converged, ([covariates[0]] if np.any(model.coeffs != 0) else [])
        counts = {"iterations": model.iterations}
    else:
        model = fit_additive(y, X01, lam1, args.lambda2, K, args.j0, args.wavelet, spec,
                             config, scales)
        fitted = model.fitted
        converged = model.converged
        active = [covariates[j] for j in model.active_set]
        counts = {"sweeps": model.sweeps}

    save_model(args.out, model, covariates, args.response)
    report = {"model": str(args.out), "kind": "univariate" if univariate else "additive",
              "loss": args.loss, "n": n, "p": p, "K": K, "j0": args.j0,
              "wavelet": get_wavelet(args.wavelet).name, "penalty": spec.label,
              "lambda1": float(lam1), "lambda2": float(args.lambda2),
              "objective": model.objective, "converged": converged, **counts,
              "active_set": active}
    if args.loss == "squared":
        report["training_mse"] = float(np.mean((y - fitted) ** 2))
    else:
        report["training_accuracy"] = float(np.mean(np.where(fitted >= 0, 1.0, -1.0) == y))
    if cv_report:
        report["cv"] = cv_report
    for key, val in report.items():
        print(f"{key}: {val}")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump({**report, "fitted": [float(v) for v in fitted]}, fh, indent=1)
            fh.write("\n")
    if args.strict and not converged:
        print("error: solver did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def cmd_predict(args) -> int:
    model, doc = load_model(args.model)
    header, data = read_csv(args.data)
    covariates = doc["covariates"]
    response = doc.get("response")
    cols = [h for h in header if h != response]
    if cols != covariates:
        raise ColumnMismatch(f"covariate columns {cols} do not match the model's {covariates}")
    X = data[:, [header.index(c) for c in covariates]]
    for j, (lo, hi) in enumerate(doc["x_scales"]):
        outside = int(np.sum((X[:, j] < lo) | (X[:, j] > hi)))
        if outside:
            print(f"warning: {outside} value(s) of {covariates[j]!r} outside the training "
                  f"range [{lo!r}, {hi!r}] were clamped", file=sys.stderr)
    score = model_predict(model, X) if X.shape[0] else np.empty(0)
    if doc["loss"] == "logistic":
        prob = 1.0 / (1.0 + np.exp(-score))
        write_csv(args.out, ["prediction", "probability"], [score, prob])
    else:
        write_csv(args.out, ["prediction"], [score])
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_DEFAULT_N = {
    "univariate": "64,128,256,512",
    "k-effect": "64,128,256,512",
    "adaptive": "128,256,512",
    "additive": "64,100,256,500,512",
}


def _int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{flag} is empty")
    return vals


def cmd_simulate(args) -> int:
    n_list = _int_list(args.n or _DEFAULT_N[args.study], "--n")
    if args.replicates < 1:
        raise UsageError("--replicates must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    snr = args.snr if args.snr is not None else (10.0 if args.study == "additive" else 5.0)
    if not snr > 0:
        raise UsageError("--snr must be positive")
    if args.function == "all":
        functions = list(simbench.TEST_FUNCTIONS)
    else:
        functions = [simbench.function_name(f) for f in args.function.split(",")]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = args.threads

    if args.study == "additive":
        rows = []
        for n in n_list:
            sc = simbench.SimScenario("heavysine", n, args.law, snr, args.replicates, args.seed)
            res = simbench.run_additive_study(sc, args.p, args.folds, args.grid_size,
                                              workers=workers)
            rows.append({"n": n, "p": args.p, "mean_mse": f"{res.mean_mse:.4f}",
                         "se100": f"{100 * res.se_mse:.2f}",
                         "mse_se100": f"{res.mean_mse:.4f} ({100 * res.se_mse:.2f})"})
        simbench.to_csv(rows, out_dir / "additive.csv")
        print(simbench.to_text(rows), end="")
        return EXIT_OK

    if args.study == "univariate":
        rows = []
        for f in functions:
            for n in n_list:
                sc = simbench.SimScenario(f, n, args.law, snr, args.replicates, args.seed)
                res = simbench.run_mse_study(sc, [simbench.full_grid()], grid_size=args.grid_size,
                                             workers=workers)
                rows.append({"function": f, "n": n, "K": auto_K(n),
                             "mse_se100": f"{res.mean_mse[0]:.4f} ({100 * res.se_mse[0]:.2f})",
                             "mean_mse": repr(float(res.mean_mse[0])),
                             "se_mse": repr(float(res.se_mse[0]))})
        simbench.to_csv(rows, out_dir / "univariate.csv")
        print(simbench.to_text(rows), end="")
        return EXIT_OK

    K_list = _int_list(args.k_list, "--k-list")
    for K in K_list:
        if not is_power_of_two(K) or K < 2:
            raise UsageError(f"--k-list entries must be powers of two, got {K}")
    results = []
    for f in functions:
        if args.study == "adaptive":
            results += simbench.run_adaptive_study(f, n_list, snr, args.replicates, args.seed,
                                                   args.law, args.grid_size, workers=workers)
        else:
            results += simbench.run_k_study(f, n_list, K_list, snr, args.replicates, args.seed,
                                            args.law, args.grid_size, workers=workers)
    ratios = simbench.ratio_table(results)
    stem = args.study
    simbench.to_csv(ratios, out_dir / f"{stem}_ratios.csv")
    simbench.to_csv(simbench.detail_table(results), out_dir / f"{stem}_mse.csv")
    if args.timing:
        simbench.to_csv(simbench.detail_table(results, timing=True),
                        out_dir / f"{stem}_timing.csv")
    print(simbench.to_text(ratios), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavemesh",
                                     description="Wavelet regression on irregular designs.")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model to a CSV file")
    fit.add_argument("--data", required=True, help="training CSV with a header row")
    fit.add_argument("--response", default="y", help="response column name (default: y)")
    fit.add_argument("--out", required=True, help="model file to write")
    fit.add_argument("--report", help="also write a JSON report with fitted values")
    fit.add_argument("--k", default="auto", help="mesh size: 'auto' or a power of two")
    fit.add_argument("--j0", type=int, default=0, help="coarsest resolution level")
    fit.add_argument("--wavelet", default="daub4", type=str.lower,
                     choices=sorted(set(WAVELET_NAMES) | {"haar"}))
    fit.add_argument("--penalty", default="l1", help="l1, adaptive or besov:S")
    fit.add_argument("--lambda1", type=float, help="coefficient penalty level")
    fit.add_argument("--lambda2", type=float, default=0.0, help="block penalty level")
    fit.add_argument("--loss", choices=("squared", "logistic"), default="squared")
    fit.add_argument("--cv", type=int, default=0, help="select lambda1 by FOLDS-fold CV")
    fit.add_argument("--seed", type=int, default=0, help="seed for fold assignment")
    fit.add_argument("--max-iter", type=int, default=10_000)
    fit.add_argument("--tol", type=float, default=1e-8, help="relative objective tolerance")
    fit.add_argument("--strict", action="store_true", help="exit 4 if the solver did not converge")
    fit.add_argument("--threads", type=int, default=1, help="accepted for symmetry; fits are sequential")
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="predict from a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True, help="CSV with the model's covariate columns")
    pred.add_argument("--out", help="output CSV (default: standard output)")
    pred.set_defaults(func=cmd_predict)

    sim = sub.add_parser("simulate", help="run a simulation study")
    sim.add_argument("--study", required=True,
                     choices=("univariate", "additive", "k-effect", "adaptive"))
    sim.add_argument("--function", default="all",
                     help="comma-separated test functions or 'all'")
    sim.add_argument("--n", help="comma-separated sample sizes")
    sim.add_argument("--snr", type=float, help="signal-to-noise ratio (default 5; additive 10)")
    sim.add_argument("--replicates", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out-dir", required=True)
    sim.add_argument("--k-list", default="32,64", help="mesh sizes compared with the full mesh")
    sim.add_argument("--law", choices=simbench.COVARIATE_LAWS, default="uniform")
    sim.add_argument("--grid-size", type=int, default=50)
    sim.add_argument("--p", type=int, default=4, help="covariates in the additive study")
    sim.add_argument("--folds", type=int, default=5)
    sim.add_argument("--timing", action="store_true",
                     help="also write median wall times (not reproducible)")
    sim.add_argument("--threads", type=int, default=1, help="worker threads for replicates")
    sim.set_defaults(func=cmd_simulate)
    return parser


def exit_code(exc: Exception) -> int:
    if isinstance(exc, (UsageError, *_INPUT_ERRORS)):
        return EXIT_INPUT
    return EXIT_DATA


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WaveMeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)


def run() -> None:
    sys.exit(main())
