"""Tuning-parameter selection: penalty grids, cross-validation, universal threshold."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import median_abs_deviation

from .errors import (ConstantResponse, DegenerateScale, DimensionMismatch, InvalidConfig,
                     TooFewObservations)
from .interp import InterpolationMatrix
from .penalty import PenaltySpec, make_penalty
from .solver import FitConfig, LogisticLoss, PyramidDesign, UnivariateProblem, auto_K
from .wavelet import DEFAULT_WAVELET, dwt

DEFAULT_GRID_SIZE = 50
DEFAULT_FLOOR_RATIO = 1e-4


@dataclass(frozen=True, eq=False)
class LambdaGrid:
    """Strictly decreasing, log-linearly spaced penalty levels."""

    values: np.ndarray
    lambda_max: float
    floor_ratio: float

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def lambda_grid(lambda_max: float, count: int = DEFAULT_GRID_SIZE,
                floor_ratio: float = DEFAULT_FLOOR_RATIO) -> LambdaGrid:
    """``count`` values from ``lambda_max`` down to ``floor_ratio * lambda_max``."""
    if not lambda_max > 0 or not np.isfinite(lambda_max):
        raise InvalidConfig("lambda_max must be positive and finite")
    if count < 2:
        raise InvalidConfig("grid needs at least two values")
    if not 0 < floor_ratio < 1:
        raise InvalidConfig("floor_ratio must lie in (0, 1)")
    values = np.geomspace(lambda_max, floor_ratio * lambda_max, count)
    values[0] = lambda_max
    values[-1] = floor_ratio * lambda_max
    values.setflags(write=False)
    return LambdaGrid(values, float(lambda_max), float(floor_ratio))


def _unpenalized_residual(y, design: PyramidDesign, spec: PenaltySpec) -> np.ndarray:
    free = np.flatnonzero(spec.weights == 0)
    if free.size == 0:
        return y
    basis = np.zeros((free.size, spec.K))
    basis[np.arange(free.size), free] = 1.0
    A = np.stack([design.forward(b) for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return y - A @ coef


def lambda_max_univariate(y, R: InterpolationMatrix, wavelet=DEFAULT_WAVELET,
                          spec: PenaltySpec | str = "l1", j0: int = 0,
                          loss: str = "squared") -> float:
    """Smallest penalty level at which every penalized coefficient is zero.

    The unpenalized coefficients (weight 0) are first fitted without penalty;
    the result is ``max_i |g_i| / w_i`` over penalized ``i``, with ``g`` the
    gradient of the loss at that fit. For squared loss and the plain penalty
    with ``j0 = 0`` this is ``max |(W R^T (y - ybar))_i|`` over mother indices.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != R.n:
        raise DimensionMismatch(f"response must have length n={R.n}")
    if y.size == 0 or np.ptp(y) == 0:
        raise ConstantResponse("response is constant")
    spec = make_penalty(spec, R.K, j0 if isinstance(spec, str) else spec.j0)
    design = PyramidDesign(R, wavelet, spec.j0)
    if loss == "squared":
        grad = design.adjoint(-_unpenalized_residual(y, design, spec))
    elif loss == "logistic":
        # A huge penalty leaves only the unpenalized coefficients free.
        problem = UnivariateProblem(y, R.x, R.K, spec.j0, wavelet, spec, "logistic",
                                    FitConfig(rel_tol=1e-12))
        fit = problem.solve(1e12)
        grad = design.adjoint(LogisticLoss(y).derivative(fit.fitted))
    else:
        raise InvalidConfig(f"unknown loss {loss!r}")
    pen = spec.weights > 0
    lam = float(np.max(np.abs(grad[pen]) / spec.weights[pen]))
    if not lam > 0:
        raise ConstantResponse("response is fully explained by the unpenalized coefficients")
    return lam


@dataclass(frozen=True, eq=False)
class CvResult:
    """Cross-validation summary over a penalty grid."""

    lambdas: np.ndarray
    mean_error: np.ndarray
    se_error: np.ndarray
    fold_errors: np.ndarray = field(repr=False)
    fold_ids: np.ndarray = field(repr=False)
    best_index: int

    @property
    def best_lambda(self) -> float:
        return float(self.lambdas[self.best_index])


def assign_folds(n: int, folds: int = 5, seed=0) -> np.ndarray:
    """Seeded fold labels ``0 .. folds-1``; fold sizes differ by at most one."""
    if folds < 2 or n < folds:
        raise TooFewObservations(f"need n >= folds >= 2, got n={n}, folds={folds}")
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=np.intp)
    ids[perm] = np.arange(n) % folds
    return ids


def heldout_error(y, pred, loss: str = "squared") -> float:
    """Mean squared error, or mean negative log-likelihood for logistic scores."""
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if loss == "squared":
        return float(np.mean((y - pred) ** 2))
    if loss == "logistic":
        return float(np.mean(np.logaddexp(0.0, -y * pred)))
    raise InvalidConfig(f"unknown loss {loss!r}")


def univariate_path_fitter(K: int, j0: int = 0, wavelet=DEFAULT_WAVELET, penalty="l1",
                           loss: str = "squared", config: FitConfig | None = None,
                           backend: str = "pyramid") -> Callable:
    """Fitter closure for :func:`cross_validate` using warm-started univariate paths."""
    def fitter(x, y, lambdas):
        problem = UnivariateProblem(y, x, K, j0, wavelet, penalty, loss, config,
                                    backend=backend)
        return problem.path(lambdas)
    return fitter


def cross_validate(x, y, lambdas: Sequence[float], fitter: Callable | None = None,
                   folds: int = 5, seed=0, loss: str = "squared",
                   fold_ids=None) -> CvResult:
    """K-fold cross-validation over ``lambdas``.

    Parameters
    ----------
    x : array_like, shape (n,) or (n, p)
        Covariates scaled to ``[0, 1]``.
    y : array_like, shape (n,)
    lambdas : sequence of float
        Penalty levels, fitted in the given order with warm starts.
    fitter : callable, optional
        ``fitter(x_train, y_train, lambdas)`` returning one model per level,
        each with a ``predict`` method. Defaults to the univariate fitter at
        the full-data mesh size.
    folds : int
    seed : int or SeedSequence
        Seeds the fold assignment.
    loss : {"squared", "logistic"}
        Selects the held-out error.
    fold_ids : array_like, optional
        Explicit fold labels ``0 .. folds-1``; overrides ``folds`` and ``seed``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if x.shape[0] != n:
        raise DimensionMismatch(f"x has {x.shape[0]} rows but y has {n} entries")
    lambdas = np.asarray(lambdas, dtype=float)
    if fold_ids is None:
        fold_ids = assign_folds(n, folds, seed)
    else:
        fold_ids = np.asarray(fold_ids, dtype=np.intp)
        if fold_ids.shape != (n,):
            raise DimensionMismatch("fold_ids must have one label per observation")
        folds = int(fold_ids.max()) + 1
        if folds < 2:
            raise TooFewObservations("need at least two folds")
    if fitter is None:
        if x.ndim != 1:
            raise InvalidConfig("a fitter is required for multivariate covariates")
        fitter = univariate_path_fitter(auto_K(n), loss=loss)
    errors = np.empty((folds, lambdas.size))
    for k in range(folds):
        test = fold_ids == k
        models = fitter(x[~test], y[~test], lambdas)
        for i, model in enumerate(models):
            errors[k, i] = heldout_error(y[test], model.predict(x[test]), loss)
    mean = errors.mean(axis=0)
    se = errors.std(axis=0, ddof=1) / np.sqrt(folds)
    return CvResult(lambdas=lambdas, mean_error=mean, se_error=se, fold_errors=errors,
                    fold_ids=fold_ids, best_index=int(np.argmin(mean)))


def mesh_average(y, R: InterpolationMatrix) -> np.ndarray:
    """Response averaged into the nearest mesh cell, empty cells filled linearly."""
    y = np.asarray(y, dtype=float).ravel()
    K = R.K
    cell = np.clip(np.rint(K * R.x), 1, K).astype(np.intp) - 1
    counts = np.bincount(cell, minlength=K)
    sums = np.bincount(cell, y, minlength=K)
    full = counts > 0
    idx = np.arange(K)
    return np.interp(idx, idx[full], sums[full] / counts[full])


def estimate_sigma(y, R: InterpolationMatrix, wavelet=DEFAULT_WAVELET) -> float:
    """Noise level from the MAD of the finest-level wavelet coefficients."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != R.n:
        raise DimensionMismatch(f"response must have length n={R.n}")
    if R.K < 4:
        raise InvalidConfig("universal threshold needs K >= 4")
    coeffs = dwt(mesh_average(y, R), wavelet)
    sigma = float(median_abs_deviation(coeffs[R.K // 2:], scale="normal"))
    if not sigma > 0:
        raise DegenerateScale("median absolute deviation of the finest level is zero")
    return sigma


def universal_threshold(y, R: InterpolationMatrix, wavelet=DEFAULT_WAVELET) -> float:
    """``sigma_hat * sqrt(2 log K)``."""
    return estimate_sigma(y, R, wavelet) * float(np.sqrt(2.0 * np.log(R.K)))
