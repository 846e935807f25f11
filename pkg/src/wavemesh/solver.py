"""Univariate fitting by proximal gradient descent.

The estimator minimizes ``loss(R W^T d) + lam * sum_i w_i |d_i|`` over wavelet
coefficients ``d``, where ``W`` is the DWT matrix and ``R`` the mesh-to-data
interpolation operator. For squared loss each iteration is::

    u     = W^T d                      (inverse DWT)
    r     = u - t * R^T (R u - y)      (gradient step in value space)
    d_new = prox_{t lam}(W r)          (DWT, then weighted soft threshold)

which is a plain wavelet shrinkage problem on the regular mesh. Nesterov
momentum (FISTA) is applied on top, with a restart whenever the objective
would increase, so the recorded objective trace is always non-increasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, InvalidConfig, InvalidLabels
from .interp import InterpolationMatrix, max_eigenvalue_rtr
from .penalty import PenaltySpec, make_penalty, soft_threshold
from .wavelet import DEFAULT_WAVELET, build_w_matrix, dwt, get_wavelet, idwt

LOSSES = ("squared", "logistic")
BACKENDS = ("pyramid", "dense")


@dataclass(frozen=True)
class FitConfig:
    """Iteration controls for the proximal gradient solver.

    ``step_rule="auto"`` picks a fixed ``1/L_max`` step for squared loss and
    backtracking line search for logistic loss.

    Convergence is declared once ``|F_l - F_{l-1}| / max(1, |F_{l-1}|) < rel_tol``.
    Near the optimum the objective is flat to second order, so when fitted
    values are needed to high accuracy set ``value_tol``: the solver then also
    requires ``max|u_l - u_{l-1}| <= value_tol * max(1, max|u_l|)`` for the
    fitted values ``u``.

    ``kkt_tol`` additionally certifies the returned point: convergence also
    needs the largest violation of the lasso optimality conditions (see
    :func:`kkt_violation`) to be at most ``kkt_tol``. The objective test alone
    is loose when the loss is large, since ``0.5 ||.||^2`` grows with ``n``.
    ``None`` skips the check.
    """

    max_iter: int = 10_000
    rel_tol: float = 1e-8
    acceleration: str = "fista"
    step_rule: str = "auto"
    beta: float = 0.5
    init_step: float = 1.0
    restart_on_increase: bool = True
    value_tol: float | None = None
    kkt_tol: float | None = 1e-7

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidConfig("max_iter must be >= 1")
        if not 0 < self.rel_tol < 1:
            raise InvalidConfig("rel_tol must lie in (0, 1)")
        if self.acceleration not in ("ista", "fista"):
            raise InvalidConfig(f"acceleration must be 'ista' or 'fista', got {self.acceleration!r}")
        if self.step_rule not in ("auto", "fixed", "backtracking"):
            raise InvalidConfig(f"unknown step rule {self.step_rule!r}")
        if not 0 < self.beta < 1:
            raise InvalidConfig("beta must lie in (0, 1)")
        if not self.init_step > 0:
            raise InvalidConfig("init_step must be positive")
        if self.value_tol is not None and not self.value_tol > 0:
            raise InvalidConfig("value_tol must be positive")
        if self.kkt_tol is not None and not self.kkt_tol > 0:
            raise InvalidConfig("kkt_tol must be positive")


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Result of a univariate fit. Immutable; safe to share across threads."""

    coeffs: np.ndarray
    wavelet: str
    K: int
    j0: int
    lam: float
    penalty: PenaltySpec
    loss: str
    x_scale: tuple[float, float]
    objective_trace: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    fitted: np.ndarray | None = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])

    @property
    def mesh_values(self) -> np.ndarray:
        """Fitted function on the mesh ``1/K, ..., K/K``."""
        return idwt(self.coeffs, self.wavelet, self.j0)

    def predict(self, x_new) -> np.ndarray:
        return predict(self, x_new)

    def decision_function(self, x_new) -> np.ndarray:
        return predict(self, x_new)

    def predict_proba(self, x_new) -> np.ndarray:
        """``P(y = +1)`` for logistic models."""
        if self.loss != "logistic":
            raise ValueError("predict_proba is only defined for logistic models")
        return expit(predict(self, x_new))


def auto_K(n: int) -> int:
    """Full mesh size ``2**ceil(log2 n)``."""
    if n < 2:
        return 2
    return 1 << (int(n) - 1).bit_length()


def rescale(x, x_scale: tuple[float, float]) -> np.ndarray:
    """Map raw covariate values to ``[0, 1]`` by ``x_scale = (min, max)`` and clamp."""
    lo, hi = x_scale
    x = np.asarray(x, dtype=float)
    if hi > lo:
        out = (x - lo) / (hi - lo)
    else:
        out = np.zeros_like(x)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Design operators: d -> R W^T d and its adjoint
# ---------------------------------------------------------------------------

class PyramidDesign:
    """``R W^T`` applied through the fast DWT and the sparse interpolation rows."""

    def __init__(self, R: InterpolationMatrix, wavelet=DEFAULT_WAVELET, j0: int = 0):
        self.R = R
        self.wavelet = get_wavelet(wavelet)
        self.j0 = j0

    def forward(self, d):
        return self.R.apply(idwt(d, self.wavelet, self.j0))

    def adjoint(self, r):
        return dwt(self.R.apply_transpose(r), self.wavelet, self.j0)


@lru_cache(maxsize=32)
def _w_matrix(K: int, wavelet: str, j0: int) -> np.ndarray:
    W = build_w_matrix(K, wavelet, j0)
    W.setflags(write=False)
    return W


class DenseDesign:
    """``R W^T`` materialized as an ``n x K`` matrix; fast for small ``K``."""

    def __init__(self, R: InterpolationMatrix, wavelet=DEFAULT_WAVELET, j0: int = 0):
        self.R = R
        W = _w_matrix(R.K, get_wavelet(wavelet).name, j0)
        # R.apply acts on the last axis, so R.apply(W) = W R^T = (R W^T)^T.
        self.A = np.ascontiguousarray(R.apply(W).T)
        self.At = np.ascontiguousarray(self.A.T)

    def forward(self, d):
        return self.A @ d

    def adjoint(self, r):
        return self.At @ r


def make_design(R: InterpolationMatrix, wavelet=DEFAULT_WAVELET, j0: int = 0,
                backend: str = "pyramid"):
    if backend == "pyramid":
        return PyramidDesign(R, wavelet, j0)
    if backend == "dense":
        return DenseDesign(R, wavelet, j0)
    raise InvalidConfig(f"unknown backend {backend!r}; expected one of {BACKENDS}")


# ---------------------------------------------------------------------------
# Smooth losses as functions of the fitted values u = R W^T d
# ---------------------------------------------------------------------------

class SquaredLoss:
    """``0.5 * ||y - u||^2``."""

    name = "squared"

    def __init__(self, y):
        self.y = y

    def value(self, u) -> float:
        r = self.y - u
        return 0.5 * float(r @ r)

    def derivative(self, u):
        return u - self.y


class LogisticLoss:
    """``(1 / 2n) * sum_i log(1 + exp(-y_i u_i))`` for labels in ``{-1, +1}``."""

    name = "logistic"

    def __init__(self, y):
        self.y = y
        self.scale = 1.0 / (2.0 * y.size)

    def value(self, u) -> float:
        return self.scale * float(np.logaddexp(0.0, -self.y * u).sum())

    def derivative(self, u):
        return -self.scale * self.y * expit(-self.y * u)


def _kkt_max(g, d, bound) -> float:
    viol = np.where(d == 0, np.maximum(np.abs(g) - bound, 0.0), np.abs(g + np.sign(d) * bound))
    return float(viol.max())


def _proximal_gradient(design, smooth, weights, lam, config: FitConfig, d0,
                       step: float | None):
    """Shared ISTA/FISTA loop.

    ``step`` is the fixed step ``1/L``; ``None`` selects backtracking.
    Returns ``(d, u, trace, iterations, converged)``.
    """
    accelerate = config.acceleration == "fista"
    d = np.array(d0, dtype=float)
    u = design.forward(d)
    F = smooth.value(u) + lam * float(np.abs(d) @ weights)
    trace = [F]
    z, uz = d, u
    theta = 1.0
    t = step if step is not None else config.init_step
    converged = False
    it = 0

    tau = t * lam * weights

    def prox_step(z, uz, t):
        nonlocal tau
        grad = design.adjoint(smooth.derivative(uz))
        if step is not None:
            d_new = soft_threshold(z - t * grad, tau)
            u_new = design.forward(d_new)
            return d_new, u_new, smooth.value(u_new), t
        fz = smooth.value(uz)
        for _ in range(100):
            tau = t * lam * weights
            d_new = soft_threshold(z - t * grad, tau)
            u_new = design.forward(d_new)
            f_new = smooth.value(u_new)
            diff = d_new - z
            bound = fz + float(grad @ diff) + float(diff @ diff) / (2.0 * t)
            if f_new <= bound + 1e-15 * abs(fz):
                break
            t *= config.beta
        return d_new, u_new, f_new, t

    for it in range(1, config.max_iter + 1):
        d_new, u_new, f_new, t = prox_step(z, uz, t)
        F_new = f_new + lam * float(np.abs(d_new) @ weights)
        if accelerate and config.restart_on_increase and F_new > F and z is not d:
            theta = 1.0
            d_new, u_new, f_new, t = prox_step(d, u, t)
            F_new = f_new + lam * float(np.abs(d_new) @ weights)
        trace.append(F_new)
        if accelerate:
            theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            mom = (theta - 1.0) / theta_next
            theta = theta_next
            if mom > 0:
                z = d_new + mom * (d_new - d)
                uz = u_new + mom * (u_new - u)
            else:
                z, uz = d_new, u_new
        else:
            z, uz = d_new, u_new
        done = abs(F_new - F) / max(1.0, abs(F)) < config.rel_tol
        if done and config.value_tol is not None:
            scale = max(1.0, float(np.abs(u_new).max()))
            done = float(np.abs(u_new - u).max()) <= config.value_tol * scale
        if done and config.kkt_tol is not None:
            g = design.adjoint(smooth.derivative(u_new))
            done = _kkt_max(g, d_new, lam * weights) <= config.kkt_tol
        d, u, F = d_new, u_new, F_new
        if done:
            converged = True
            break
    return d, u, np.asarray(trace), it, converged


# ---------------------------------------------------------------------------
# Problem setup shared by single fits and lambda paths
# ---------------------------------------------------------------------------

class UnivariateProblem:
    """Precomputed pieces of one univariate fit: operator, step size, weights.

    Building this once and calling :meth:`solve` for many ``lam`` values is how
    warm-started paths avoid recomputing ``L_max`` and dense designs.
    """

    def __init__(self, y, x, K: int | None = None, j0: int = 0, wavelet=DEFAULT_WAVELET,
                 penalty="l1", loss: str = "squared", config: FitConfig | None = None,
                 x_scale=(0.0, 1.0), backend: str = "pyramid"):
        y = np.asarray(y, dtype=float).ravel()
        x = np.asarray(x, dtype=float).ravel()
        if y.shape != x.shape:
            raise DimensionMismatch(f"y has {y.size} entries but x has {x.size}")
        if y.size < 2:
            raise DimensionMismatch("need at least two observations")
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite values")
        if loss not in LOSSES:
            raise InvalidConfig(f"unknown loss {loss!r}")
        if loss == "logistic" and not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidLabels("logistic labels must be -1 or +1")
        self.y = y
        self.K = auto_K(y.size) if K is None else int(K)
        self.j0 = int(j0)
        self.wavelet = get_wavelet(wavelet).name
        self.R = InterpolationMatrix(x, self.K)
        self.spec = make_penalty(penalty, self.K, self.j0)
        self.loss = loss
        self.config = config or FitConfig()
        self.x_scale = (float(x_scale[0]), float(x_scale[1]))
        self.design = make_design(self.R, self.wavelet, self.j0, backend)
        self.smooth = SquaredLoss(y) if loss == "squared" else LogisticLoss(y)
        rule = self.config.step_rule
        if rule == "auto":
            rule = "fixed" if loss == "squared" else "backtracking"
        if rule == "fixed":
            L = max_eigenvalue_rtr(self.R)
            if loss == "logistic":
                # Hessian of the scaled logistic loss is bounded by R^T R / (8n).
                L = L / (8.0 * y.size)
            self.step = 1.0 / L
        else:
            self.step = None

    def solve(self, lam: float, init=None) -> FittedModel:
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        d0 = np.zeros(self.K) if init is None else np.asarray(init, dtype=float)
        if d0.shape != (self.K,):
            raise DimensionMismatch(f"initial coefficients must have length {self.K}")
        d, u, trace, iters, converged = _proximal_gradient(
            self.design, self.smooth, self.spec.weights, float(lam), self.config, d0, self.step)
        d.setflags(write=False)
        u.setflags(write=False)
        return FittedModel(coeffs=d, wavelet=self.wavelet, K=self.K, j0=self.j0,
                           lam=float(lam), penalty=self.spec, loss=self.loss,
                           x_scale=self.x_scale, objective_trace=trace,
                           iterations=iters, converged=converged, fitted=u)

    def path(self, lambdas, init=None) -> list[FittedModel]:
        """Fits along ``lambdas`` (in the given order), each warm-started from the previous."""
        models = []
        warm = init
        for lam in lambdas:
            m = self.solve(lam, warm)
            models.append(m)
            warm = m.coeffs
        return models


def fit_univariate(y, x, lam: float, K: int | None = None, j0: int = 0,
                   wavelet=DEFAULT_WAVELET, penalty="l1", config: FitConfig | None = None,
                   x_scale=(0.0, 1.0), init=None, backend: str = "pyramid") -> FittedModel:
    """Fit the squared-loss estimator at one penalty level.

    Parameters
    ----------
    y : array_like, shape (n,)
    x : array_like, shape (n,)
        Covariate values in ``[0, 1]``.
    lam : float
        Penalty level, ``lam >= 0``.
    K : int, optional
        Mesh size (power of two). Defaults to ``2**ceil(log2 n)``.
    j0 : int
        Coarsest resolution level.
    wavelet : str
        ``"haar"`` or ``"daub2"`` ... ``"daub10"``.
    penalty : str or PenaltySpec
        ``"l1"``, ``"adaptive"`` or ``"besov:<s>"``.
    config : FitConfig, optional
    x_scale : (float, float)
        Raw-covariate ``(min, max)`` recorded for :func:`predict`.
    init : array_like, optional
        Warm start; defaults to zeros.
    backend : {"pyramid", "dense"}
        ``"dense"`` materializes ``R W^T``; only sensible for ``K <= 1024``.
    """
    problem = UnivariateProblem(y, x, K, j0, wavelet, penalty, "squared", config, x_scale, backend)
    return problem.solve(lam, init)


def fit_univariate_logistic(y, x, lam: float, K: int | None = None, j0: int = 0,
                            wavelet=DEFAULT_WAVELET, penalty="l1",
                            config: FitConfig | None = None, x_scale=(0.0, 1.0), init=None,
                            backend: str = "pyramid") -> FittedModel:
    """Penalized logistic fit for labels in ``{-1, +1}``; see :func:`fit_univariate`."""
    problem = UnivariateProblem(y, x, K, j0, wavelet, penalty, "logistic", config, x_scale, backend)
    return problem.solve(lam, init)


def fit_path(y, x, lambdas, K: int | None = None, j0: int = 0, wavelet=DEFAULT_WAVELET,
             penalty="l1", loss: str = "squared", config: FitConfig | None = None,
             x_scale=(0.0, 1.0), backend: str = "pyramid") -> list[FittedModel]:
    """Warm-started fits over a sequence of penalty levels."""
    problem = UnivariateProblem(y, x, K, j0, wavelet, penalty, loss, config, x_scale, backend)
    return problem.path(lambdas)


def predict(model: FittedModel, x_new) -> np.ndarray:
    """Evaluate a fitted model at raw covariate values.

    Values are rescaled with ``model.x_scale`` and clamped to ``[0, 1]`` before
    interpolation from the mesh.
    """
    x01 = rescale(np.asarray(x_new, dtype=float).ravel(), model.x_scale)
    R = InterpolationMatrix(x01, model.K)
    return R.apply(model.mesh_values)


# ---------------------------------------------------------------------------
# Objectives and diagnostics
# ---------------------------------------------------------------------------

def _setup(d, y, R: InterpolationMatrix, spec: PenaltySpec):
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != (R.K,) or spec.K != R.K:
        raise DimensionMismatch(f"coefficients must have length K={R.K}")
    if y.shape != (R.n,):
        raise DimensionMismatch(f"response must have length n={R.n}")
    return d, y


def objective_squared(d, y, R: InterpolationMatrix, spec: PenaltySpec, lam: float,
                      wavelet=DEFAULT_WAVELET) -> float:
    """``0.5 * ||y - R idwt(d)||^2 + lam * penalty(d)``."""
    d, y = _setup(d, y, R, spec)
    r = y - R.apply(idwt(d, wavelet, spec.j0))
    return 0.5 * float(r @ r) + lam * float(np.abs(d) @ spec.weights)


def objective_logistic(d, y, R: InterpolationMatrix, spec: PenaltySpec, lam: float,
                       wavelet=DEFAULT_WAVELET) -> float:
    d, y = _setup(d, y, R, spec)
    u = R.apply(idwt(d, wavelet, spec.j0))
    return LogisticLoss(y).value(u) + lam * float(np.abs(d) @ spec.weights)


def smooth_gradient(d, y, R: InterpolationMatrix, wavelet=DEFAULT_WAVELET, j0: int = 0,
                    loss: str = "squared") -> np.ndarray:
    """Gradient of the smooth part of the objective with respect to ``d``."""
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    design = PyramidDesign(R, wavelet, j0)
    smooth = SquaredLoss(y) if loss == "squared" else LogisticLoss(y)
    return design.adjoint(smooth.derivative(design.forward(d)))


def kkt_violation(model: FittedModel, y, x) -> float:
    """Largest violation of the lasso optimality conditions at ``model.coeffs``.

    ``x`` must be the ``[0, 1]``-scaled training covariate. For ``d_i = 0`` the
    gradient must satisfy ``|g_i| <= lam w_i``; otherwise ``g_i = -sign(d_i) lam w_i``.
    """
    R = InterpolationMatrix(x, model.K)
    g = smooth_gradient(model.coeffs, y, R, model.wavelet, model.j0, model.loss)
    return _kkt_max(g, model.coeffs, model.lam * model.penalty.weights)
