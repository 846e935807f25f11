"""Synthetic benchmarks: test functions, noise calibration and replicate studies.

Test functions on ``[0, 1]``:

==================== =========================================================
polynomial           ``16 x^3 - 24 x^2 + 9 x`` (extrema at 1/4 and 3/4)
sine                 ``sin(2 pi x)``
piecewise_polynomial ``4 x^2 (3 - 4 x)`` for ``x < 1/2``,
                     ``(4/3) x (4 x^2 - 10 x + 7) - 3/2`` otherwise
heavysine            ``4 sin(4 pi x) - sgn(x - 0.3) - sgn(0.72 - x)``
bumps                ``sum_k h_k (1 + |x - t_k| / w_k)^-4`` (Donoho-Johnstone)
doppler              ``sqrt(x (1 - x)) sin(2.1 pi / (x + 0.05))``
==================== =========================================================

Noise is Gaussian with ``sigma^2 = var(f0(x)) / snr`` computed on the drawn
sample, so the realized signal-to-noise ratio is exact. Studies tune each
method by the smallest true-function MSE over a 50-point penalty grid and
report per-replicate MSE ratios against the full-mesh fit.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .additive import fit_additive
from .errors import InvalidScenario
from .interp import InterpolationMatrix
from .select import (DEFAULT_FLOOR_RATIO, DEFAULT_GRID_SIZE, assign_folds, heldout_error,
                     lambda_grid, lambda_max_univariate)
from .solver import FitConfig, UnivariateProblem, auto_K
from .wavelet import DEFAULT_WAVELET, dyadic_exponent

# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

_BUMP_LOC = np.array([0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81])
_BUMP_HEIGHT = np.array([4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2])
_BUMP_WIDTH = np.array([0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005])


def polynomial(x):
    x = np.asarray(x, dtype=float)
    return 16.0 * x**3 - 24.0 * x**2 + 9.0 * x


def sine(x):
    return np.sin(2.0 * np.pi * np.asarray(x, dtype=float))


def piecewise_polynomial(x):
    x = np.asarray(x, dtype=float)
    left = 4.0 * x**2 * (3.0 - 4.0 * x)
    right = 4.0 / 3.0 * x * (4.0 * x**2 - 10.0 * x + 7.0) - 1.5
    return np.where(x < 0.5, left, right)


def heavysine(x):
    x = np.asarray(x, dtype=float)
    return 4.0 * np.sin(4.0 * np.pi * x) - np.sign(x - 0.3) - np.sign(0.72 - x)


def bumps(x):
    x = np.asarray(x, dtype=float)
    z = np.abs(x[..., None] - _BUMP_LOC) / _BUMP_WIDTH
    return (_BUMP_HEIGHT * (1.0 + z) ** -4).sum(axis=-1)


def doppler(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(x * (1.0 - x)) * np.sin(2.1 * np.pi / (x + 0.05))


TEST_FUNCTIONS: dict[str, Callable] = {
    "polynomial": polynomial,
    "sine": sine,
    "piecewise_polynomial": piecewise_polynomial,
    "heavysine": heavysine,
    "bumps": bumps,
    "doppler": doppler,
}
_ALIASES = {"piecewise": "piecewise_polynomial", "piecewisepolynomial": "piecewise_polynomial",
            "heavy_sine": "heavysine", "poly": "polynomial"}
ADDITIVE_FUNCTIONS = ("polynomial", "sine", "piecewise_polynomial", "heavysine")
COVARIATE_LAWS = ("uniform", "normal")


def get_function(name: str) -> Callable:
    key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
    key = _ALIASES.get(key, key)
    if key not in TEST_FUNCTIONS:
        raise InvalidScenario(f"unknown test function {name!r}; choose from {sorted(TEST_FUNCTIONS)}")
    return TEST_FUNCTIONS[key]


def function_name(name: str) -> str:
    return get_function(name).__name__


# ---------------------------------------------------------------------------
# Scenarios and data generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimScenario:
    """One simulation setting.

    ``seeds`` optionally fixes the per-replicate seeds; otherwise they are
    spawned from ``seed``.
    """

    function: str | tuple[str, ...] = "heavysine"
    n: int = 512
    covariate_law: str = "uniform"
    snr: float = 5.0
    replicates: int = 100
    seed: int = 0
    seeds: tuple[int, ...] | None = None

    def __post_init__(self):
        names = (self.function,) if isinstance(self.function, str) else tuple(self.function)
        for name in names:
            get_function(name)
        if self.n < 8:
            raise InvalidScenario(f"n must be >= 8, got {self.n}")
        if not self.snr > 0 or not math.isfinite(self.snr):
            raise InvalidScenario("snr must be positive and finite")
        if self.replicates < 1:
            raise InvalidScenario("replicates must be >= 1")
        if self.covariate_law not in COVARIATE_LAWS:
            raise InvalidScenario(f"covariate law must be one of {COVARIATE_LAWS}")
        if self.seeds is not None and len(self.seeds) != self.replicates:
            raise InvalidScenario("seeds must have one entry per replicate")

    def rng(self, replicate: int) -> np.random.Generator:
        """Generator owned by one replicate."""
        if not 0 <= replicate < self.replicates:
            raise InvalidScenario(f"replicate {replicate} out of range")
        if self.seeds is not None:
            return np.random.default_rng(self.seeds[replicate])
        child = np.random.SeedSequence(self.seed).spawn(self.replicates)[replicate]
        return np.random.default_rng(child)


def draw_covariate(rng: np.random.Generator, n: int, law: str = "uniform", size=None) -> np.ndarray:
    """Covariates on ``[0, 1]``; ``"normal"`` draws N(0, 1) and min-max rescales."""
    shape = (n,) if size is None else (n, size)
    if law == "uniform":
        return rng.uniform(0.0, 1.0, shape)
    if law == "normal":
        z = rng.standard_normal(shape)
        lo, hi = z.min(axis=0), z.max(axis=0)
        return (z - lo) / (hi - lo)
    raise InvalidScenario(f"unknown covariate law {law!r}")


def generate_univariate(scenario: SimScenario, replicate: int = 0):
    """Draw ``(x, y, f0(x), sigma)`` for one replicate."""
    if not isinstance(scenario.function, str):
        raise InvalidScenario("univariate scenarios take a single function")
    rng = scenario.rng(replicate)
    x = draw_covariate(rng, scenario.n, scenario.covariate_law)
    f0 = get_function(scenario.function)(x)
    sigma = math.sqrt(float(np.var(f0)) / scenario.snr)
    y = f0 + sigma * rng.standard_normal(scenario.n)
    return x, y, f0, sigma


def generate_additive(scenario: SimScenario, p: int = 4, replicate: int = 0):
    """Draw ``(X, y, components, sigma)`` with the first four covariates active.

    ``components`` has shape ``(n, 4)``; each column is centered over the
    sample. Covariates beyond the fourth do not enter the response.
    """
    if p < 4:
        raise InvalidScenario(f"additive scenarios need p >= 4, got {p}")
    names = ADDITIVE_FUNCTIONS if isinstance(scenario.function, str) else scenario.function
    if len(names) != 4:
        raise InvalidScenario("additive scenarios take exactly four functions")
    rng = scenario.rng(replicate)
    X = draw_covariate(rng, scenario.n, scenario.covariate_law, size=p)
    comps = np.column_stack([get_function(f)(X[:, j]) for j, f in enumerate(names)])
    comps -= comps.mean(axis=0)
    signal = comps.sum(axis=1)
    sigma = math.sqrt(float(np.var(signal)) / scenario.snr)
    y = signal + sigma * rng.standard_normal(scenario.n)
    return X, y, comps, sigma


# ---------------------------------------------------------------------------
# Methods and oracle-tuned fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodConfig:
    """A waveMesh variant; ``K=None`` means the full mesh ``2**ceil(log2 n)``."""

    name: str
    K: int | None = None
    penalty: str = "l1"
    j0: int = 0
    wavelet: str = DEFAULT_WAVELET

    def resolve_K(self, n: int) -> int:
        full = auto_K(n)
        if self.K is None:
            return full
        dyadic_exponent(self.K)
        if self.K > full:
            raise InvalidScenario(f"K={self.K} exceeds the full mesh size {full} for n={n}")
        return self.K


def full_grid(name: str = "full") -> MethodConfig:
    return MethodConfig(name)


# Oracle MSE moves by well under 1% between rel_tol 1e-8 and 1e-6 while the
# looser tolerance halves the cost of a path, so studies default to it and skip
# the optimality certificate.
STUDY_CONFIG = FitConfig(rel_tol=1e-6, kkt_tol=None)


def oracle_path(x, y, f0, method: MethodConfig, grid_size: int = DEFAULT_GRID_SIZE,
                floor_ratio: float = DEFAULT_FLOOR_RATIO, config: FitConfig | None = None,
                backend: str = "pyramid"):
    """Fit a warm-started path and return ``(min MSE, lambda at min, seconds)``.

    MSE is measured against the noiseless ``f0`` at the sampled covariates.
    ``config`` defaults to :data:`STUDY_CONFIG`.
    """
    start = time.perf_counter()
    config = STUDY_CONFIG if config is None else config
    K = method.resolve_K(len(y))
    problem = UnivariateProblem(y, x, K, method.j0, method.wavelet, method.penalty,
                                config=config, backend=backend)
    lam_max = lambda_max_univariate(y, problem.R, method.wavelet, problem.spec)
    grid = lambda_grid(lam_max, grid_size, floor_ratio)
    best, best_lam = math.inf, math.nan
    warm = None
    for lam in grid:
        model = problem.solve(lam, warm)
        warm = model.coeffs
        mse = float(np.mean((f0 - model.fitted) ** 2))
        if mse < best:
            best, best_lam = mse, float(lam)
    return best, best_lam, time.perf_counter() - start


@dataclass(frozen=True, eq=False)
class StudyResult:
    """Per-replicate oracle MSEs for several methods on one scenario.

    ``ratios[r, m] = mse[r, m] / mse[r, baseline]``.
    """

    scenario: SimScenario
    methods: tuple[MethodConfig, ...]
    baseline: int
    mse: np.ndarray
    best_lambda: np.ndarray = field(repr=False)
    seconds: np.ndarray = field(repr=False)

    @property
    def ratios(self) -> np.ndarray:
        return self.mse / self.mse[:, [self.baseline]]

    @staticmethod
    def _se(a: np.ndarray) -> np.ndarray:
        if a.shape[0] < 2:
            return np.zeros(a.shape[1])
        return a.std(axis=0, ddof=1) / math.sqrt(a.shape[0])

    @property
    def mean_mse(self) -> np.ndarray:
        return self.mse.mean(axis=0)

    @property
    def se_mse(self) -> np.ndarray:
        return self._se(self.mse)

    @property
    def mean_ratio(self) -> np.ndarray:
        return self.ratios.mean(axis=0)

    @property
    def se_ratio(self) -> np.ndarray:
        return self._se(self.ratios)

    @property
    def median_seconds(self) -> np.ndarray:
        return np.median(self.seconds, axis=0)

    def summary(self, name: str) -> dict:
        i = [m.name for m in self.methods].index(name)
        return {"mean_mse": float(self.mean_mse[i]), "se_mse": float(self.se_mse[i]),
                "mean_ratio": float(self.mean_ratio[i]), "se_ratio": float(self.se_ratio[i]),
                "median_seconds": float(self.median_seconds[i])}


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_mse_study(scenario: SimScenario, methods: Sequence[MethodConfig],
                  baseline: str | None = None, grid_size: int = DEFAULT_GRID_SIZE,
                  floor_ratio: float = DEFAULT_FLOOR_RATIO, config: FitConfig | None = None,
                  workers: int = 1, backend: str = "pyramid") -> StudyResult:
    """Oracle-tuned MSE of each method over the scenario's replicates.

    ``baseline`` names the reference method for ratios; by default the first
    full-mesh method in ``methods`` (one is appended if none is present).
    Replicates may run on ``workers`` threads; results do not depend on it.
    """
    methods = tuple(methods)
    if baseline is None:
        idx = next((i for i, m in enumerate(methods) if m.K is None), None)
        if idx is None:
            methods = methods + (full_grid(),)
            idx = len(methods) - 1
    else:
        names = [m.name for m in methods]
        if baseline not in names:
            raise InvalidScenario(f"baseline {baseline!r} is not among the methods")
        idx = names.index(baseline)

    def one(r):
        x, y, f0, _ = generate_univariate(scenario, r)
        return [oracle_path(x, y, f0, m, grid_size, floor_ratio, config, backend) for m in methods]

    rows = _map(one, range(scenario.replicates), workers)
    arr = np.array(rows, dtype=float)
    return StudyResult(scenario, methods, idx, arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])


def k_methods(K_list: Sequence[int]) -> list[MethodConfig]:
    return [MethodConfig(f"K=2^{dyadic_exponent(K)}", K) for K in K_list]


def run_k_study(function: str, n_list: Sequence[int], K_list: Sequence[int], snr: float = 5.0,
                replicates: int = 100, seed: int = 0, covariate_law: str = "uniform",
                grid_size: int = DEFAULT_GRID_SIZE, config: FitConfig | None = None,
                workers: int = 1) -> list[StudyResult]:
    """Effect of the mesh size: one study per ``n`` with ``K_list`` plus the full mesh.

    Values of ``K`` above the full mesh for a given ``n`` are skipped; the
    full-mesh column is always last and serves as the ratio baseline.
    """
    out = []
    for n in n_list:
        full = auto_K(n)
        methods = [m for m in k_methods(sorted(set(K_list))) if m.K <= full]
        methods.append(full_grid())
        sc = SimScenario(function, n, covariate_law, snr, replicates, seed)
        out.append(run_mse_study(sc, methods, "full", grid_size, config=config, workers=workers))
    return out


def adaptive_methods() -> list[MethodConfig]:
    return [MethodConfig("plain"), MethodConfig("adaptive", penalty="adaptive", j0=2)]


def run_adaptive_study(function: str, n_list: Sequence[int], snr: float = 5.0,
                       replicates: int = 100, seed: int = 0, covariate_law: str = "uniform",
                       grid_size: int = DEFAULT_GRID_SIZE, config: FitConfig | None = None,
                       workers: int = 1) -> list[StudyResult]:
    """Plain versus level-adaptive penalty, both on the full mesh."""
    out = []
    for n in n_list:
        sc = SimScenario(function, n, covariate_law, snr, replicates, seed)
        out.append(run_mse_study(sc, adaptive_methods(), "plain", grid_size, config=config,
                                 workers=workers))
    return out


# ---------------------------------------------------------------------------
# Additive study
# ---------------------------------------------------------------------------

def additive_lambda_max(y, X, K: int, wavelet=DEFAULT_WAVELET, j0: int = 0,
                        penalty="l1") -> float:
    """Largest per-block ``lambda_max`` on the centered response."""
    yc = np.asarray(y, dtype=float) - float(np.mean(y))
    vals = []
    for j in range(X.shape[1]):
        if np.ptp(X[:, j]) == 0:
            continue
        R = InterpolationMatrix(X[:, j], K)
        vals.append(lambda_max_univariate(yc, R, wavelet, penalty, j0))
    return max(vals)


def additive_path(y, X, lambdas, lambda2: float = 0.0, K: int | None = None,
                  config: FitConfig | None = None, **kwargs):
    """Warm-started additive fits over ``lambdas``."""
    models, warm = [], None
    for lam in lambdas:
        m = fit_additive(y, X, lam, lambda2, K=K, config=config, init=warm, **kwargs)
        warm = m.blocks
        models.append(m)
    return models


@dataclass(frozen=True, eq=False)
class AdditiveStudyResult:
    scenario: SimScenario
    p: int
    mse: np.ndarray
    chosen_lambda: np.ndarray = field(repr=False)
    active_sets: list = field(repr=False)

    @property
    def mean_mse(self) -> float:
        return float(self.mse.mean())

    @property
    def se_mse(self) -> float:
        if self.mse.size < 2:
            return 0.0
        return float(self.mse.std(ddof=1) / math.sqrt(self.mse.size))


def run_additive_study(scenario: SimScenario, p: int = 4, folds: int = 5,
                       grid_size: int = DEFAULT_GRID_SIZE, lambda2: float = 0.0,
                       config: FitConfig | None = None, workers: int = 1) -> AdditiveStudyResult:
    """Additive fits tuned by ``folds``-fold cross-validation over a ``lambda1`` grid.

    MSE is measured against the noiseless sum of the centered components.
    """
    def one(r):
        X, y, comps, _ = generate_additive(scenario, p, r)
        n = y.size
        K = auto_K(n)
        grid = lambda_grid(additive_lambda_max(y, X, K), grid_size)
        ids = assign_folds(n, folds, [scenario.seed, r, 1])
        errors = np.zeros((folds, len(grid)))
        for k in range(folds):
            test = ids == k
            path = additive_path(y[~test], X[~test], grid, lambda2, K, config)
            errors[k] = [heldout_error(y[test], m.predict(X[test])) for m in path]
        best = int(np.argmin(errors.mean(axis=0)))
        model = fit_additive(y, X, grid[best], lambda2, K=K, config=config)
        signal = comps.sum(axis=1)
        return float(np.mean((signal - (model.fitted - model.intercept)) ** 2)), float(grid[best]), model.active_set

    rows = _map(one, range(scenario.replicates), workers)
    return AdditiveStudyResult(scenario, p, np.array([r[0] for r in rows]),
                               np.array([r[1] for r in rows]), [r[2] for r in rows])


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def format_ratio(mean: float, se: float) -> str:
    """``"0.60 (1.18)"``: mean ratio and 100 x standard error, two decimals."""
    return f"{mean:.2f} ({100.0 * se:.2f})"


def ratio_table(results: Sequence[StudyResult]) -> list[dict]:
    """One row per study with ``ratio (100 x SE)`` cells per method."""
    rows = []
    for res in results:
        sc = res.scenario
        row = {"function": function_name(sc.function), "n": sc.n}
        for i, m in enumerate(res.methods):
            row[m.name] = format_ratio(res.mean_ratio[i], res.se_ratio[i])
        rows.append(row)
    return rows


def detail_table(results: Sequence[StudyResult], timing: bool = False) -> list[dict]:
    """Long format: one row per (study, method) with numeric columns.

    Wall times vary between runs, so they are included only with ``timing=True``.
    """
    rows = []
    for res in results:
        sc = res.scenario
        for i, m in enumerate(res.methods):
            row = {
                "function": function_name(sc.function), "n": sc.n, "method": m.name,
                "K": m.resolve_K(sc.n), "penalty": m.penalty, "j0": m.j0,
                "mean_mse": repr(float(res.mean_mse[i])), "se_mse": repr(float(res.se_mse[i])),
                "mean_ratio": repr(float(res.mean_ratio[i])), "se_ratio": repr(float(res.se_ratio[i])),
                "ratio_se100": format_ratio(res.mean_ratio[i], res.se_ratio[i]),
            }
            if timing:
                row["median_seconds"] = f"{res.median_seconds[i]:.6f}"
            rows.append(row)
    return rows


def to_csv(rows: Sequence[dict], path=None) -> str:
    """Write dict rows as CSV (LF line endings); returns the text."""
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields += [k for k in r if k not in fields]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def to_text(rows: Sequence[dict]) -> str:
    """Fixed-width rendering of dict rows."""
    if not rows:
        return ""
    fields = list(rows[0])
    cells = [[str(r.get(f, "")) for f in fields] for r in rows]
    widths = [max(len(f), *(len(c[i]) for c in cells)) for i, f in enumerate(fields)]
    line = "  ".join(f.ljust(w) for f, w in zip(fields, widths))
    body = ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join([line, "-" * len(line), *body]) + "\n"
