"""Linear interpolation from a dyadic mesh to scattered covariate values.

Mesh node ``m`` (1-based) sits at ``m/K``. A covariate ``x`` in ``(i/K, (i+1)/K]``
is interpolated from nodes ``i`` and ``i+1``; anything at or below ``1/K`` takes
the value of node 1. Each row of the operator therefore has one or two
nonzeros, so it is stored as two parallel ``(n, 2)`` arrays of column indices
(0-based) and weights; single-entry rows repeat the column with weight 0 in the
second slot.
"""
from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.linalg import eigvalsh_tridiagonal

from .errors import DimensionMismatch, EmptyMatrix, NonDyadicK, OutOfDomain
from .wavelet import is_power_of_two


class InterpolationMatrix:
    """Sparse ``n x K`` linear interpolation operator ``R``.

    Parameters
    ----------
    x : array_like, shape (n,)
        Covariate values in ``[0, 1]``.
    K : int
        Mesh size, a power of two.
    """

    def __init__(self, x, K: int):
        x = np.asarray(x, dtype=float).ravel()
        K = int(K)
        if not is_power_of_two(K):
            raise NonDyadicK(f"K={K} is not a power of two")
        if x.size and (not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0):
            raise OutOfDomain("covariate values must lie in [0, 1]")
        self.x = x
        self.x.setflags(write=False)
        self.K = K
        self.cols, self.weights = _interp_rows(x, K)
        rows = np.repeat(np.arange(x.size), 2)
        self._csr = sparse.csr_matrix((self.weights.ravel(), (rows, self.cols.ravel())),
                                      shape=(x.size, K))
        self._csr_t = self._csr.T.tocsr()

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.n, self.K

    def __repr__(self):
        return f"InterpolationMatrix(n={self.n}, K={self.K})"

    @property
    def nnz_per_row(self) -> np.ndarray:
        return 1 + (self.weights[:, 1] > 0)

    @property
    def rows(self) -> list[list[tuple[int, float]]]:
        """Per-row ``(column, weight)`` pairs with 1-based columns."""
        out = []
        for c, w in zip(self.cols, self.weights):
            row = [(int(c[0]) + 1, float(w[0]))]
            if w[1] > 0:
                row.append((int(c[1]) + 1, float(w[1])))
            out.append(row)
        return out

    def apply(self, f) -> np.ndarray:
        """Interpolated values ``R @ f`` for mesh values ``f`` of length ``K``."""
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.K:
            raise DimensionMismatch(f"expected length {self.K}, got {f.shape[-1]}")
        if f.ndim == 1:
            return self._csr @ f
        w = self.weights
        return f[..., self.cols[:, 0]] * w[:, 0] + f[..., self.cols[:, 1]] * w[:, 1]

    def apply_transpose(self, r) -> np.ndarray:
        """Adjoint product ``R.T @ r`` for a length-``n`` vector."""
        r = np.asarray(r, dtype=float)
        if r.shape != (self.n,):
            raise DimensionMismatch(f"expected shape ({self.n},), got {r.shape}")
        return self._csr_t @ r

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def rtr_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and first off-diagonal of the tridiagonal ``R.T @ R``."""
        c, w = self.cols, self.weights
        diag = (np.bincount(c[:, 0], w[:, 0] ** 2, minlength=self.K)
                + np.bincount(c[:, 1], w[:, 1] ** 2, minlength=self.K))
        # Two-entry rows always touch adjacent columns (c, c + 1).
        two = w[:, 1] > 0
        off = np.bincount(c[two, 0], w[two, 0] * w[two, 1], minlength=self.K)[: self.K - 1]
        return diag, off


def _interp_rows(x: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    u = K * x  # exact: K is a power of two
    lo = np.floor(u)
    frac = u - lo
    clamp = u <= 1.0
    cols = np.empty((x.size, 2), dtype=np.intp)
    weights = np.zeros((x.size, 2))
    # Interior rows: nodes lo and lo + 1 (1-based), i.e. lo - 1 and lo (0-based).
    cols[:, 0] = lo.astype(np.intp) - 1
    cols[:, 1] = np.minimum(lo.astype(np.intp), K - 1)
    weights[:, 1] = frac
    weights[:, 0] = 1.0 - frac
    # Kx an exact integer: floor and ceil coincide, single entry of weight 1.
    exact = frac == 0.0
    cols[exact, 1] = cols[exact, 0]
    cols[clamp] = 0
    weights[clamp, 0] = 1.0
    weights[clamp, 1] = 0.0
    return cols, weights


def build_linear_interp(x, K: int) -> InterpolationMatrix:
    """Build the linear interpolation operator from mesh ``{m/K}`` to ``x``."""
    return InterpolationMatrix(x, K)


def apply(R: InterpolationMatrix, f) -> np.ndarray:
    return R.apply(f)


def apply_transpose(R: InterpolationMatrix, r) -> np.ndarray:
    return R.apply_transpose(r)


def max_eigenvalue_rtr(R: InterpolationMatrix, tol: float = 1e-10, max_iter: int = 10_000,
                       seed: int = 0) -> float:
    """Largest eigenvalue of ``R.T @ R`` by power iteration.

    Each step applies ``R`` and ``R.T`` through their sparse representation.
    Iteration stops once the residual ``||R.T R v - rho v||`` is at most
    ``tol * rho``; for a symmetric matrix this bounds the eigenvalue error by
    the same amount. If ``max_iter`` steps do not get there (a tiny spectral
    gap), the exact tridiagonal eigensolver is used instead.
    """
    if R.n == 0:
        raise EmptyMatrix("interpolation matrix has no rows")
    rng = np.random.default_rng(seed)
    # Positive start vector: R.T R is entrywise nonnegative, so its Perron
    # vector is nonnegative and never orthogonal to this start.
    v = rng.uniform(0.5, 1.5, size=R.K)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = R.apply_transpose(R.apply(v))
        rho = float(v @ w)
        if rho <= 0.0:
            raise EmptyMatrix("R.T @ R has no positive eigenvalue")
        if np.linalg.norm(w - rho * v) <= tol * rho:
            return rho
        v = w / np.linalg.norm(w)
    return float(rtr_eigenvalues(R)[-1])


def rtr_eigenvalues(R: InterpolationMatrix) -> np.ndarray:
    """All eigenvalues of the tridiagonal ``R.T @ R`` in ascending order."""
    if R.n == 0:
        raise EmptyMatrix("interpolation matrix has no rows")
    diag, off = R.rtr_bands()
    return eigvalsh_tridiagonal(diag, off)
