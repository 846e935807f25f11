"""Coefficient penalties and their proximal operators.

Three weighted-l1 penalties share one representation, a per-coefficient weight
vector:

``l1``
    Weight 0 on the father block, 1 on every mother coefficient.
``adaptive``
    Weight 0 on the father block, ``sqrt(2 log j)`` on mother level ``j``.
    Needs ``j0 >= 2`` so that every weight is positive.
``besov``
    Weight 1 on the father block, ``2**(j (s - 1/2))`` on mother level ``j``;
    a discrete Besov ``B^s_{1,1}`` norm.

The group term of the sparse additive model is handled by
:func:`group_soft_scale`, which acts on a block's fitted values rather than on
its coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPenalty, LayoutMismatch
from .interp import InterpolationMatrix
from .wavelet import DEFAULT_WAVELET, CoefficientLayout, idwt

PENALTY_KINDS = ("l1", "adaptive", "besov")


@dataclass(frozen=True, eq=False)
class PenaltySpec:
    """Which coefficients are penalized and by how much.

    Use :func:`make_penalty` to build one from a string such as ``"besov:1.5"``.
    """

    kind: str
    K: int
    j0: int = 0
    s: float | None = None
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise InvalidPenalty(f"unknown penalty kind {self.kind!r}")
        layout = CoefficientLayout(self.K, self.j0)
        w = np.zeros(self.K)
        if self.kind == "l1":
            if self.s is not None:
                raise InvalidPenalty("smoothness s only applies to the besov penalty")
            w[2 ** self.j0:] = 1.0
        elif self.kind == "adaptive":
            if self.j0 < 2:
                raise InvalidPenalty(f"adaptive penalty requires j0 >= 2, got j0={self.j0}")
            for j in layout.levels:
                w[layout.level(j)] = np.sqrt(2.0 * np.log(j))
        else:
            if self.s is None or not self.s > 0.5:
                raise InvalidPenalty(f"besov penalty requires s > 1/2, got s={self.s}")
            w[layout.father] = 1.0
            for j in layout.levels:
                w[layout.level(j)] = 2.0 ** (j * (self.s - 0.5))
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def layout(self) -> CoefficientLayout:
        return CoefficientLayout(self.K, self.j0)

    @property
    def label(self) -> str:
        return f"besov:{self.s:g}" if self.kind == "besov" else self.kind

    def with_layout(self, K: int, j0: int | None = None) -> "PenaltySpec":
        """Same kind of penalty rebuilt for another ``(K, j0)``."""
        return PenaltySpec(self.kind, K, self.j0 if j0 is None else j0, self.s)

    def __eq__(self, other):
        if not isinstance(other, PenaltySpec):
            return NotImplemented
        return (self.kind, self.K, self.j0, self.s) == (other.kind, other.K, other.j0, other.s)

    def __hash__(self):
        return hash((self.kind, self.K, self.j0, self.s))


def make_penalty(kind: str | PenaltySpec, K: int, j0: int = 0, s: float | None = None) -> PenaltySpec:
    """Build a :class:`PenaltySpec`.

    ``kind`` is ``"l1"``, ``"adaptive"``, ``"besov"`` (with ``s``) or the
    shorthand ``"besov:<s>"``. An existing spec is rebuilt for ``(K, j0)``.
    """
    if isinstance(kind, PenaltySpec):
        return kind if (kind.K, kind.j0) == (K, j0) else kind.with_layout(K, j0)
    text = str(kind).strip().lower()
    if text.startswith("besov:"):
        try:
            s = float(text.split(":", 1)[1])
        except ValueError:
            raise InvalidPenalty(f"cannot parse smoothness in {kind!r}") from None
        text = "besov"
    return PenaltySpec(text, int(K), int(j0), s)


def _check(spec: PenaltySpec, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != spec.K:
        raise LayoutMismatch(f"penalty built for K={spec.K}, got length {d.shape[-1]}")
    return d


def penalty_value(spec: PenaltySpec, d) -> float:
    """``sum_i weights_i * |d_i|``."""
    d = _check(spec, d)
    return float(np.abs(d) @ spec.weights)


def prox_weighted_l1(v, spec: PenaltySpec | np.ndarray, threshold: float) -> np.ndarray:
    """Proximal map of ``threshold * sum_i w_i |d_i|``.

    Componentwise soft thresholding at ``threshold * w_i``; zero-weight
    components pass through unchanged.
    """
    weights = spec.weights if isinstance(spec, PenaltySpec) else np.asarray(spec, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != weights.size:
        raise LayoutMismatch(f"weights have length {weights.size}, got {v.shape[-1]}")
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return soft_threshold(v, threshold * weights)


def soft_threshold(v, tau) -> np.ndarray:
    """``sign(v) * max(|v| - tau, 0)`` computed as ``v - clip(v, -tau, tau)``."""
    return v - np.clip(v, -tau, tau)


def soft_scale_factor(norm: float, gate: float) -> float:
    """``max(1 - gate / norm, 0)``, with the zero-norm limit taken as 0."""
    if gate == 0.0:
        return 1.0
    if norm <= gate:
        return 0.0
    return 1.0 - gate / norm


def group_soft_scale(d, R: InterpolationMatrix, gate: float,
                     wavelet=DEFAULT_WAVELET, j0: int = 0) -> np.ndarray:
    """Shrink a coefficient block toward zero by the norm of its fitted values.

    With ``g = R @ idwt(d)`` the result is ``d * max(1 - gate / ||g||_2, 0)``,
    which is exactly zero once ``||g||_2 <= gate``.
    """
    if gate < 0:
        raise ValueError("gate must be nonnegative")
    d = np.asarray(d, dtype=float)
    if gate == 0.0:
        return d.copy()
    g = R.apply(idwt(d, wavelet, j0))
    return d * soft_scale_factor(float(np.linalg.norm(g)), gate)
