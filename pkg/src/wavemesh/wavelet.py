"""Periodized orthonormal discrete wavelet transform.

The forward transform maps a signal of length ``K = 2**J`` to a coefficient
vector laid out as::

    [alpha_{j0,0..2^j0-1}, beta_{j0,.}, beta_{j0+1,.}, ..., beta_{J-1,.}]

i.e. the father (scaling) block followed by mother (detail) blocks ordered from
coarse to fine. Level ``j`` holds ``2**j`` mother coefficients. Boundaries are
handled by periodic wrapping, which keeps the transform matrix exactly
orthogonal for every filter length, including filters longer than the signal.

With this normalization a constant signal ``c`` maps to a single father
coefficient ``c * sqrt(K)`` when ``j0 = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidLevel, NonDyadicLength, UnknownWavelet

# Extremal-phase Daubechies lowpass filters indexed by number of vanishing
# moments N (2N taps). N = 1 is Haar.
_DAUBECHIES_TAPS = {
    1: (0.70710678118654752, 0.70710678118654752),
    2: (0.48296291314453414, 0.83651630373780791, 0.22414386804201338,
        -0.12940952255126038),
    3: (0.33267055295008262, 0.80689150931109258, 0.45987750211849157,
        -0.13501102001025459, -0.085441273882026662, 0.035226291885709537),
    4: (0.2303778133088965, 0.71484657055291565, 0.63088076792985891,
        -0.027983769416859854, -0.18703481171909308, 0.030841381835560764,
        0.0328830116668852, -0.010597401785069032),
    5: (0.16010239797419291, 0.60382926979718967, 0.72430852843777293,
        0.13842814590132073, -0.24229488706638203, -0.032244869584638375,
        0.077571493840045714, -0.0062414902127982743, -0.012580751999081999,
        0.0033357252854737713),
    6: (0.11154074335010946, 0.49462389039845309, 0.75113390802109535,
        0.31525035170919763, -0.22626469396543982, -0.12976686756726194,
        0.097501605587323049, 0.027522865530305729, -0.03158203931748603,
        0.00055384220116149614, 0.0047772575109455106, -0.0010773010853084796),
    7: (0.077852054085009179, 0.39653931948191731, 0.72913209084623512,
        0.46978228740519312, -0.14390600392856498, -0.22403618499387498,
        0.071309219266830265, 0.080612609151083072, -0.038029936935014414,
        -0.016574541630666881, 0.012550998556099841, 0.00042957797292136652,
        -0.0018016407040474909, 0.00035371379997452025),
    8: (0.05441584224310401, 0.31287159091429997, 0.67563073629728981,
        0.58535468365420671, -0.015829105256349306, -0.28401554296154693,
        0.00047248457391328277, 0.12874742662047846, -0.017369301001807546,
        -0.044088253930794752, 0.013981027917398282, 0.0087460940474057767,
        -0.0048703529934515743, -0.00039174037337694705,
        0.00067544940645056937, -0.00011747678412476953),
    9: (0.038077947363878347, 0.24383467461259035, 0.60482312369011111,
        0.65728807805130054, 0.13319738582500758, -0.29327378327917491,
        -0.096840783222976461, 0.14854074933810638, 0.030725681479333379,
        -0.067632829061329974, 0.00025094711483145196, 0.022361662123679097,
        -0.0047232047577513973, -0.0042815036824634298,
        0.0018476468830562265, 0.00023038576352319597,
        -0.00025196318894271014, 0.000039347320316271599),
    10: (0.026670057900555554, 0.18817680007769149, 0.52720118893172559,
         0.68845903945360357, 0.28117234366057746, -0.24984642432731538,
         -0.19594627437737704, 0.12736934033579326, 0.093057364603572351,
         -0.071394147166397087, -0.029457536821875813, 0.033212674059341002,
         0.0036065535669561697, -0.010733175483330575,
         0.0013953517470529012, 0.0019924052951850561,
         -0.00068585669495971163, -0.00011646685512928545,
         0.000093588670320069591, -0.000013264202894521245),
}

DEFAULT_WAVELET = "daub4"


@dataclass(frozen=True, eq=False)
class WaveletFilter:
    """Quadrature mirror filter pair.

    ``highpass[k] = (-1)**k * lowpass[L-1-k]``.
    """

    name: str
    lowpass: np.ndarray = field(repr=False)
    highpass: np.ndarray = field(repr=False)

    @property
    def ntaps(self) -> int:
        return self.lowpass.size


def _make_filter(name: str, taps) -> WaveletFilter:
    h = np.asarray(taps, dtype=float)
    h.setflags(write=False)
    g = h[::-1] * (-1.0) ** np.arange(h.size)
    g.setflags(write=False)
    return WaveletFilter(name, h, g)


def check_filter(filt: WaveletFilter, tol: float = 1e-12) -> None:
    """Raise ``AssertionError`` if ``filt`` violates the QMF invariants."""
    h, g = filt.lowpass, filt.highpass
    assert h.size % 2 == 0, f"{filt.name}: odd tap count"
    assert abs(h.sum() - np.sqrt(2.0)) < tol, f"{filt.name}: sum != sqrt(2)"
    assert abs(h @ h - 1.0) < tol, f"{filt.name}: lowpass not unit norm"
    assert abs(g @ g - 1.0) < tol, f"{filt.name}: highpass not unit norm"
    assert abs(h @ g) < tol, f"{filt.name}: lowpass not orthogonal to highpass"
    # Orthogonality to even shifts is what makes the periodized transform unitary.
    for s in range(2, h.size, 2):
        assert abs(h[s:] @ h[:-s]) < tol, f"{filt.name}: shift {s} not orthogonal"


_FILTERS = {}
for _n, _taps in _DAUBECHIES_TAPS.items():
    _FILTERS[f"daub{_n}"] = _make_filter("haar" if _n == 1 else f"daub{_n}", _taps)
_FILTERS["haar"] = _FILTERS["daub1"]
for _f in _FILTERS.values():
    check_filter(_f)

WAVELET_NAMES = ("haar",) + tuple(f"daub{n}" for n in range(2, 11))


def get_wavelet(wavelet: str | WaveletFilter = DEFAULT_WAVELET) -> WaveletFilter:
    """Look up a filter by name (``"haar"``, ``"daub2"`` ... ``"daub10"``).

    Names are case-insensitive; a :class:`WaveletFilter` is passed through.
    """
    if isinstance(wavelet, WaveletFilter):
        return wavelet
    key = str(wavelet).strip().lower().replace("-", "").replace("_", "")
    try:
        return _FILTERS[key]
    except KeyError:
        raise UnknownWavelet(
            f"unknown wavelet {wavelet!r}; expected one of {', '.join(WAVELET_NAMES)}"
        ) from None


def dyadic_exponent(K: int) -> int:
    """Return ``J`` with ``K == 2**J``; raise :class:`NonDyadicLength` otherwise."""
    K = int(K)
    if K < 1 or K & (K - 1):
        raise NonDyadicLength(f"length {K} is not a power of two")
    return K.bit_length() - 1


def is_power_of_two(K: int) -> bool:
    return K >= 1 and not K & (K - 1)


@dataclass(frozen=True)
class CoefficientLayout:
    """Index bookkeeping for a length-``K`` coefficient vector."""

    K: int
    j0: int = 0

    def __post_init__(self):
        J = dyadic_exponent(self.K)
        if J < 1:
            raise NonDyadicLength(f"need K >= 2, got {self.K}")
        if not 0 <= self.j0 < J:
            raise InvalidLevel(f"j0={self.j0} must satisfy 0 <= j0 < log2(K)={J}")

    @property
    def J(self) -> int:
        return self.K.bit_length() - 1

    @property
    def levels(self) -> range:
        """Mother resolution levels present, coarse to fine."""
        return range(self.j0, self.J)

    @property
    def father(self) -> slice:
        return slice(0, 2 ** self.j0)

    def level(self, j: int) -> slice:
        """Slice of the mother coefficients at resolution level ``j``."""
        if j not in self.levels:
            raise InvalidLevel(f"level {j} outside {self.j0}..{self.J - 1}")
        start = 2 ** j  # father block + levels j0..j-1 sum to 2^j
        return slice(start, 2 * start)

    def locate(self, i: int) -> tuple[str, int, int]:
        """Map flat index ``i`` to ``(kind, level, position)``."""
        if not 0 <= i < self.K:
            raise IndexError(i)
        if i < 2 ** self.j0:
            return "father", self.j0, i
        j = int(i).bit_length() - 1
        return "mother", j, i - 2 ** j

    def level_index(self) -> np.ndarray:
        """Level of every coefficient; father entries are marked ``-1``."""
        out = np.full(self.K, -1, dtype=int)
        for j in self.levels:
            out[self.level(j)] = j
        return out


@lru_cache(maxsize=None)
def _analysis_index(m: int, ntaps: int) -> np.ndarray:
    k = np.arange(m // 2)[:, None]
    n = np.arange(ntaps)[None, :]
    idx = (2 * k + n) % m
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=None)
def _synthesis_index(half: int, nhalf: int) -> np.ndarray:
    # Gathers approx[(q - r) % half] then detail[(q - r) % half] from the
    # concatenated [approx, detail] buffer.
    q = np.arange(half)[:, None]
    r = np.arange(nhalf)[None, :]
    base = (q - r) % half
    idx = np.concatenate([base, base + half], axis=1)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=None)
def _filter_banks(filt: WaveletFilter) -> tuple[np.ndarray, np.ndarray]:
    h, g = filt.lowpass, filt.highpass
    analysis = np.column_stack([h, g])
    synthesis = np.vstack([
        np.column_stack([h[0::2], h[1::2]]),
        np.column_stack([g[0::2], g[1::2]]),
    ])
    analysis.setflags(write=False)
    synthesis.setflags(write=False)
    return analysis, synthesis


def _check_signal(x, j0: int) -> tuple[np.ndarray, int]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise NonDyadicLength("signal must be at least one-dimensional")
    J = dyadic_exponent(x.shape[-1])
    if J < 1:
        raise NonDyadicLength(f"need length >= 2, got {x.shape[-1]}")
    if not 0 <= j0 < J:
        raise InvalidLevel(f"j0={j0} must satisfy 0 <= j0 < log2(K)={J}")
    return x, J


# Levels coarser than this are applied as one small dense product, which is
# much cheaper than a Python-level loop over tiny pyramid steps.
_COARSE_LEVEL = 6


def _pyramid_forward(x: np.ndarray, filt: WaveletFilter, J: int, stop: int) -> np.ndarray:
    analysis, _ = _filter_banks(filt)
    out = np.empty_like(x)
    approx = x
    for j in range(J - 1, stop - 1, -1):
        m = 2 ** (j + 1)
        both = approx[..., _analysis_index(m, filt.ntaps)] @ analysis
        out[..., 2 ** j: m] = both[..., 1]
        approx = both[..., 0]
    out[..., : 2 ** stop] = approx
    return out


def _pyramid_inverse(buf: np.ndarray, filt: WaveletFilter, start: int, J: int) -> np.ndarray:
    _, synthesis = _filter_banks(filt)
    for j in range(start, J):
        half = 2 ** j
        idx = _synthesis_index(half, filt.ntaps // 2)
        both = buf[..., : 2 * half][..., idx] @ synthesis
        buf[..., : 2 * half] = both.reshape(both.shape[:-2] + (2 * half,))
    return buf


@lru_cache(maxsize=None)
def _coarse_matrix(filt: WaveletFilter, c: int, j0: int) -> np.ndarray:
    # Row l is the transform of the l-th basis vector of length 2**c, so
    # dwt(a) = a @ M and, by orthogonality, idwt(b) = b @ M.T.
    M = _pyramid_forward(np.eye(2 ** c), filt, c, j0)
    M.setflags(write=False)
    return M


def dwt(signal, wavelet: str | WaveletFilter = DEFAULT_WAVELET, j0: int = 0) -> np.ndarray:
    """Forward periodized DWT along the last axis.

    Parameters
    ----------
    signal : array_like, shape (..., K)
        ``K`` must be a power of two, ``K >= 2``.
    wavelet : str or WaveletFilter
    j0 : int
        Coarsest resolution level kept, ``0 <= j0 < log2(K)``.

    Returns
    -------
    ndarray, shape (..., K)
        Coefficients in the layout of :class:`CoefficientLayout`.
    """
    x, J = _check_signal(signal, j0)
    filt = get_wavelet(wavelet)
    c = min(J, max(j0, _COARSE_LEVEL))
    out = _pyramid_forward(x, filt, J, c)
    if c > j0:
        m = 2 ** c
        out[..., :m] = out[..., :m] @ _coarse_matrix(filt, c, j0)
    return out


def idwt(coeffs, wavelet: str | WaveletFilter = DEFAULT_WAVELET, j0: int = 0) -> np.ndarray:
    """Inverse of :func:`dwt` (multiplication by the transposed DWT matrix)."""
    d, J = _check_signal(coeffs, j0)
    filt = get_wavelet(wavelet)
    c = min(J, max(j0, _COARSE_LEVEL))
    buf = d.copy()
    if c > j0:
        m = 2 ** c
        buf[..., :m] = buf[..., :m] @ _coarse_matrix(filt, c, j0).T
    return _pyramid_inverse(buf, filt, c, J)


def build_w_matrix(K: int, wavelet: str | WaveletFilter = DEFAULT_WAVELET, j0: int = 0) -> np.ndarray:
    """Dense ``K x K`` DWT matrix ``W`` with ``W @ y == dwt(y)``.

    Intended for small ``K`` (test oracles and dense backends).
    """
    J = dyadic_exponent(K)
    if J < 1:
        raise NonDyadicLength(f"need K >= 2, got {K}")
    if K > 1024:
        raise ValueError(f"refusing to build a dense {K}x{K} wavelet matrix")
    # dwt acts on the rows of the identity, producing W^T row by row.
    filt = get_wavelet(wavelet)
    if not 0 <= j0 < J:
        raise InvalidLevel(f"j0={j0} must satisfy 0 <= j0 < log2(K)={J}")
    return np.ascontiguousarray(_pyramid_forward(np.eye(K), filt, J, j0).T)
