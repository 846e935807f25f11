import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wavemesh import errors
from wavemesh.wavelet import (WAVELET_NAMES, CoefficientLayout, build_w_matrix, check_filter,
                              dwt, get_wavelet, idwt)

from oracles import dense_dwt_matrix

SQ2 = np.sqrt(2.0)


def test_haar_constant_maps_to_father():
    np.testing.assert_allclose(dwt([1.0, 1, 1, 1], "haar"), [2, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(idwt([2.0, 0, 0, 0], "haar"), [1, 1, 1, 1], atol=1e-15)


def test_haar_pure_detail():
    np.testing.assert_allclose(dwt([1.0, -1.0], "haar"), [0, SQ2], atol=1e-15)
    np.testing.assert_allclose(idwt([0.0, SQ2], "haar"), [1, -1], atol=1e-15)


def test_two_point_haar_matrix():
    W = build_w_matrix(2, "haar")
    np.testing.assert_allclose(W, np.array([[1, 1], [1, -1]]) / SQ2, atol=1e-15)


@pytest.mark.parametrize("name", WAVELET_NAMES)
def test_filter_invariants(name):
    filt = get_wavelet(name)
    h, g = filt.lowpass, filt.highpass
    assert h.size % 2 == 0
    assert abs(h.sum() - SQ2) < 1e-12
    assert abs(h @ h - 1) < 1e-12 and abs(g @ g - 1) < 1e-12
    assert abs(h @ g) < 1e-12
    check_filter(filt)


def test_daub4_matches_dense_oracle(rng):
    y = rng.standard_normal(16)
    W = dense_dwt_matrix(get_wavelet("daub4").lowpass, 16)
    np.testing.assert_allclose(dwt(y, "daub4"), W @ y, atol=1e-10)


def test_daub2_inverse_matches_transpose_oracle(rng):
    d = rng.standard_normal(32)
    W = dense_dwt_matrix(get_wavelet("daub2").lowpass, 32)
    np.testing.assert_allclose(idwt(d, "daub2"), W.T @ d, atol=1e-10)


@pytest.mark.parametrize("name", ["haar", "daub4", "daub10"])
@pytest.mark.parametrize("K", [2, 8, 64, 256])
def test_w_matrix_against_oracle_every_level(name, K):
    lowpass = get_wavelet(name).lowpass
    for j0 in range(int(np.log2(K))):
        np.testing.assert_allclose(build_w_matrix(K, name, j0),
                                   dense_dwt_matrix(lowpass, K, j0), atol=1e-12)


def test_haar_w_orthogonal():
    W = build_w_matrix(8, "haar")
    np.testing.assert_allclose(W @ W.T, np.eye(8), atol=1e-12)


def test_daub4_columns_unit_norm():
    W = build_w_matrix(16, "daub4")
    np.testing.assert_allclose(np.linalg.norm(W, axis=0), 1.0, atol=1e-10)


def test_hybrid_path_agrees_with_oracle_beyond_coarse_cutoff(rng):
    # K = 1024 exercises both the pyramid levels and the cached coarse product.
    y = rng.standard_normal(1024)
    W = dense_dwt_matrix(get_wavelet("daub6").lowpass, 1024, 2)
    np.testing.assert_allclose(dwt(y, "daub6", 2), W @ y, atol=1e-10)
    np.testing.assert_allclose(idwt(W @ y, "daub6", 2), y, atol=1e-10)


def test_batched_rows_transform_independently(rng):
    Y = rng.standard_normal((5, 128))
    out = dwt(Y, "daub3", 1)
    for i in range(5):
        np.testing.assert_allclose(out[i], dwt(Y[i], "daub3", 1), atol=1e-13)


@st.composite
def signals(draw):
    J = draw(st.integers(1, 9))
    y = draw(arrays(np.float64, 2 ** J, elements=st.floats(-1e3, 1e3)))
    name = draw(st.sampled_from(WAVELET_NAMES))
    j0 = draw(st.integers(0, J - 1))
    return y, name, j0


@given(signals())
def test_round_trip_and_parseval(case):
    y, name, j0 = case
    d = dwt(y, name, j0)
    scale = max(1.0, np.abs(y).max())
    assert np.abs(idwt(d, name, j0) - y).max() < 1e-10 * scale
    assert abs(np.linalg.norm(d) - np.linalg.norm(y)) < 1e-10 * scale * np.sqrt(y.size)


@given(signals(), st.floats(-10, 10), st.floats(-10, 10))
def test_linearity(case, a, b):
    y, name, j0 = case
    z = np.roll(y, 1)[::-1].copy()
    lhs = dwt(a * y + b * z, name, j0)
    rhs = a * dwt(y, name, j0) + b * dwt(z, name, j0)
    assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(y).max() * (abs(a) + abs(b)))


def test_layout_sizes_and_locate():
    lay = CoefficientLayout(64, 2)
    assert 2 ** lay.j0 + sum(2 ** j for j in lay.levels) == 64
    seen = set()
    for i in range(64):
        kind, level, pos = lay.locate(i)
        seen.add((kind, level, pos))
        if kind == "mother":
            assert lay.level(level).start + pos == i
    assert len(seen) == 64
    idx = lay.level_index()
    assert (idx[:4] == -1).all() and idx[-1] == 5


def test_errors():
    with pytest.raises(errors.NonDyadicLength):
        dwt(np.ones(6))
    with pytest.raises(errors.InvalidLevel):
        dwt(np.ones(8), j0=3)
    with pytest.raises(errors.UnknownWavelet):
        get_wavelet("sym4")
    with pytest.raises(errors.NonDyadicLength):
        build_w_matrix(12)
    assert get_wavelet("Daub-4") is get_wavelet("daub4")
    assert get_wavelet("daub1") is get_wavelet("haar")


def _per_call(K, reps):
    y = np.random.default_rng(0).standard_normal(K)
    dwt(y)
    best = np.inf
    for _ in range(5):
        t = time.perf_counter()
        for _ in range(reps):
            dwt(y)
        best = min(best, (time.perf_counter() - t) / reps)
    return best


def test_cost_scales_linearly():
    # Large K so per-call overhead does not dominate; best-of-5 damps noise.
    ratios = [_per_call(2 * K, 20) / _per_call(K, 20) for K in (2 ** 14, 2 ** 16)]
    assert min(ratios) <= 2.5, ratios
