import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavemesh import errors
from wavemesh.interp import InterpolationMatrix
from wavemesh.select import (assign_folds, cross_validate, estimate_sigma, lambda_grid,
                             lambda_max_univariate, universal_threshold, univariate_path_fitter)
from wavemesh.penalty import make_penalty
from wavemesh.simbench import STUDY_CONFIG
from wavemesh.solver import fit_univariate
from wavemesh.wavelet import dwt


def regular(K):
    return np.arange(1, K + 1) / K


@given(st.floats(1e-6, 1e6), st.integers(2, 200), st.floats(1e-8, 0.5))
def test_grid_invariants(lam_max, count, floor):
    g = lambda_grid(lam_max, count, floor)
    v = np.asarray(g)
    assert len(g) == count
    assert (np.diff(v) < 0).all()
    assert v[0] == lam_max and v[-1] == floor * lam_max
    np.testing.assert_allclose(np.diff(np.log(v)), np.log(floor) / (count - 1), rtol=1e-9)


def test_grid_defaults_and_errors():
    g = lambda_grid(2.0)
    assert len(g) == 50 and g[-1] == pytest.approx(2e-4, rel=1e-15)
    for bad in (dict(lambda_max=0.0), dict(lambda_max=1.0, count=1),
                dict(lambda_max=1.0, floor_ratio=1.0)):
        with pytest.raises(errors.InvalidConfig):
            lambda_grid(**bad)


def test_lambda_max_spike_on_regular_design():
    K = 32
    y = np.zeros(K)
    y[11] = 5.0
    R = InterpolationMatrix(regular(K), K)
    assert lambda_max_univariate(y, R) == pytest.approx(np.abs(dwt(y)[1:]).max(), rel=1e-12)


def test_lambda_max_constant_response_raises():
    with pytest.raises(errors.ConstantResponse):
        lambda_max_univariate(np.full(10, 2.0), InterpolationMatrix(np.linspace(0, 1, 10), 8))


@pytest.mark.parametrize("penalty,j0", [("l1", 0), ("adaptive", 2), ("besov:1.5", 1)])
def test_fit_just_above_lambda_max_is_zero(rng, penalty, j0):
    x = rng.uniform(size=80)
    y = np.cos(5 * x) + 0.2 * rng.standard_normal(80)
    K = 64
    R = InterpolationMatrix(x, K)
    lam = lambda_max_univariate(y, R, spec=penalty, j0=j0)
    pen = make_penalty(penalty, K, j0).weights > 0
    m = fit_univariate(y, x, 1.01 * lam, K=K, j0=j0, penalty=penalty)
    assert (m.coeffs[pen] == 0).all()
    m = fit_univariate(y, x, 0.9 * lam, K=K, j0=j0, penalty=penalty)
    assert np.any(m.coeffs[pen] != 0)


def test_grid_endpoints_sparsity(rng):
    x = rng.uniform(size=100)
    y = np.sin(6 * x) + 0.3 * rng.standard_normal(100)
    K = 64
    g = lambda_grid(lambda_max_univariate(y, InterpolationMatrix(x, K)))
    top = fit_univariate(y, x, g[0], K=K)
    floor = fit_univariate(y, x, g[-1], K=K)
    assert (top.coeffs[1:] == 0).all()
    assert np.count_nonzero(floor.coeffs[1:]) > np.count_nonzero(top.coeffs[1:])


@given(st.integers(2, 300), st.integers(2, 10), st.integers(0, 2 ** 31))
def test_fold_sizes(n, folds, seed):
    if n < folds:
        return
    ids = assign_folds(n, folds, seed)
    sizes = np.bincount(ids, minlength=folds)
    assert sizes.size == folds and sizes.sum() == n
    assert sizes.max() - sizes.min() <= 1


def test_folds_seeded():
    np.testing.assert_array_equal(assign_folds(50, 5, 3), assign_folds(50, 5, 3))
    assert not np.array_equal(assign_folds(50, 5, 3), assign_folds(50, 5, 4))
    with pytest.raises(errors.TooFewObservations):
        assign_folds(3, 5)


def test_cv_reproducible(rng):
    x = rng.uniform(size=60)
    y = np.sin(2 * np.pi * x) + 0.3 * rng.standard_normal(60)
    g = lambda_grid(lambda_max_univariate(y, InterpolationMatrix(x, 64)), 12)
    a = cross_validate(x, y, g, seed=9)
    b = cross_validate(x, y, g, seed=9)
    np.testing.assert_array_equal(a.fold_errors, b.fold_errors)
    np.testing.assert_array_equal(a.fold_ids, b.fold_ids)
    assert a.best_lambda == b.best_lambda
    assert a.mean_error[a.best_index] == a.mean_error.min()


def test_leave_one_out_runs(rng):
    x = rng.uniform(size=8)
    y = rng.standard_normal(8)
    cv = cross_validate(x, y, [1.0, 0.1], folds=8)
    assert cv.fold_errors.shape == (8, 2)
    assert np.isfinite(cv.mean_error).all()


def test_duplicated_folds_agree(rng):
    # Two folds holding the same (x, y) pairs; each trains on the other copy.
    x = rng.uniform(size=20)
    y = np.cos(4 * x) + 0.1 * rng.standard_normal(20)
    xx, yy = np.concatenate([x, x]), np.concatenate([y, y])
    ids = np.repeat([0, 1], 20)
    cv = cross_validate(xx, yy, [0.5, 0.05], fitter=univariate_path_fitter(32), fold_ids=ids)
    np.testing.assert_allclose(cv.fold_errors[0], cv.fold_errors[1], atol=1e-10)


def test_pure_noise_picks_heavy_shrinkage():
    hits = 0
    for seed in range(20):
        r = np.random.default_rng([seed, 5])
        x = r.uniform(size=100)
        y = r.standard_normal(100)
        g = lambda_grid(lambda_max_univariate(y, InterpolationMatrix(x, 64)), 20)
        cv = cross_validate(x, y, g, univariate_path_fitter(64, config=STUDY_CONFIG), seed=seed)
        hits += cv.best_index < len(g) // 4
    assert hits >= 16, hits


def test_sigma_estimate_on_pure_noise():
    K = 256
    R = InterpolationMatrix(regular(K), K)
    for seed in range(50):
        y = np.random.default_rng(seed).standard_normal(K)
        assert 0.8 < estimate_sigma(y, R) < 1.2


def test_universal_threshold_scales_exactly(rng):
    x = rng.uniform(size=150)
    y = np.sin(3 * x) + rng.standard_normal(150)
    R = InterpolationMatrix(x, 128)
    t = universal_threshold(y, R)
    assert t == pytest.approx(estimate_sigma(y, R) * np.sqrt(2 * np.log(128)), rel=1e-15)
    for c in (0.5, 4.0):
        assert universal_threshold(c * y, R) == pytest.approx(c * t, rel=1e-12)


def test_universal_threshold_errors():
    R = InterpolationMatrix(regular(16), 16)
    with pytest.raises(errors.DegenerateScale):
        universal_threshold(np.ones(16), R)
    with pytest.raises(errors.InvalidConfig):
        universal_threshold(np.arange(2.0), InterpolationMatrix([0.5, 1.0], 2))
