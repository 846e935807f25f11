"""Wavelet regression on irregularly spaced designs through a mesh interpolation operator."""
from .errors import *  # noqa: F401,F403
from .wavelet import (DEFAULT_WAVELET, WAVELET_NAMES, CoefficientLayout, WaveletFilter,
                      build_w_matrix, dwt, get_wavelet, idwt)
from .interp import InterpolationMatrix, build_linear_interp, max_eigenvalue_rtr
from .penalty import PenaltySpec, make_penalty, penalty_value, prox_weighted_l1
from .solver import (FitConfig, FittedModel, UnivariateProblem, auto_K, fit_path,
                     fit_univariate, fit_univariate_logistic, kkt_violation, predict)
from .additive import (AdditiveModel, fit_additive, fit_sparse_additive, objective_additive,
                       predict_additive)
from .select import cross_validate, lambda_grid, lambda_max_univariate, universal_threshold

__version__ = "0.1.0"
