"""
Denoising on an irregular design
================================

Heavy Sine observed at uniformly drawn points, fitted on the full mesh with
the penalty level chosen three ways: 5-fold cross-validation, the universal
threshold, and the oracle level that minimizes true MSE.
"""

import numpy as np

from wavemesh import InterpolationMatrix, auto_K, fit_path, fit_univariate
from wavemesh.select import cross_validate, lambda_grid, lambda_max_univariate, universal_threshold
from wavemesh.simbench import SimScenario, generate_univariate

# %%
# Draw one replicate at SNR 5.
sc = SimScenario("heavysine", n=300, snr=5.0, seed=1)
x, y, f0, sigma = generate_univariate(sc)
K = auto_K(x.size)
R = InterpolationMatrix(x, K)
print(f"n={x.size}  K={K}  sigma={sigma:.3f}")

# %%
# A 50-point grid from lambda_max down four decades.
grid = lambda_grid(lambda_max_univariate(y, R))
path = fit_path(y, x, grid, K=K)
mse = np.array([np.mean((f0 - m.fitted) ** 2) for m in path])
oracle = int(np.argmin(mse))

cv = cross_validate(x, y, grid, seed=0)
lam_u = universal_threshold(y, R)
uni = fit_univariate(y, x, lam_u, K=K)

print(f"oracle     lambda={grid[oracle]:.4f}  MSE={mse[oracle]:.4f}")
print(f"5-fold CV  lambda={cv.best_lambda:.4f}  MSE={mse[cv.best_index]:.4f}")
print(f"universal  lambda={lam_u:.4f}  MSE={np.mean((f0 - uni.fitted) ** 2):.4f}")

# %%
# The fit is a function on [0, 1]; evaluate it anywhere.
t = np.linspace(0, 1, 9)
print(np.round(path[cv.best_index].predict(t), 3))
