"""
Classification with a wavelet score
===================================

Labels follow the sign of a sine wave in x. The logistic fit learns a score
whose sign changes at the class boundaries.
"""

import numpy as np

from wavemesh import fit_univariate_logistic
from wavemesh.interp import InterpolationMatrix
from wavemesh.select import lambda_max_univariate

rng = np.random.default_rng(0)
x = rng.uniform(size=400)
p = 1 / (1 + np.exp(-6 * np.sin(3 * np.pi * x)))
y = np.where(rng.uniform(size=x.size) < p, 1.0, -1.0)

lam_max = lambda_max_univariate(y, InterpolationMatrix(x, 128), loss="logistic")
for frac in (0.5, 0.1, 0.02):
    m = fit_univariate_logistic(y, x, frac * lam_max, K=128)
    acc = np.mean(np.sign(m.fitted) == y)
    print(f"lambda={frac:4.2f} x lambda_max  accuracy={acc:.3f}  iterations={m.iterations}")

# %%
# Probabilities on a regular grid; the true boundaries are at 1/3 and 2/3.
t = np.linspace(0, 1, 13)
print(np.column_stack([t, m.predict_proba(t)]).round(2))
