"""
How coarse can the mesh be?
===========================

A mesh with K < n points smooths and speeds up the fit. For Heavy Sine a
64-point mesh at n = 512 is competitive with the full mesh; Doppler, whose
oscillations sharpen near zero, needs a finer one.
"""

from wavemesh.simbench import ratio_table, run_k_study, to_text

# %%
# Oracle-tuned MSE ratios against the full mesh, ``mean (100 x SE)``.
# 20 replicates keep this quick; the CLI runs the 100-replicate version.
results = []
for f, n in (("heavysine", 512), ("doppler", 512)):
    results += run_k_study(f, [n], [16, 32, 64], snr=5.0, replicates=20, seed=7)
print(to_text(ratio_table(results)))

# %%
# Median seconds per 50-point path.
for res in results:
    names = [m.name for m in res.methods]
    times = ", ".join(f"{k}: {t:.3f}" for k, t in zip(names, res.median_seconds))
    print(res.scenario.function, times)
