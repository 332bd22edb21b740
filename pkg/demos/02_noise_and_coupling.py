"""Levy space-time noise on a grid: moments, truncation, and coarsening.

Run with ``python3 demos/02_noise_and_coupling.py``.
"""
# %%
import numpy as np

from levyheat import GridSpec, LevyMeasure, LevyNoiseSpec, coarsen, moment_m_lambda, sample, truncate

measure = LevyMeasure.atomic(((0.4, 30.0), (-1.5, 10.0), (3.0, 1.0)))
spec = LevyNoiseSpec.centered(measure)
g = GridSpec(100, 0.01, 1.0, 1.0)

# %%
# Cell increments of a centered noise have mean 0 and variance m_lambda(2) tau / n.
inc = np.concatenate([sample(g, spec, s, keep_jump_log=False).increments.ravel()
                      for s in range(100)])
print(f"mean {inc.mean():+.2e}  var {inc.var():.3e}  expected {moment_m_lambda(measure, 2) * g.tau / g.n:.3e}")

# %%
# Truncation drops large jumps from the same stream, so paths stay coupled.
full = sample(g, spec, 3)
cut = sample(g, truncate(spec, 1.2), 3)
print("jumps:", len(full.jump_log), "->", len(cut.jump_log))

# %%
# Coarsening sums blocks of cells; it is exactly what a coarse grid would see.
fine = sample(GridSpec(64, 0.001, 1.0, 0.064), spec, 11)
coarse = coarsen(fine, 4, 8)
print("coarse grid", coarse.grid.n, coarse.grid.tau,
      "mass conserved:", np.isclose(coarse.increments.sum(), fine.increments.sum()))
