"""Time regularity in a negative Sobolev norm and coupled jump truncation.

Run with ``python3 demos/05_regularity_and_truncation.py``.
"""
# %%
import numpy as np

from levyheat import Coefficient, GridSpec, InitialCondition, LevyMeasure, LevyNoiseSpec
from levyheat.analysis import MCConfig, estimate_path_exponent, truncation_study

mc = MCConfig(paths=2000, workers=MCConfig.default_workers())
one = InitialCondition.constant(1.0)

# %%
# The product of oscillations on [t-h, t] and [t, t+h] scales like h^(1+delta):
# a jump can spoil one factor but not both.
tau = 1e-3
g = GridSpec(32, tau, 1.0, 48 * tau)
spec = LevyNoiseSpec.centered(LevyMeasure.atomic(((0.01, 5000.0), (-0.01, 5000.0))))
fit = estimate_path_exponent(g, spec, Coefficient.bounded(1.0), one, 32 * tau,
                             [2 * tau, 4 * tau, 8 * tau, 16 * tau], -0.6, mc)
print(f"oscillation exponent {fit.slope:.3f} +- {fit.half_width:.3f}")

# %%
# Dropping jumps above N from one stream: paths with no such jump are unchanged.
atoms = tuple((s * a, r) for a, r in ((0.5, 5.0), (5.0, 0.5), (50.0, 0.05)) for s in (1, -1))
heavy = LevyNoiseSpec.centered(LevyMeasure.atomic(atoms))
res = truncation_study(GridSpec(16, 0.01, 1.0, 0.5), heavy, [2.0, 10.0, 100.0],
                       Coefficient.bounded(1.0), one, 0.5, 0.5, mc)
for row in res.rows():
    print(row)
