"""Exponential growth of second moments under multiplicative Levy noise.

Run with ``python3 demos/04_intermittency.py`` (about ten seconds).
"""
# %%
import numpy as np

from levyheat import Coefficient, GridSpec, InitialCondition, LevyMeasure, LevyNoiseSpec
from levyheat.analysis import MCConfig, estimate_lyapunov

spec = LevyNoiseSpec.centered(LevyMeasure.atomic(((0.01, 5000.0), (-0.01, 5000.0))))
g = GridSpec(8, 0.01, 1.0, 2.0)
mc = MCConfig(paths=2000, workers=MCConfig.default_workers())

# %%
# Slopes of t -> log sup_x E|u|^p and log inf_x E|u|^p over [T/2, T].
for gamma in (0.5, 1.0):
    est = estimate_lyapunov(g, spec, Coefficient.linear(gamma), InitialCondition.constant(1.0),
                            2.0, mc)
    print(f"gamma={gamma}: lower {est.lower_slope:.3f} +- {est.lower_se:.3f}, "
          f"upper {est.upper_slope:.3f}; positive at 2 SE: {est.lower_positive}")

# %%
# The sup log-moment curve, sampled every half time unit.
print("log-moment curve (sup):", np.round(est.log_sup[::50], 3))
