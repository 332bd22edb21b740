"""Stepping the theta scheme and checking it against its convolution form.

Run with ``python3 demos/01_scheme_and_mild_form.py``.
"""
# %%
# A grid is (n, tau, theta, T).  Explicit schemes (theta < 1/2) need
# n^2 tau below a bound; the check explains which inequality failed.
import numpy as np

from levyheat import (
    Coefficient,
    GridSpec,
    InitialCondition,
    LevyMeasure,
    LevyNoiseSpec,
    amplification,
    mild_evaluate,
    run,
    sample,
    stability_check,
)

print(stability_check(10, 0.006, 0.0).message)
print(bool(stability_check(10, 0.006, 1.0)))

# %%
# Without noise a Fourier mode decays by a_l per step.
g = GridSpec(16, 0.002, 0.5, 0.1)
quiet = LevyNoiseSpec(0.0, LevyMeasure.zero(), deterministic=True)
sol = run(g, sample(g, quiet, 0), Coefficient.constant(0.0), InitialCondition.mode(1))
a1 = amplification(g).a[1]
print("decay matches a_1^m:", np.allclose(sol.values[-1], a1 ** g.m * sol.values[0]))

# %%
# With pure-jump noise and a multiplicative coefficient the stepped solution
# coincides with the mild (Green function) representation at every node.
spec = LevyNoiseSpec.centered(LevyMeasure.atomic(((0.3, 40.0), (-0.6, 20.0))))
g = GridSpec(8, 0.004, 1.0, 0.064)
noise = sample(g, spec, seed=7)
coeff = Coefficient.linear(1.0)
sol = run(g, noise, coeff, InitialCondition.constant(1.0))
dev = max(abs(mild_evaluate(g, noise, sol, i * g.tau, j / g.n, coeff) - sol.values[i, j])
          for i in range(1, g.m + 1) for j in range(g.n))
print(f"max |mild - stepped| = {dev:.2e}")
print("u(T, x_j) =", np.round(sol.values[-1], 4))
