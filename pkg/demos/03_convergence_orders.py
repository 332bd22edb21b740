"""Strong error of the scheme in space and time with coupled noise.

The error of level k is measured against the finest level of the ladder.  If
the true error behaves like C/n^(1/2) then, because u_n and u_ref share their
noise, E|u_n - u_ref|^2 is close to c (1/n - 1/n_ref) rather than c/n, which
steepens a log-log fit over a short ladder.  This script prints the raw fit
and the order q/2 from fitting E|u_k - u_ref|^2 = c (h_k^q - h_ref^q).

Run with ``python3 demos/03_convergence_orders.py`` (about a minute).
"""
# %%
import numpy as np

from levyheat import Coefficient, InitialCondition, LevyMeasure, LevyNoiseSpec
from scipy.optimize import curve_fit

from levyheat.analysis import MCConfig, convergence_study

spec = LevyNoiseSpec.centered(LevyMeasure.atomic(((0.01, 5000.0), (-0.01, 5000.0))))
mc = MCConfig(paths=1000, workers=MCConfig.default_workers())
coeff, u0 = Coefficient.linear(1.0), InitialCondition.constant(1.0)


def report(res, axis, scales, ref_scale):
    fit = res.fits[axis]
    print(f"{axis}: errors {np.round(res.errors, 4)}  slope {fit.slope:.3f} "
          f"CI ({fit.ci[0]:.3f}, {fit.ci[1]:.3f})")
    def model(h, log_c, q):
        return np.exp(log_c) * (h ** q - ref_scale ** q)

    (log_c, q), cov = curve_fit(model, scales, res.errors ** 2, p0=(0.0, 1.0),
                                sigma=res.errors ** 2)
    print(f"  reference-aware order {q / 2:.3f} +- {np.sqrt(cov[1, 1]) / 2:.3f}")

# %%
# Space: tau tiny and fixed, n = 8 .. 64 against 128.
ns = np.array([8, 16, 32, 64])
res = convergence_study(1.0, coeff, u0, spec, [(int(n), 1e-5) for n in ns] + [(128, 1e-5)],
                        0.01, mc=mc)
report(res, "space", 1.0 / ns, 1 / 128)

# %%
# Time: n = 64 fixed, tau0 .. tau0/8 against tau0/32.
taus = 0.04 / 2.0 ** np.arange(4)
res = convergence_study(1.0, coeff, u0, spec, [(64, t) for t in taus] + [(64, 0.04 / 32)],
                        0.32, mc=mc)
report(res, "time", taus, 0.04 / 32)
