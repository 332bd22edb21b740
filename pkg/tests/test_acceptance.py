"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single ``CRITERION k ... PASS/FAIL`` line (visible with or
without ``-s``).  Monte Carlo criteria use 2000 coupled paths and fixed seeds.
"""
import math
import os
import time

import numpy as np
import pytest
from scipy import integrate

from levyheat.analysis import (
    MCConfig,
    convergence_study,
    estimate_lyapunov,
    estimate_path_exponent,
    fit_power_law,
    truncation_study,
)
from levyheat.green import (
    discrete_green_G1,
    green_l2_error,
    heat_green,
    heat_green_image,
    heat_green_spectral,
)
from levyheat.noise import LevyMeasure, LevyNoiseSpec, moment_m_lambda, sample
from levyheat.scheme import Coefficient, InitialCondition, mild_evaluate, run
from levyheat.spectral import GridSpec, eigenvalues, laplacian

WORKERS = os.cpu_count() or 1
ONE = InitialCondition.constant(1.0)


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} "
                  f"({time.perf_counter() - start:.1f}s) {detail}")
    return emit


def mc(paths=2000, seed=0):
    return MCConfig(paths=paths, base_seed=seed, workers=WORKERS)


def symmetric(size, rate):
    return LevyNoiseSpec.centered(LevyMeasure.atomic(((size, rate), (-size, rate))))


# 1 -----------------------------------------------------------------------

def test_criterion_1_mild_form_equivalence(report):
    rng = np.random.default_rng(20261016)
    worst = 0.0
    for _ in range(50):
        n = int(rng.choice([4, 8, 16]))
        m = int(rng.choice([8, 16, 32]))
        theta = float(rng.choice([0.0, 0.5, 1.0]))
        tau = rng.uniform(0.05, 0.4) / n ** 2
        g = GridSpec(n, tau, theta, m * tau)
        k = int(rng.integers(1, 4))
        atoms = tuple(zip(rng.uniform(-2.0, 2.0, k), rng.uniform(1.0, 50.0, k)))
        spec = LevyNoiseSpec(float(rng.normal()), LevyMeasure.atomic(atoms))
        coeff = Coefficient.affine_clip(float(rng.uniform(0.1, 1.5)), float(rng.normal()),
                                        -5.0, 5.0)
        u0 = InitialCondition.fourier(((1, float(rng.normal()), float(rng.normal())),),
                                      float(rng.normal()))
        noise = sample(g, spec, int(rng.integers(2 ** 32)))
        sol = run(g, noise, coeff, u0)
        for i in range(1, m + 1):
            for j in range(n):
                v = mild_evaluate(g, noise, sol, i * tau, j / n, coeff)
                ref = sol.values[i, j]
                worst = max(worst, abs(v - ref) / max(abs(ref), 1e-300))
    # relative agreement; the guard only matters for exact zeros
    ok = worst <= 1e-9
    report(1, ok, f"max relative deviation {worst:.2e} (tol 1e-9)")
    assert ok


# 2 -----------------------------------------------------------------------

def test_criterion_2_spectral_green_identities(report):
    eig_err = 0.0
    for n in (4, 8, 16, 64):
        lam = eigenvalues(n)
        j = np.arange(n)
        for l in range(n):
            # reduce l*j mod n first so the mode itself carries no phase error
            f = np.exp(2j * np.pi * ((l * j) % n) / n)
            eig_err = max(eig_err, np.max(np.abs(laplacian(f.real, n) - lam[l] * f.real)),
                          np.max(np.abs(laplacian(f.imag, n) - lam[l] * f.imag)))
    mass_err = 0.0
    for t in (1e-3, 0.05, 0.5, 2.0):
        for x in (0.0, 0.37):
            val, _ = integrate.quad(lambda y: float(heat_green(t, x, y)), 0, 1, points=[x],
                                    epsabs=1e-12, limit=200)
            mass_err = max(mass_err, abs(val - 1))
    for theta in (0.0, 0.5, 1.0):
        n = 16
        tau = 0.4 / n ** 2
        g = GridSpec(n, tau, theta, tau)
        nodes = np.arange(n) / n
        for t in (0.0, tau, 10 * tau, 200 * tau):
            mass_err = max(mass_err, abs(np.mean(discrete_green_G1(g, t, 0.3, nodes)) - 1))
    dual_err = 0.0
    for t in np.geomspace(1e-3, 5, 25):
        ds = np.linspace(0, 1, 41)
        a, b = heat_green_image(t, ds), heat_green_spectral(t, ds)
        dual_err = max(dual_err, np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))
    ok = eig_err <= 1e-10 and mass_err <= 1e-8 and dual_err <= 1e-12
    report(2, ok, f"eigen {eig_err:.1e} (1e-10), mass {mass_err:.1e} (1e-8), "
                  f"duality {dual_err:.1e} (1e-12)")
    assert ok


# 3 -----------------------------------------------------------------------

def test_criterion_3_green_error_scaling(report):
    # space: n^2 tau = 0.1 keeps the tau-term (~ sqrt(tau) = 0.3/n) below the 1/n term
    ns = np.array([8, 16, 32, 64])
    e_space = [green_l2_error(GridSpec(int(n), 0.1 / n ** 2, 1.0, 0.1 / n ** 2)) for n in ns]
    space = fit_power_law(list(zip(1.0 / ns, e_space)))
    # time: n = 2048 makes the 1/n term negligible against sqrt(tau) >= 0.0125
    taus = 1e-2 / 2.0 ** np.arange(7)
    e_time = [green_l2_error(GridSpec(2048, float(t), 1.0, float(t))) for t in taus]
    tfit = fit_power_law(list(zip(np.sqrt(taus), e_time)))
    ok = 0.8 <= space.slope <= 1.2 and 0.8 <= tfit.slope <= 1.2
    report(3, ok, f"slope vs 1/n {space.slope:.3f}, slope vs sqrt(tau) {tfit.slope:.3f} "
                  "(band [0.8, 1.2])")
    assert ok


# 4 -----------------------------------------------------------------------

def test_criterion_4_space_order(report):
    tau, T = 1e-5, 0.01
    ladder = [(n, tau) for n in (8, 16, 32, 64, 128)]
    res = convergence_study(1.0, Coefficient.linear(1.0), ONE, symmetric(0.003, 50000.0),
                            ladder, T, mc=mc())
    fit = res.fits["space"]
    ok = 0.4 <= fit.slope <= 0.6
    report(4, ok, f"space slope {fit.slope:.3f} CI ({fit.ci[0]:.3f}, {fit.ci[1]:.3f}) "
                  f"errors {np.round(res.errors, 4).tolist()} (band [0.4, 0.6])")
    assert ok


# 5 -----------------------------------------------------------------------

def test_criterion_5_time_order(report):
    tau0, T = 0.04, 0.32
    ladder = [(64, tau0 / 2 ** k) for k in (0, 1, 2, 3)] + [(64, tau0 / 32)]
    res = convergence_study(1.0, Coefficient.linear(1.0), ONE, symmetric(0.01, 5000.0),
                            ladder, T, mc=mc())
    fit = res.fits["time"]
    ok = 0.15 <= fit.slope <= 0.35
    report(5, ok, f"time slope {fit.slope:.3f} CI ({fit.ci[0]:.3f}, {fit.ci[1]:.3f}) "
                  f"errors {np.round(res.errors, 4).tolist()} (band [0.15, 0.35])")
    assert ok


# 6 -----------------------------------------------------------------------

def test_criterion_6_weak_intermittency(report):
    g = GridSpec(8, 0.01, 1.0, 2.0)
    est = estimate_lyapunov(g, symmetric(0.01, 5000.0), Coefficient.linear(1.0), ONE, 2.0, mc())
    ok = est.lower_positive and est.upper_bounded
    report(6, ok, f"lower slope {est.lower_slope:.3f} (SE {est.lower_se:.3f}), "
                  f"upper slope {est.upper_slope:.3f}, lower>2SE {est.lower_positive}, "
                  f"bounded by fit+3SE {est.upper_bounded}")
    assert ok


# 7 -----------------------------------------------------------------------

def test_criterion_7_path_regularity(report):
    tau = 1e-3
    g = GridSpec(32, tau, 1.0, 48 * tau)
    fit = estimate_path_exponent(g, symmetric(0.01, 5000.0), Coefficient.bounded(1.0), ONE,
                                 32 * tau, [2 * tau, 4 * tau, 8 * tau, 16 * tau], -0.6, mc())
    ok = fit.slope >= 1.0 - fit.half_width
    report(7, ok, f"slope {fit.slope:.3f}, CI half-width {fit.half_width:.3f} "
                  f"(need >= {1.0 - fit.half_width:.3f})")
    assert ok


# 8 -----------------------------------------------------------------------

def test_criterion_8_truncation_coupling(report):
    atoms = tuple((s * a, r) for a, r in ((0.5, 5.0), (5.0, 0.5), (50.0, 0.05)) for s in (1, -1))
    spec = LevyNoiseSpec.centered(LevyMeasure.atomic(atoms))
    g = GridSpec(16, 0.01, 1.0, 0.5)
    res = truncation_study(g, spec, [2.0, 10.0, 100.0], Coefficient.bounded(1.0), ONE,
                           0.5, 0.5, mc())
    ok = res.exact_on_small_jump_paths() and res.exact_fraction_monotone()
    report(8, ok, f"exact fractions {np.round(res.exact_fraction, 4).tolist()}, "
                  f"mean discrepancy {np.round(res.mean_discrepancy, 4).tolist()}")
    assert ok


# 9 -----------------------------------------------------------------------

def _within_3se(inc, mean, var):
    n = inc.size
    c = inc - inc.mean()
    mean_se = inc.std() / math.sqrt(n)
    var_se = math.sqrt((np.mean(c ** 4) - np.mean(c ** 2) ** 2) / n)
    return (abs(inc.mean() - mean) <= 3 * mean_se and abs(inc.var() - var) <= 3 * var_se,
            (inc.mean() - mean) / mean_se, (inc.var() - var) / var_se)


def test_criterion_9_noise_statistics(report):
    g = GridSpec(100, 0.01, 1.0, 1.0)          # 10^4 cells per seed, 100 seeds
    area = g.tau / g.n
    measure = LevyMeasure.atomic(((0.4, 30.0), (-1.5, 10.0), (3.0, 1.0)))
    cases = {
        # centered: mean 0
        "centered": (LevyNoiseSpec.centered(measure), 0.0),
        # compensated small jumps, raw drift b: mean (b + large-jump mean) * area
        "compensated": (LevyNoiseSpec(0.7, measure), (0.7 - 15.0 + 3.0) * area),
    }
    lines, ok = [], True
    for name, (spec, mean) in cases.items():
        inc = np.concatenate([sample(g, spec, s, keep_jump_log=False).increments.ravel()
                              for s in range(100)])
        assert inc.size == 10 ** 6
        good, zm, zv = _within_3se(inc, mean, moment_m_lambda(measure, 2) * area)
        ok &= good
        lines.append(f"{name}: mean z={zm:+.2f}, var z={zv:+.2f}")
    report(9, ok, "; ".join(lines) + " (|z| <= 3)")
    assert ok
