import numpy as np
import pytest
from hypothesis import given, strategies as st

from levyheat.analysis import bootstrap_counts, fit_power_law
from levyheat.errors import FitError


@given(s=st.floats(-3, 3), c=st.floats(0.01, 100))
def test_exact_power_law(s, c):
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = fit_power_law(list(zip(h, c * h ** s)))
    assert abs(fit.slope - s) <= 1e-10
    assert fit.intercept == pytest.approx(np.log(c), abs=1e-9)


def test_constant_error_gives_zero_slope():
    fit = fit_power_law([(1, 2.0), (2, 2.0), (4, 2.0)])
    assert abs(fit.slope) < 1e-14


def test_fit_rejects_bad_input():
    with pytest.raises(FitError):
        fit_power_law([(1, 1.0), (2, 2.0)])
    with pytest.raises(FitError):
        fit_power_law([(1, 1.0), (2, 0.0), (3, 1.0)])
    with pytest.raises(FitError):
        fit_power_law([(1, 1.0), (-2, 1.0), (3, 1.0)])
    with pytest.raises(FitError):
        fit_power_law([(1, 1.0), (3, 1.0), (2, 1.0)])


def test_synthetic_ci_coverage():
    h = 1 / np.array([8, 16, 32, 64, 128, 256])
    rng = np.random.default_rng(7)
    covered = 0
    for k in range(100):
        err = h ** 0.5 * np.exp(rng.normal(0, 0.01, size=h.size))
        fit = fit_power_law(list(zip(h, err)), seed=k)
        covered += fit.ci[0] <= 0.5 <= fit.ci[1]
    assert covered >= 90


def test_replicate_interval():
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    rng = np.random.default_rng(0)
    reps = h ** 0.25 * np.exp(rng.normal(0, 0.02, size=(500, 4)))
    fit = fit_power_law(list(zip(h, h ** 0.25)), replicates=reps)
    assert fit.slope == pytest.approx(0.25)
    assert fit.ci[0] < 0.25 < fit.ci[1]
    assert fit.se == pytest.approx(np.std(np.polyfit(np.log(h), np.log(reps.T), 1)[0], ddof=1))


def test_bootstrap_counts():
    c = bootstrap_counts(50, 20, seed=1)
    assert c.shape == (20, 50) and np.all(c.sum(axis=1) == 50)
    assert np.array_equal(c, bootstrap_counts(50, 20, seed=1))
