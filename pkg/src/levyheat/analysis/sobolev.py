"""Negative-order Sobolev norms of grid functions and the oscillation statistic."""

import math

import numpy as np

from ..errors import DomainError
from ..green import step_alpha
from ..spectral import dft_forward, eigenvalues, step_index

__all__ = ["discrete_sobolev_norm", "step_function_sobolev_norm", "oscillation_product"]


def discrete_sobolev_norm(v, r, spectral=None):
    """``(sum_j (1 - lambda_j)^r |v~_j|^2 / n)^{1/2}`` along the last axis of ``v``.

    ``spectral`` may carry precomputed eigenvalues (anything with ``lam``).
    """
    if r > 0:
        raise DomainError(f"order r={r} must be <= 0")
    v = np.asarray(v)
    n = v.shape[-1]
    lam = eigenvalues(n) if spectral is None else spectral.lam
    weight = (1.0 - lam) ** r
    vt = dft_forward(v)
    return np.sqrt(np.sum(weight * np.abs(vt) ** 2, axis=-1) / n)


def step_function_sobolev_norm(v, r, modes=200):
    """``H^r`` norm of ``y -> v(k(y))`` from its Fourier series truncated at ``|j| <= modes``."""
    v = np.asarray(v)
    n = v.shape[-1]
    j = np.arange(-modes, modes + 1)
    vt = dft_forward(v)
    coef = vt[..., j % n] * step_alpha(j, n) / math.sqrt(n)
    return np.sqrt(np.sum((1.0 + 4.0 * math.pi ** 2 * j * j) ** r * np.abs(coef) ** 2, axis=-1))


def _osc_rows(plus, mid, minus, r, spectral=None):
    a = discrete_sobolev_norm(plus - mid, r, spectral)
    b = discrete_sobolev_norm(mid - minus, r, spectral)
    return (a * b) ** 2


def oscillation_product(sol, t, h, r):
    """``[osc_r(u(t+h), u(t)) * osc_r(u(t), u(t-h))]^2`` on the piecewise-constant solution."""
    T = sol.grid.T
    if not 0 < h < min(t, 1.0):
        raise DomainError(f"h={h} must lie in (0, min(t, 1))")
    if t + h > T * (1 + 1e-12):
        raise DomainError(f"t + h = {t + h} exceeds T={T}")
    if not r < -0.5:
        raise DomainError(f"order r={r} must be < -1/2")
    tau = sol.grid.tau
    rows = [sol.values[min(step_index(s, tau), sol.grid.m)] for s in (t + h, t, t - h)]
    return float(_osc_rows(*rows, r))
