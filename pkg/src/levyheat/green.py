"""
Periodic heat kernel and the discrete Green functions of the theta scheme.

The exact kernel on the unit circle has two representations,

    G(t, x, y) = (4 pi t)^{-1/2} sum_m exp(-(x - y - m)^2 / 4t)          (images)
               = 1 + 2 sum_{m>=1} exp(-4 pi^2 m^2 t) cos(2 pi m (x - y))  (spectral)

and the fully discrete scheme is a convolution against

    G1(t, x, y) = sum_l a_l^[t/tau] e_l(k(x)) conj(e_l(k(y)))
    G2(t, x, y) = sum_l a_l^[t/tau] R1_l e_l(k(x)) conj(e_l(k(y)))

for ``t >= 0`` (zero otherwise), ``k`` snapping to the left grid node.

Integrals of squared kernel differences are evaluated mode by mode.  The
step function ``y -> conj(e_l(k(y)))`` has Fourier coefficient ``alpha_m``
at every frequency ``m = l (mod n)``, with
``alpha_m = exp(-i pi m/n) sinc(m/n)``, and ``G2`` is constant on every time
step, so the time integrals reduce to geometric series.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import DomainError, InvalidParameterError, PrecisionError
from .spectral import amplification, dft_forward, kappa_n, step_index

__all__ = [
    "GreenEvalConfig",
    "heat_green",
    "heat_green_image",
    "heat_green_spectral",
    "discrete_green_G1",
    "discrete_green_G2",
    "green_kernel_table",
    "step_alpha",
    "green_l2_error",
    "green_initial_error",
    "green_p_integral",
    "green_p_bound",
]

FOUR_PI2 = 4.0 * math.pi ** 2


@dataclass(frozen=True)
class GreenEvalConfig:
    tol: float = 1e-14
    t_switch: float = 1.0 / (4.0 * math.pi)
    K_max: int = 2_000_000
    M_max: int = 10_000

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")
        if not (self.t_switch > 0 and self.K_max >= 1 and self.M_max >= 1):
            raise InvalidParameterError("t_switch must be positive and caps >= 1")


DEFAULT_CFG = GreenEvalConfig()


def heat_green_image(t, d, cfg=DEFAULT_CFG):
    """Image sum of the periodic heat kernel at separation ``d = x - y``."""
    d = np.asarray(d, dtype=float)
    # terms with |d - m| >= w are below tol relative to the leading one
    w = math.sqrt(4.0 * t * math.log(1.0 / cfg.tol)) + 2.0
    reach = int(math.ceil(w))
    if reach > cfg.M_max:
        raise PrecisionError(f"image sum needs {reach} terms > M_max={cfg.M_max}")
    m = np.arange(-reach, reach + 1)
    z = d[..., None] - m
    return np.exp(-z * z / (4.0 * t)).sum(axis=-1) / math.sqrt(4.0 * math.pi * t)


def heat_green_spectral(t, d, cfg=DEFAULT_CFG):
    """Cosine series of the periodic heat kernel at separation ``d = x - y``."""
    d = np.asarray(d, dtype=float)
    # tail sum_{m>M} 2 e^{-4pi^2 m^2 t} < tol once e^{-4 pi^2 M^2 t} small enough
    M = int(math.ceil(math.sqrt(math.log(2.0 / cfg.tol) / (FOUR_PI2 * t)))) + 1
    if M > cfg.K_max:
        raise PrecisionError(f"spectral sum needs {M} terms > K_max={cfg.K_max}")
    m = np.arange(1, M + 1)
    terms = np.exp(-FOUR_PI2 * m * m * t) * np.cos(2.0 * math.pi * m * d[..., None])
    return 1.0 + 2.0 * terms[..., ::-1].sum(axis=-1)


def heat_green(t, x, y, cfg=DEFAULT_CFG):
    """Periodic heat kernel ``G(t, x, y)``; image sum below ``cfg.t_switch``."""
    if not t > 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if t < cfg.t_switch:
        return heat_green_image(t, d, cfg)
    return heat_green_spectral(t, d, cfg)


# ---------------------------------------------------------------------------
# discrete kernels

def _discrete(grid, t, x, y, extra_r1):
    sd = amplification(grid)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(t.shape, x.shape, y.shape)
    t, x, y = (np.broadcast_to(a, shape).ravel() for a in (t, x, y))
    out = np.zeros(t.size)
    live = t >= 0
    if live.any():
        steps = np.floor(t[live] / grid.tau + 1e-9)
        d = kappa_n(x[live], grid.n) - kappa_n(y[live], grid.n)
        l = np.arange(grid.n)
        coef = sd.a[None, :] ** steps[:, None]
        if extra_r1:
            coef = coef * sd.r1
        phase = np.exp(2j * math.pi * np.outer(d, l) / grid.n)
        out[live] = (coef * phase).sum(axis=1).real
    return out.reshape(shape) if shape else float(out[0])


def discrete_green_G1(grid, t, x, y):
    """``sum_l a_l^[t/tau] e_l(k(x)) conj e_l(k(y))`` for ``t >= 0``, else 0."""
    return _discrete(grid, t, x, y, extra_r1=False)


def discrete_green_G2(grid, t, x, y):
    """Like :func:`discrete_green_G1` with one extra implicit factor ``R1_l``."""
    return _discrete(grid, t, x, y, extra_r1=True)


def green_kernel_table(grid, steps, which=2):
    """``K[k, d] = G_which(k tau, d/n, 0)`` for ``k < steps`` via explicit mode sums."""
    sd = amplification(grid)
    n = grid.n
    l = np.arange(n)
    powers = sd.a[None, :] ** np.arange(steps)[:, None]
    if which == 2:
        powers = powers * sd.r1
    basis = np.exp(2j * math.pi * np.outer(l, l) / n)
    return (powers @ basis).real


def step_alpha(m, n):
    """Fourier coefficient factor of a grid step function at frequency ``m``."""
    m = np.asarray(m)
    u = m / n
    out = np.exp(-1j * math.pi * u) * np.sinc(u)
    return np.where(m % n == 0, np.where(m == 0, 1.0 + 0j, 0j), out)


# ---------------------------------------------------------------------------
# kernel error integrals

def green_l2_error(grid, x=0.0, cfg=DEFAULT_CFG):
    """``int_0^inf int_0^1 |G(t,x,y) - G2(t,x,y)|^2 dy dt`` evaluated semi-analytically.

    The ``y`` integral is exact mode by mode.  Because ``G2`` is constant on
    each step ``[k tau, (k+1) tau)``, the time integral of every term is a
    geometric series.  Frequencies beyond ``M`` (where ``exp(-4 pi^2 M^2 tau)``
    is negligible) are summed through the Hurwitz zeta function when ``x`` is
    a grid node and through an explicit sum with a tail bound otherwise.
    """
    sd = amplification(grid)
    n, tau = grid.n, grid.tau
    a, r1 = sd.a, sd.r1
    if np.any(np.abs(a[1:]) >= 1):
        raise InvalidParameterError("non-constant modes must contract (|a_l| < 1)")

    # int |G|^2 dy = sum_m e^{-8 pi^2 m^2 t}; the m != 0 part integrates to 2 * zeta(2) / (8 pi^2)
    g_part = 1.0 / 24.0
    # int |G2|^2 dy = sum_l (a_l^k R1_l)^2 on step k
    g2_part = float(np.sum(tau * r1[1:] ** 2 / (1.0 - a[1:] ** 2)))

    offset = x - kappa_n(x, n) / n
    on_grid = abs(offset) < 1e-12
    # explicit frequencies m = 1..M (the -m partner is the complex conjugate)
    M = int(math.ceil(math.sqrt(50.0 / (FOUR_PI2 * tau))))
    M = max(n, (M // n + 1) * n)
    if not on_grid:
        # |term_m| <= n max(R1) / (4 pi^3 m^3): tail below tol
        need = int(math.ceil(math.sqrt(n * r1.max() / (4 * math.pi ** 3 * cfg.tol))))
        M = max(M, (need // n + 1) * n)
    if M > cfg.K_max:
        raise PrecisionError(f"cross-term sum needs {M} frequencies > K_max={cfg.K_max}")
    m = np.arange(1, M + 1)
    l = m % n
    c = FOUR_PI2 * m * m
    decay = np.exp(-c * tau)
    time_factor = r1[l] * (-np.expm1(-c * tau)) / (c * (1.0 - a[l] * decay))
    phase = np.exp(2j * math.pi * m * offset)
    cross = 2.0 * np.real(step_alpha(m, n) * phase * time_factor)[::-1].sum()
    if on_grid:
        # tail m > M: term = R1_l Re(alpha_m) / c_m with Re alpha_m = n sin(2 pi m/n) / (2 pi m)
        ls = np.arange(1, n)
        weight = r1[ls] * n * np.sin(2 * math.pi * ls / n) / (2 * math.pi * FOUR_PI2)
        q = (M + ls) / n
        tail = weight * special.zeta(3.0, q) / n ** 3
        cross += 2.0 * tail.sum()
    return g_part - 2.0 * cross + g2_part


def _fourier_samples(u0, n):
    if callable(u0):
        return np.asarray(u0(np.arange(n) / n), dtype=float)
    if hasattr(u0, "sample"):
        return np.asarray(u0.sample(n), dtype=float)
    v = np.asarray(u0, dtype=float)
    if v.shape != (n,):
        raise InvalidParameterError(f"initial samples must have length {n}")
    return v


def green_initial_error(grid, u0, t, x=0.0, cfg=DEFAULT_CFG):
    """``|int_0^1 (G - G1)(t, x, y) u0(k(y)) dy|^2``.

    ``u0`` may be an :class:`~levyheat.scheme.InitialCondition`, a callable,
    or the vector of grid samples.
    """
    if t < grid.tau:
        raise DomainError(f"t={t} must be at least tau={grid.tau}")
    n = grid.n
    v = _fourier_samples(u0, n)
    vt = dft_forward(v)
    sd = amplification(grid)
    i = step_index(t, grid.tau)
    kx = kappa_n(x, n)
    l = np.arange(n)
    discrete = np.sum(sd.a ** i * np.exp(2j * math.pi * l * kx / n) * vt) / math.sqrt(n)
    M = int(math.ceil(math.sqrt(math.log(n / cfg.tol + 1.0) / (FOUR_PI2 * t)))) + n
    if M > cfg.K_max:
        raise PrecisionError(f"needs {M} frequencies > K_max={cfg.K_max}")
    m = np.arange(-M, M + 1)
    exact = np.sum(np.exp(-FOUR_PI2 * m * m * t) * np.exp(2j * math.pi * m * x)
                   * vt[m % n] * step_alpha(m, n)) / math.sqrt(n)
    return float(abs(exact - discrete) ** 2)


def green_p_integral(grid, p, beta, x=0.0, tol=1e-12, max_steps=10_000_000):
    """``int_0^inf int_0^1 |G2(s, x, y)|^p exp(-beta p s) dy ds``.

    ``G2(s, x, .)`` is a step function in ``y`` and constant on each time
    step, so the integral is an exact series over steps; it is cut once the
    remaining tail (bounded by the sup of ``|G2|``) drops below ``tol``.
    """
    if not 1.0 <= p < 3.0:
        raise DomainError(f"p={p} outside [1, 3)")
    if not beta > 0:
        raise DomainError("beta must be positive")
    sd = amplification(grid)
    n, tau = grid.n, grid.tau
    l = np.arange(n)
    kx = kappa_n(x, n)
    basis = np.exp(2j * math.pi * np.outer(l, kx - l) / n)   # [l, j] = e_l(x) conj e_l(x_j)
    w = math.exp(-beta * p * tau)
    step_mass = -math.expm1(-beta * p * tau) / (beta * p)
    total = 0.0
    coef = sd.r1.astype(float).copy()
    weight = step_mass
    for k in range(max_steps):
        g = (coef @ basis).real
        total += weight * np.mean(np.abs(g) ** p)
        weight *= w
        # remaining steps: |G2| <= sum_l |a_l|^k R1_l
        bound = float(np.sum(np.abs(coef)))
        if weight * bound ** p / (1.0 - w) < tol * max(total, 1e-300):
            return total
        coef = coef * sd.a
    raise PrecisionError("weighted integral did not converge within max_steps")


def green_p_bound(p, beta, C=1.0):
    """``C/(beta p) + C Gamma(q) (beta p)^{-q}`` with ``q = (3-p)/2`` or ``(2-p)/2``."""
    q = (3.0 - p) / 2.0 if p >= 2 else (2.0 - p) / 2.0
    bp = beta * p
    if q == 0:
        return C / bp
    return C / bp + C * special.gamma(q) * bp ** (-q)
