"""
Grid bookkeeping and the eigenstructure of the periodic discrete Laplacian.

The discrete Laplacian on the periodic grid x_j = j/n is diagonalised by the
orthonormal Fourier vectors ``[f_l]_k = n**-0.5 * exp(2 pi i l k / n)`` with
eigenvalues ``lambda_l = -4 n^2 sin^2(l pi / n)``.  One step of the theta
scheme multiplies mode ``l`` by ``a_l = R1_l * R2_l`` where

    R1_l = 1 / (1 - theta tau lambda_l)     (implicit solve)
    R2_l = 1 + (1 - theta) tau lambda_l     (explicit part)
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidGridError, InvalidParameterError

__all__ = [
    "GridSpec",
    "SpectralData",
    "StabilityReport",
    "eigenvalues",
    "amplification",
    "stability_check",
    "default_r_bound",
    "dft_forward",
    "dft_inverse",
    "laplacian",
    "kappa_n",
    "step_index",
]

DEFAULT_EPSILON = 0.1
# relative slack when snapping t/tau and n*x to integers
_SNAP = 1e-9


def default_r_bound(theta):
    """Default constant for the explicit regime: 90% of ``1/(2-4 theta)``."""
    if theta >= 0.5:
        return math.inf
    return 0.9 / (2.0 - 4.0 * theta)


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    regime: str
    message: str = ""

    def __bool__(self):
        return self.ok


def stability_check(n, tau, theta, r_bound=None, epsilon=DEFAULT_EPSILON):
    """Check the (n, tau) coupling required for the theta scheme.

    Parameters
    ----------
    n : int
        Number of spatial cells.
    tau : float
        Time step.
    theta : float
        Scheme parameter in [0, 1].
    r_bound : float, optional
        Constant ``r`` of the explicit regime; defaults to
        :func:`default_r_bound`.
    epsilon : float
        Constant of the Crank-Nicolson regime, in (0, 1/2).

    Returns
    -------
    StabilityReport
        Truthy on pass; otherwise ``message`` names the failed inequality.
    """
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError(f"theta={theta} outside [0, 1]")
    cfl = n * n * tau
    if theta < 0.5:
        r = default_r_bound(theta) if r_bound is None else r_bound
        limit = 1.0 / (2.0 - 4.0 * theta)
        if not r < limit:
            return StabilityReport(
                False, "explicit",
                f"r_bound < 1/(2-4*theta) violated: r_bound={r:.6g}, 1/(2-4*theta)={limit:.6g}")
        if not cfl <= r:
            return StabilityReport(
                False, "explicit",
                f"n^2*tau <= r_bound violated: n^2*tau={cfl:.6g}, r_bound={r:.6g} "
                f"(theta={theta} < 1/2)")
        return StabilityReport(True, "explicit")
    if theta == 0.5:
        if not 0.0 < epsilon < 0.5:
            return StabilityReport(
                False, "crank-nicolson", f"epsilon in (0, 1/2) violated: epsilon={epsilon}")
        bound = 1.0 / epsilon - 0.5
        if not cfl <= bound:
            return StabilityReport(
                False, "crank-nicolson",
                f"n^2*tau <= 1/epsilon - 1/2 violated: n^2*tau={cfl:.6g}, bound={bound:.6g}")
        return StabilityReport(True, "crank-nicolson")
    return StabilityReport(True, "implicit")


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid on [0, T] x [0, 1) with periodic wrap.

    ``r_bound`` and ``epsilon`` are the free constants of the stability
    regime; they only matter for ``theta <= 1/2``.
    """

    n: int
    tau: float
    theta: float
    T: float
    r_bound: float = None
    epsilon: float = DEFAULT_EPSILON
    m: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise InvalidGridError(f"n must be an integer >= 3, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not 0.0 < self.tau < 0.5:
            raise InvalidGridError(f"tau must lie in (0, 1/2), got {self.tau}")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidGridError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.T > 0:
            raise InvalidGridError(f"T must be positive, got {self.T}")
        steps = round(self.T / self.tau)
        if steps < 1 or abs(steps * self.tau - self.T) > 1e-9 * self.tau:
            raise InvalidGridError(f"T={self.T} is not an integer multiple of tau={self.tau}")
        object.__setattr__(self, "m", int(steps))
        report = stability_check(self.n, self.tau, self.theta, self.r_bound, self.epsilon)
        if not report:
            raise InvalidGridError(report.message)

    @property
    def times(self):
        return self.tau * np.arange(self.m + 1)

    @property
    def nodes(self):
        return np.arange(self.n) / self.n

    def to_dict(self):
        d = {"n": self.n, "tau": self.tau, "theta": self.theta, "T": self.T}
        if self.r_bound is not None:
            d["r_bound"] = self.r_bound
        if self.epsilon != DEFAULT_EPSILON:
            d["epsilon"] = self.epsilon
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def replace(self, **changes):
        d = self.to_dict()
        d.update(changes)
        return GridSpec(**d)


def kappa_n(x, n):
    """Integer cell index ``[n x]`` of the point(s) ``x``, wrapped periodically."""
    return np.floor(np.asarray(x, dtype=float) * n + _SNAP).astype(np.int64) % n


def step_index(t, tau):
    """``[t / tau]`` with a relative snap so that ``i * tau`` maps to ``i``."""
    return int(math.floor(t / tau + _SNAP))


def eigenvalues(n):
    """Eigenvalues ``-4 n^2 sin^2(l pi / n)`` of the periodic discrete Laplacian.

    The symmetric pair ``l`` and ``n - l`` is evaluated at the same argument so
    ``lambda[n - l] == lambda[l]`` holds bitwise.
    """
    if int(n) != n or n < 3:
        raise InvalidGridError(f"n must be an integer >= 3, got {n}")
    n = int(n)
    l = np.arange(n)
    folded = np.minimum(l, n - l)
    lam = -4.0 * n * n * np.sin(folded * np.pi / n) ** 2
    lam[0] = 0.0
    return lam


@dataclass(frozen=True)
class SpectralData:
    lam: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    @property
    def a(self):
        return self.r1 * self.r2

    @property
    def r3(self):
        """``1/a_l - 1``; infinite where ``a_l`` vanishes."""
        with np.errstate(divide="ignore"):
            return 1.0 / self.a - 1.0

    @property
    def n(self):
        return self.lam.size


def amplification(grid):
    """Per-mode factors ``R1``, ``R2`` and ``a = R1 R2`` of one theta step."""
    lam = eigenvalues(grid.n)
    r1 = 1.0 / (1.0 - grid.theta * grid.tau * lam)
    r2 = 1.0 + (1.0 - grid.theta) * grid.tau * lam
    for arr in (lam, r1, r2):
        arr.flags.writeable = False
    return SpectralData(lam, r1, r2)


def dft_forward(v):
    """Unitary DFT ``v~_j = n**-0.5 sum_r v_r exp(-2 pi i j r / n)`` along the last axis."""
    return np.fft.fft(np.asarray(v), axis=-1, norm="ortho")


def dft_inverse(c):
    return np.fft.ifft(np.asarray(c), axis=-1, norm="ortho")


def laplacian(u, n=None):
    """Periodic second difference ``n^2 (u_{j+1} - 2 u_j + u_{j-1})`` along the last axis."""
    u = np.asarray(u)
    n = u.shape[-1] if n is None else n
    return n * n * (np.roll(u, -1, axis=-1) - 2.0 * u + np.roll(u, 1, axis=-1))
