"""
Fully discrete theta scheme for the stochastic heat equation on the circle.

One step reads

    (I - theta tau D) u_{i+1} = u_i + (1 - theta) tau D u_i + n sigma(u_i) * dL_i

with ``D`` the periodic second difference and ``dL_i`` the row of cell
increments.  The implicit solve is a division by ``1 - theta tau lambda_l`` in
Fourier space.  :func:`mild_evaluate` recomputes any node from the discrete
Green functions and serves as an oracle for the stepper.
"""

from dataclasses import dataclass, field
import hashlib
import io
import json
import math

import numpy as np

from .errors import ConfigurationError, DivergenceError, DomainError, InvalidParameterError
from .green import green_kernel_table
from .spectral import GridSpec, amplification, kappa_n, laplacian, step_index

__all__ = [
    "Coefficient",
    "InitialCondition",
    "SolutionField",
    "solve_implicit",
    "step",
    "run",
    "evolve",
    "mild_evaluate",
]

FAMILIES = ("linear", "bounded", "constant", "affine_clip")


@dataclass(frozen=True)
class Coefficient:
    """Globally Lipschitz diffusion coefficient from a closed set of families.

    linear: ``gamma * u``; bounded: ``beta * sin(u)``; constant: ``beta``;
    affine_clip: ``clip(gamma * u + beta, lo, hi)``.
    """

    family: str
    gamma: float = 0.0
    beta: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown coefficient family {self.family!r}")
        if self.family == "affine_clip" and not self.lo <= self.hi:
            raise InvalidParameterError("affine_clip needs lo <= hi")

    @classmethod
    def linear(cls, gamma):
        return cls("linear", gamma=gamma)

    @classmethod
    def bounded(cls, beta):
        return cls("bounded", beta=beta)

    @classmethod
    def constant(cls, beta):
        return cls("constant", beta=beta)

    @classmethod
    def affine_clip(cls, gamma, beta=0.0, lo=-math.inf, hi=math.inf):
        return cls("affine_clip", gamma=gamma, beta=beta, lo=lo, hi=hi)

    def __call__(self, u):
        f = self.family
        if f == "linear":
            return self.gamma * u
        if f == "bounded":
            return self.beta * np.sin(u)
        if f == "constant":
            return np.full_like(np.asarray(u, dtype=float), self.beta)
        return np.clip(self.gamma * u + self.beta, self.lo, self.hi)

    @property
    def lipschitz(self):
        f = self.family
        if f == "linear" or f == "affine_clip":
            if f == "affine_clip" and self.lo == self.hi:
                return 0.0
            return abs(self.gamma)
        if f == "bounded":
            return abs(self.beta)
        return 0.0

    @property
    def j0(self):
        """``inf_{x != 0} |sigma(x) / x|``."""
        if self.family == "linear":
            return abs(self.gamma)
        if self.family == "affine_clip":
            unclipped = math.isinf(self.lo) and math.isinf(self.hi)
            return abs(self.gamma) if unclipped and self.beta == 0 else 0.0
        # sin vanishes at pi; a constant over x tends to 0
        return 0.0

    @property
    def is_bounded(self):
        if self.family in ("bounded", "constant"):
            return True
        if self.family == "affine_clip":
            return math.isfinite(self.lo) and math.isfinite(self.hi) or self.gamma == 0
        return self.gamma == 0

    @property
    def is_zero(self):
        f = self.family
        if f in ("bounded", "constant"):
            return self.beta == 0
        if f == "linear":
            return self.gamma == 0
        return self.gamma == 0 and min(max(self.beta, self.lo), self.hi) == 0

    def to_dict(self):
        d = {"family": self.family}
        for name in ("gamma", "beta"):
            if getattr(self, name):
                d[name] = getattr(self, name)
        for name in ("lo", "hi"):
            if math.isfinite(getattr(self, name)):
                d[name] = getattr(self, name)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


IC_KINDS = ("constant", "mode", "fourier", "samples")


@dataclass(frozen=True)
class InitialCondition:
    """Deterministic initial datum.

    constant: ``value``; mode: ``amplitude * cos(2 pi l x + phase)``;
    fourier: ``value + sum_k cos_k cos(2 pi k x) + sin_k sin(2 pi k x)`` with
    ``coeffs = ((k, cos_k, sin_k), ...)``; samples: explicit grid values.
    """

    kind: str
    value: float = 0.0
    l: int = 0
    amplitude: float = 1.0
    phase: float = 0.0
    coeffs: tuple = ()
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise InvalidParameterError(f"unknown initial condition kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(tuple(c) for c in self.coeffs))
        object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))

    @classmethod
    def constant(cls, value):
        return cls("constant", value=value)

    @classmethod
    def mode(cls, l, amplitude=1.0, phase=0.0):
        return cls("mode", l=l, amplitude=amplitude, phase=phase)

    @classmethod
    def fourier(cls, coeffs, value=0.0):
        return cls("fourier", value=value, coeffs=coeffs)

    @classmethod
    def from_samples(cls, samples):
        return cls("samples", samples=tuple(samples))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "mode":
            return self.amplitude * np.cos(2 * math.pi * self.l * x + self.phase)
        if self.kind == "fourier":
            out = np.full_like(x, self.value)
            for k, c, s in self.coeffs:
                out = out + c * np.cos(2 * math.pi * k * x) + s * np.sin(2 * math.pi * k * x)
            return out
        v = np.asarray(self.samples)
        return v[kappa_n(x, v.size)]

    def sample(self, n):
        if self.kind == "samples":
            if len(self.samples) != n:
                raise ConfigurationError(f"{len(self.samples)} samples given for n={n}")
            return np.array(self.samples)
        return self(np.arange(n) / n)

    @property
    def ident(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind in ("constant", "fourier"):
            d["value"] = self.value
        if self.kind == "mode":
            d.update(l=self.l, amplitude=self.amplitude, phase=self.phase)
        if self.kind == "fourier":
            d["coeffs"] = [list(c) for c in self.coeffs]
        if self.kind == "samples":
            d["samples"] = list(self.samples)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SolutionField:
    """Values ``u(t_i, x_j)`` on the grid, one row per time level."""

    grid: GridSpec
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def at(self, t):
        """Row in force at time ``t`` (piecewise constant, right-continuous)."""
        if not 0 <= t <= self.grid.T * (1 + 1e-12):
            raise DomainError(f"t={t} outside [0, T]")
        return self.values[min(step_index(t, self.grid.tau), self.grid.m)]

    def to_text(self):
        header = {"format": "levyheat.solution/1", "grid": self.grid.to_dict(),
                  "provenance": self.provenance}
        buf = io.StringIO()
        buf.write(json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(buf, self.values, fmt="%.17g", delimiter=",")
        return buf.getvalue()

    def content_hash(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text):
        head, _, body = text.partition("\n")
        header = json.loads(head)
        values = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
        return cls(GridSpec.from_dict(header["grid"]), values, header["provenance"])

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def _r1_half(grid):
    sd = amplification(grid)
    return sd.r1[: grid.n // 2 + 1]


def solve_implicit(rhs, grid):
    """Solve ``(I - theta tau D) w = rhs`` with periodic wrap (last axis)."""
    rhs = np.asarray(rhs, dtype=float)
    if grid.theta == 0:
        return rhs.copy()
    return np.fft.irfft(np.fft.rfft(rhs, axis=-1) * _r1_half(grid), n=grid.n, axis=-1)


def _advance(u, row, grid, coeff, r1_half):
    # non-finite values are reported by the callers as DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        rhs = u + (1.0 - grid.theta) * grid.tau * laplacian(u, grid.n) + grid.n * coeff(u) * row
        if r1_half is None:
            return rhs
        return np.fft.irfft(np.fft.rfft(rhs, axis=-1) * r1_half, n=grid.n, axis=-1)


def step(u, noise_row, grid, coeff, index=0):
    """One theta step; ``index`` only labels a :class:`DivergenceError`."""
    out = _advance(np.asarray(u, dtype=float), np.asarray(noise_row, dtype=float), grid,
                   coeff, None if grid.theta == 0 else _r1_half(grid))
    if not np.all(np.isfinite(out)):
        raise DivergenceError(index + 1)
    return out


def evolve(u0, rows, grid, coeff, record=None, check_every=16):
    """Advance a batch ``u0`` of shape ``(..., n)`` through an iterable of noise rows.

    Parameters
    ----------
    record : callable, optional
        ``record(i, u)`` is invoked for ``i = 0..m`` with the current state.

    Returns
    -------
    ndarray
        The state after the last row.
    """
    u = np.array(u0, dtype=float)
    r1_half = None if grid.theta == 0 else _r1_half(grid)
    if record is not None:
        record(0, u)
    i = 0
    for i, row in enumerate(rows, start=1):
        u = _advance(u, row, grid, coeff, r1_half)
        if i % check_every == 0 and not np.all(np.isfinite(u)):
            raise DivergenceError(i)
        if record is not None:
            record(i, u)
    if not np.all(np.isfinite(u)):
        raise DivergenceError(i)
    return u


def run(grid, noise, coeff, u0):
    """Iterate :func:`step` over every row of ``noise``."""
    if noise.grid.n != grid.n or noise.grid.m != grid.m or noise.grid.tau != grid.tau:
        raise ConfigurationError("noise field does not match the grid")
    values = np.empty((grid.m + 1, grid.n))
    values[0] = u0.sample(grid.n) if hasattr(u0, "sample") else np.asarray(u0, dtype=float)

    def keep(i, u):
        values[i] = u

    evolve(values[0], iter(noise.increments), grid, coeff, record=keep, check_every=1)
    prov = {"seed": noise.seed, "coefficient": coeff.to_dict(),
            "initial": getattr(u0, "ident", None)}
    return SolutionField(grid, values, prov)


def mild_evaluate(grid, noise, solution, t, x, coeff=None):
    """Mild-form value at time ``t = i tau`` and point ``x``.

    Sum of ``int G1(t, x, y) u0(k(y)) dy`` and
    ``sum_{k<i} sum_j G2(t - t_{k+1}, x, x_j) sigma(u(t_k, x_j)) dL(t_k, x_j)``,
    with every kernel value built from explicit mode sums.
    """
    i = step_index(t, grid.tau)
    if i < 1 or abs(i * grid.tau - t) > 1e-9 * grid.tau:
        raise DomainError(f"t={t} is not a positive multiple of tau={grid.tau}")
    if coeff is None:
        coeff = Coefficient.from_dict(solution.provenance["coefficient"])
    n = grid.n
    kx = int(kappa_n(x, n))
    shift = (kx - np.arange(n)) % n          # column index d = k(x) - j
    g1 = green_kernel_table(grid, i + 1, which=1)
    g2 = green_kernel_table(grid, i, which=2)
    deterministic = np.mean(g1[i, shift] * solution.values[0])
    lags = i - 1 - np.arange(i)              # t - t_{k+1} in steps
    weights = g2[lags][:, shift]             # [k, j]
    stochastic = np.sum(weights * coeff(solution.values[:i]) * noise.increments[:i])
    return float(deterministic + stochastic)
