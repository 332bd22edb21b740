"""
Pure-jump Levy space-time white noise on [0, T] x [0, 1).

The noise is ``b dt dx`` plus compensated small jumps (|z| <= 1) plus raw
large jumps (|z| > 1) of a Poisson random measure with intensity
``dt dx lambda(dz)``.  Only finite-activity measures are sampled exactly; a
small-jump cutoff ``eps_cut`` lets a measure be thinned near the origin, the
removed compensated part having zero mean.

A seed determines one realisation of the Poisson random measure on the
continuum ``[0, T) x [0, 1)``.  Cell increments on any grid are obtained by
binning that realisation, so refinement ladders and truncation levels driven
by the same seed are exactly coupled.
"""

from dataclasses import dataclass, field, replace
import io
import json
import math

import numpy as np
from scipy import special

from .errors import (AlignmentError, ConfigurationError, DomainError,
                     InfiniteMomentError, InvalidParameterError)
from .spectral import GridSpec

__all__ = [
    "LevyMeasure",
    "LevyNoiseSpec",
    "JumpLog",
    "NoiseField",
    "JumpBatch",
    "moment_m_lambda",
    "center_drift",
    "truncate",
    "sample",
    "sample_batch",
    "coarsen",
]

KINDS = ("atomic", "exponential", "pareto", "zero")


@dataclass(frozen=True)
class LevyMeasure:
    """A finite-activity Levy measure.

    Kinds
    -----
    atomic
        ``sum_k c_k delta_{z_k}`` with ``atoms = ((z_1, c_1), ...)``.
    exponential
        Symmetric two-sided exponential density ``rate/(2 scale) exp(-|z|/scale)``.
    pareto
        Symmetric power tail ``rate/2 * index * scale**index / |z|**(index+1)``
        on ``|z| >= scale``; ``m(p)`` is infinite for ``p >= index``.
    zero
        The null measure (deterministic runs only).

    ``eps_cut`` removes jumps with ``|z| < eps_cut`` and ``cap`` removes jumps
    with ``|z| > cap``.
    """

    kind: str
    atoms: tuple = ()
    rate: float = 0.0
    scale: float = 1.0
    index: float = 0.0
    eps_cut: float = 0.0
    cap: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown measure kind {self.kind!r}")
        if not 0.0 <= self.eps_cut <= 1.0:
            raise InvalidParameterError(f"eps_cut must lie in [0, 1], got {self.eps_cut}")
        if not self.cap > 0:
            raise InvalidParameterError("cap must be positive")
        if self.kind == "atomic":
            atoms = tuple((float(z), float(c)) for z, c in self.atoms)
            for z, c in atoms:
                if z == 0.0 or not math.isfinite(z):
                    raise InvalidParameterError(f"atom at z={z} not allowed")
                if not c > 0:
                    raise InvalidParameterError(f"atom rate must be positive, got {c}")
            object.__setattr__(self, "atoms", atoms)
        elif self.kind in ("exponential", "pareto"):
            if not (self.rate > 0 and self.scale > 0):
                raise InvalidParameterError("rate and scale must be positive")
            if self.kind == "pareto" and not self.index > 0:
                raise InvalidParameterError("pareto index must be positive")

    @classmethod
    def atomic(cls, atoms, eps_cut=0.0):
        return cls("atomic", atoms=tuple(atoms), eps_cut=eps_cut)

    @classmethod
    def exponential(cls, rate, scale, eps_cut=0.0):
        return cls("exponential", rate=rate, scale=scale, eps_cut=eps_cut)

    @classmethod
    def pareto(cls, rate, scale, index, eps_cut=0.0):
        return cls("pareto", rate=rate, scale=scale, index=index, eps_cut=eps_cut)

    @classmethod
    def zero(cls):
        return cls("zero")

    @property
    def is_zero(self):
        return self.kind == "zero" or (self.kind == "atomic" and not self._live_atoms())

    # -- integrals -------------------------------------------------------
    def _live_atoms(self, lo=None, hi=None):
        lo = self.eps_cut if lo is None else lo
        hi = self.cap if hi is None else hi
        return [(z, c) for z, c in self.atoms if lo <= abs(z) <= hi]

    def _abs_moment(self, p, lo, hi):
        """``int_{lo <= |z| <= hi} |z|^p lambda(dz)`` (also clipped to eps_cut/cap)."""
        lo = max(lo, self.eps_cut)
        hi = min(hi, self.cap)
        if hi < lo or self.kind == "zero":
            return 0.0
        if self.kind == "atomic":
            return float(sum(c * abs(z) ** p for z, c in self._live_atoms(lo, hi)))
        if self.kind == "exponential":
            eta = self.scale
            # int_lo^hi z^p e^{-z/eta}/eta dz = eta^p Gamma(p+1) [P(p+1, hi/eta) - P(p+1, lo/eta)]
            upper = 1.0 if math.isinf(hi) else special.gammainc(p + 1, hi / eta)
            lower = special.gammainc(p + 1, lo / eta) if lo > 0 else 0.0
            return self.rate * eta ** p * special.gamma(p + 1) * (upper - lower)
        # pareto
        a, zmin = self.index, self.scale
        lo = max(lo, zmin)
        if hi < lo:
            return 0.0
        if math.isinf(hi) and p >= a:
            return math.inf
        if p == a:
            return self.rate * a * zmin ** a * math.log(hi / lo)
        hi_term = 0.0 if math.isinf(hi) else hi ** (p - a)
        return self.rate * a * zmin ** a * (hi_term - lo ** (p - a)) / (p - a)

    def moment(self, p):
        return self._abs_moment(p, 0.0, math.inf)

    def first_moment(self, lo, hi, *, open_lo=False):
        """Signed ``int z lambda(dz)`` over ``lo <= |z| <= hi`` (``lo < |z|`` if ``open_lo``)."""
        if self.kind == "atomic":
            lo_eff = max(lo, self.eps_cut)
            total = 0.0
            for z, c in self._live_atoms(lo_eff, min(hi, self.cap)):
                if open_lo and abs(z) == lo:
                    continue
                total += c * z
            return total
        if math.isinf(self._abs_moment(1.0, lo, hi)):
            raise InfiniteMomentError(f"int |z| lambda(dz) over {lo} < |z| <= {hi} is infinite")
        # remaining kinds are symmetric
        return 0.0

    @property
    def activity(self):
        """Total mass after ``eps_cut``/``cap`` are applied."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "atomic":
            return float(sum(c for _, c in self._live_atoms()))
        lo = self.eps_cut
        if self.kind == "exponential":
            mass = math.exp(-lo / self.scale)
            if not math.isinf(self.cap):
                mass -= math.exp(-self.cap / self.scale)
            return self.rate * mass
        lo = max(lo, self.scale)
        mass = (self.scale / lo) ** self.index
        if not math.isinf(self.cap):
            mass -= (self.scale / self.cap) ** self.index
        return self.rate * mass

    def restrict(self, N):
        """The measure with jumps above ``N`` removed."""
        if self.kind == "atomic":
            return replace(self, atoms=tuple((z, c) for z, c in self.atoms if abs(z) <= N))
        return replace(self, cap=min(self.cap, N))

    # -- sampling --------------------------------------------------------
    def draw_sizes(self, rng, k):
        """``k`` i.i.d. jump sizes from the normalised measure."""
        if k == 0 or self.kind == "zero":
            return np.zeros(0)
        if self.kind == "atomic":
            live = self._live_atoms()
            z = np.array([a for a, _ in live])
            c = np.array([b for _, b in live])
            return z[rng.choice(z.size, size=k, p=c / c.sum())]
        sign = np.where(rng.random(k) < 0.5, -1.0, 1.0)
        u = rng.random(k)
        if self.kind == "exponential":
            lo, eta = self.eps_cut, self.scale
            span = 1.0 if math.isinf(self.cap) else -math.expm1(-(self.cap - lo) / eta)
            mag = lo - eta * np.log1p(-u * span)
        else:
            a = self.index
            lo = max(self.eps_cut, self.scale)
            span = 1.0 if math.isinf(self.cap) else 1.0 - (lo / self.cap) ** a
            mag = lo * (1.0 - u * span) ** (-1.0 / a)
        return sign * mag

    # -- serialisation ---------------------------------------------------
    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "atomic":
            d["atoms"] = [list(a) for a in self.atoms]
        elif self.kind in ("exponential", "pareto"):
            d["rate"] = self.rate
            d["scale"] = self.scale
            if self.kind == "pareto":
                d["index"] = self.index
        if self.eps_cut:
            d["eps_cut"] = self.eps_cut
        if not math.isinf(self.cap):
            d["cap"] = self.cap
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "atoms" in d:
            d["atoms"] = tuple(tuple(a) for a in d["atoms"])
        return cls(**d)


def moment_m_lambda(measure, p):
    """``m(p) = int |z|^p lambda(dz)`` for ``p`` in [1, 3)."""
    if not 1.0 <= p < 3.0:
        raise DomainError(f"p={p} outside [1, 3)")
    value = measure.moment(p)
    if math.isinf(value):
        raise InfiniteMomentError(f"m_lambda({p}) is infinite for {measure.kind} measure")
    return value


def center_drift(measure):
    """Drift ``-int_{|z|>1} z lambda(dz)`` making the noise mean-zero."""
    if math.isinf(measure._abs_moment(1.0, 1.0, math.inf)):
        raise InfiniteMomentError("int_{|z|>1} |z| lambda(dz) is infinite")
    return -measure.first_moment(1.0, math.inf, open_lo=True)


@dataclass(frozen=True)
class LevyNoiseSpec:
    """Drift plus Levy measure, optionally truncated at big-jump level ``truncation``.

    ``measure`` is always the untruncated measure so that specs differing only
    in ``truncation`` share one jump stream per seed.
    """

    b: float
    measure: LevyMeasure
    truncation: float = None
    deterministic: bool = False

    def __post_init__(self):
        if self.measure.is_zero and not self.deterministic:
            raise ConfigurationError(
                "zero Levy measure requires deterministic=True (noise would be pure drift)")
        if self.truncation is not None and not self.truncation > 1:
            raise InvalidParameterError(f"truncation level must exceed 1, got {self.truncation}")

    @classmethod
    def centered(cls, measure, **kw):
        return cls(center_drift(measure), measure, **kw)

    @property
    def active_measure(self):
        if self.truncation is None:
            return self.measure
        return self.measure.restrict(self.truncation)

    @property
    def effective_drift(self):
        """``b + int_{1<|z|<=N} z lambda(dz)``, the drift once every kept jump is compensated."""
        if self.truncation is None:
            return self.b
        return self.b + self.measure.first_moment(1.0, self.truncation, open_lo=True)

    @property
    def small_compensator(self):
        return self.measure.first_moment(0.0, 1.0)

    @property
    def cell_drift_rate(self):
        """Deterministic part of the noise per unit space-time area."""
        return self.b - self.small_compensator

    def is_centered(self, rtol=1e-12):
        target = center_drift(self.measure)
        return abs(self.b - target) <= rtol * max(1.0, abs(target))

    def to_dict(self):
        d = {"b": self.b, "measure": self.measure.to_dict()}
        if self.truncation is not None:
            d["truncation"] = self.truncation
        if self.deterministic:
            d["deterministic"] = True
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["measure"] = LevyMeasure.from_dict(d["measure"])
        return cls(**d)


def truncate(spec, N):
    """Remove jumps above ``N``; the effective drift becomes ``b + int_{1<|z|<=N} z lambda``."""
    if not N > 1:
        raise InvalidParameterError(f"truncation level must exceed 1, got {N}")
    return replace(spec, truncation=float(N))


# ---------------------------------------------------------------------------
# realisations

def _draw_unit_jumps(measure, T, rng):
    """Jumps of the Poisson random measure on [0,T) x [0,1) in unit coordinates."""
    k = int(rng.poisson(measure.activity * T)) if measure.activity > 0 else 0
    s = rng.random(k)
    y = rng.random(k)
    z = measure.draw_sizes(rng, k)
    return s, y, z


@dataclass(frozen=True)
class JumpLog:
    """Jumps binned on a grid: cell ``(i, j)``, offsets within the cell, size."""

    i: np.ndarray
    j: np.ndarray
    rel_t: np.ndarray
    rel_x: np.ndarray
    size: np.ndarray

    def __len__(self):
        return self.size.size

    def cell(self, i, j):
        mask = (self.i == i) & (self.j == j)
        return list(zip(self.rel_t[mask], self.rel_x[mask], self.size[mask]))

    def filtered(self, mask):
        return JumpLog(*(a[mask] for a in (self.i, self.j, self.rel_t, self.rel_x, self.size)))


def _bin(frac, cells):
    pos = frac * cells
    idx = np.minimum(np.floor(pos).astype(np.int64), cells - 1)
    return idx, pos - idx


@dataclass(frozen=True, eq=False)
class NoiseField:
    """Per-cell noise increments ``increments[i, j] = Lambda([t_i, t_i+1) x [x_j, x_j+1))``."""

    grid: GridSpec
    spec: LevyNoiseSpec
    increments: np.ndarray
    seed: int = None
    jump_log: JumpLog = field(default=None, repr=False)

    @property
    def n(self):
        return self.grid.n

    @property
    def m(self):
        return self.grid.m

    def rederive(self):
        """Rebuild the increments from drift and ``jump_log``."""
        if self.jump_log is None:
            raise ConfigurationError("noise field carries no jump log")
        area = self.grid.tau / self.grid.n
        out = np.full((self.m, self.n), self.spec.cell_drift_rate * area)
        np.add.at(out, (self.jump_log.i, self.jump_log.j), self.jump_log.size)
        return out

    # -- portable text format -------------------------------------------
    def to_text(self):
        header = {"format": "levyheat.noise/1", "grid": self.grid.to_dict(),
                  "spec": self.spec.to_dict(), "seed": self.seed}
        buf = io.StringIO()
        buf.write(json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(buf, self.increments, fmt="%.17g", delimiter=",")
        return buf.getvalue()

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text):
        head, _, body = text.partition("\n")
        header = json.loads(head)
        grid = GridSpec.from_dict(header["grid"])
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
        return cls(grid, LevyNoiseSpec.from_dict(header["spec"]), data, header["seed"])

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def sample(grid, spec, seed, keep_jump_log=True):
    """Draw one noise realisation on ``grid``.

    Each cell receives ``(b - int_{|z|<=1} z lambda) tau/n`` plus the sizes of
    the jumps falling in it; jumps above ``spec.truncation`` are discarded.
    The result is a deterministic function of ``(seed, grid, spec)``.
    """
    if spec.measure.is_zero and not spec.deterministic:
        raise ConfigurationError("zero Levy measure requires deterministic mode")
    rng = np.random.default_rng(seed)
    s, y, z = _draw_unit_jumps(spec.measure, grid.T, rng)
    if spec.truncation is not None:
        keep = np.abs(z) <= spec.truncation
        s, y, z = s[keep], y[keep], z[keep]
    i, rel_t = _bin(s, grid.m)
    j, rel_x = _bin(y, grid.n)
    log = JumpLog(i, j, rel_t, rel_x, z)
    area = grid.tau / grid.n
    inc = np.full((grid.m, grid.n), spec.cell_drift_rate * area)
    np.add.at(inc, (i, j), z)
    return NoiseField(grid, spec, inc, seed, log if keep_jump_log else None)


def coarsen(fine, kt, kx):
    """Aggregate ``kt x kx`` blocks of cells; the jump log is re-binned."""
    if fine.jump_log is None:
        raise ConfigurationError("coarsening requires a noise field with a jump log")
    kt, kx = int(kt), int(kx)
    if kt < 1 or kx < 1 or fine.m % kt or fine.n % kx:
        raise AlignmentError(
            f"factors (kt={kt}, kx={kx}) do not divide grid (m={fine.m}, n={fine.n})")
    g = fine.grid
    grid = g.replace(n=g.n // kx, tau=g.tau * kt)
    inc = fine.increments.reshape(fine.m // kt, kt, fine.n // kx, kx).sum(axis=(1, 3))
    log = fine.jump_log
    coarse_log = JumpLog(log.i // kt, log.j // kx,
                         (log.i % kt + log.rel_t) / kt, (log.j % kx + log.rel_x) / kx,
                         log.size.copy())
    return NoiseField(grid, fine.spec, inc, fine.seed, coarse_log)


# ---------------------------------------------------------------------------
# many paths at once

@dataclass(frozen=True, eq=False)
class JumpBatch:
    """Jump realisations of several independent paths in unit coordinates.

    Path ``k`` uses seed ``seeds[k]`` and reproduces :func:`sample` with the
    same seed exactly.
    """

    spec: LevyNoiseSpec
    T: float
    seeds: tuple
    path: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def paths(self):
        return len(self.seeds)

    def truncated(self, N):
        keep = np.abs(self.z) <= N
        return JumpBatch(truncate(self.spec, N), self.T, self.seeds, self.path[keep], self.s[keep],
                         self.y[keep], self.z[keep])

    def max_abs_jump(self):
        out = np.zeros(self.paths)
        np.maximum.at(out, self.path, np.abs(self.z))
        return out

    def rows(self, grid, fine=None):
        """Iterate over per-step increment arrays of shape ``(paths, grid.n)``.

        With ``fine`` given, jumps are first binned on ``fine`` and then
        aggregated, which makes every level of a refinement ladder a block sum
        of the same fine-grid noise.
        """
        ref = grid if fine is None else fine
        if ref.m % grid.m or ref.n % grid.n:
            raise AlignmentError(
                f"grid (m={grid.m}, n={grid.n}) does not divide fine grid (m={ref.m}, n={ref.n})")
        i, _ = _bin(self.s, ref.m)
        j, _ = _bin(self.y, ref.n)
        i //= ref.m // grid.m
        j //= ref.n // grid.n
        order = np.argsort(i, kind="stable")
        i, j, p, z = i[order], j[order], self.path[order], self.z[order]
        bounds = np.searchsorted(i, np.arange(grid.m + 1))
        drift = self.spec.cell_drift_rate * grid.tau / grid.n
        for step in range(grid.m):
            row = np.full((self.paths, grid.n), drift)
            lo, hi = bounds[step], bounds[step + 1]
            if hi > lo:
                np.add.at(row, (p[lo:hi], j[lo:hi]), z[lo:hi])
            yield row


def sample_batch(spec, T, seeds):
    """Jump realisations for a list of seeds (truncation applied)."""
    if spec.measure.is_zero and not spec.deterministic:
        raise ConfigurationError("zero Levy measure requires deterministic mode")
    parts = []
    for k, seed in enumerate(seeds):
        s, y, z = _draw_unit_jumps(spec.measure, T, np.random.default_rng(seed))
        parts.append((np.full(s.size, k, dtype=np.int64), s, y, z))
    path, s, y, z = (np.concatenate([p[c] for p in parts]) if parts else np.zeros(0)
                     for c in range(4))
    batch = JumpBatch(replace(spec, truncation=None), T, tuple(seeds),
                      path.astype(np.int64), s, y, z)
    if spec.truncation is not None:
        batch = batch.truncated(spec.truncation)
    return batch
