"""
Monte Carlo drivers: moment Lyapunov exponents, path regularity in negative
Sobolev norms, coupled refinement studies and big-jump truncation.

Path ``k`` of a run always uses seed ``base_seed + k``, so a path is the same
realisation whichever experiment, chunking or worker count produced it.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os

import numpy as np

from ..errors import AlignmentError, ConfigurationError, DomainError, FitError, InvalidGridError
from ..noise import moment_m_lambda, sample_batch
from ..scheme import evolve
from ..spectral import GridSpec, amplification, kappa_n, step_index
from .fitting import bootstrap_counts, fit_power_law
from .sobolev import _osc_rows

__all__ = [
    "MCConfig",
    "LyapunovEstimate",
    "ConvergenceResult",
    "TruncationResult",
    "estimate_path_exponent",
    "estimate_lyapunov",
    "convergence_study",
    "dyadic_ladder",
    "truncation_study",
]


@dataclass(frozen=True)
class MCConfig:
    paths: int = 2000
    base_seed: int = 0
    resamples: int = 1000
    workers: int = 1
    chunk: int = 500

    def __post_init__(self):
        if self.paths < 100:
            raise ConfigurationError(f"at least 100 paths required, got {self.paths}")
        if self.resamples < 2:
            raise ConfigurationError("resamples must be >= 2")
        if self.workers < 1 or self.chunk < 1:
            raise ConfigurationError("workers and chunk must be positive")

    @property
    def seeds(self):
        return [self.base_seed + k for k in range(self.paths)]

    def chunks(self):
        s = self.seeds
        return [s[i:i + self.chunk] for i in range(0, len(s), self.chunk)]

    def map(self, fn):
        """Apply ``fn(seeds)`` to every chunk of seeds, results in chunk order."""
        chunks = self.chunks()
        workers = min(self.workers, len(chunks))
        if workers == 1:
            return [fn(c) for c in chunks]
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, chunks))

    def to_dict(self):
        return {"paths": self.paths, "base_seed": self.base_seed, "resamples": self.resamples}

    @staticmethod
    def default_workers():
        return os.cpu_count() or 1


def _initial(u0, n, paths):
    row = u0.sample(n) if hasattr(u0, "sample") else np.asarray(u0, dtype=float)
    return np.broadcast_to(row, (paths, n)).copy()


def _snapshots(grid, spec, coeff, u0, seeds, steps):
    """States at the requested step indices, shape ``(len(steps), paths, n)``."""
    steps = list(steps)
    wanted = {s: k for k, s in enumerate(steps)}
    out = np.empty((len(steps), len(seeds), grid.n))
    batch = sample_batch(spec, grid.T, seeds)

    def keep(i, u):
        k = wanted.get(i)
        if k is not None:
            out[k] = u

    last = max(steps)
    rows = batch.rows(grid)
    evolve(_initial(u0, grid.n, len(seeds)), (next(rows) for _ in range(last)),
           grid, coeff, record=keep)
    return out


# ---------------------------------------------------------------------------
# path regularity

def estimate_path_exponent(grid, spec, coeff, u0, t, h_ladder, r, mc):
    """Fit ``E[(osc_r(t+h, t) osc_r(t, t-h))^2] ~ C h^slope`` over ``h_ladder``.

    The interval of the returned fit comes from resampling paths.
    """
    if not coeff.is_bounded:
        raise ConfigurationError(f"path experiment needs a bounded coefficient, got {coeff.family}")
    if not r < -0.5:
        raise DomainError(f"order r={r} must be < -1/2")
    h_ladder = sorted(float(h) for h in h_ladder)
    if len(h_ladder) < 3:
        raise FitError("need at least 3 ladder points")
    for h in h_ladder:
        if not grid.tau < h < min(t, 1.0):
            raise DomainError(f"h={h} outside (tau, min(t, 1))")
        if t + h > grid.T * (1 + 1e-12):
            raise DomainError(f"t + h = {t + h} exceeds T={grid.T}")
    it = step_index(t, grid.tau)
    hs = [step_index(t + h, grid.tau) for h in h_ladder]
    ls = [step_index(t - h, grid.tau) for h in h_ladder]
    steps = sorted(set([it] + hs + ls))
    pos = {s: k for k, s in enumerate(steps)}
    sd = amplification(grid)

    def chunk(seeds):
        snap = _snapshots(grid, spec, coeff, u0, seeds, steps)
        mid = snap[pos[it]]
        return np.stack([_osc_rows(snap[pos[a]], mid, snap[pos[b]], r, sd)
                         for a, b in zip(hs, ls)], axis=1)

    prods = np.concatenate(mc.map(chunk), axis=0)      # (paths, len(h_ladder))
    means = prods.mean(axis=0)
    if np.all(prods == 0) or np.any(means <= 0):
        raise FitError("zero-variance oscillation statistic: the noise never reaches the solution")
    counts = bootstrap_counts(mc.paths, mc.resamples, mc.base_seed)
    reps = counts @ prods / mc.paths
    return fit_power_law(list(zip(h_ladder, means)), replicates=reps)


# ---------------------------------------------------------------------------
# intermittency

@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    p: float
    times: np.ndarray
    log_sup: np.ndarray
    log_inf: np.ndarray
    log_sup_se: np.ndarray
    upper_slope: float
    lower_slope: float
    upper_se: float
    lower_se: float
    upper_ci: tuple
    lower_ci: tuple
    upper_intercept: float
    window: tuple

    @property
    def lower_positive(self):
        """Lower slope exceeds zero by two bootstrap standard errors."""
        return self.lower_slope - 2.0 * self.lower_se > 0

    @property
    def upper_bounded(self):
        """The sup log-moment curve stays below its affine fit plus three standard errors."""
        fit = self.upper_intercept + self.upper_slope * self.times
        return bool(np.all(self.log_sup <= fit + 3.0 * self.log_sup_se))

    def to_dict(self):
        return {"p": self.p, "window": list(self.window),
                "upper_slope": self.upper_slope, "upper_se": self.upper_se,
                "upper_ci": list(self.upper_ci), "lower_slope": self.lower_slope,
                "lower_se": self.lower_se, "lower_ci": list(self.lower_ci),
                "lower_positive": bool(self.lower_positive),
                "upper_bounded": bool(self.upper_bounded),
                "note": "finite-window slopes support but cannot certify the t -> infinity limits"}


def check_intermittency_preset(spec, coeff, u0):
    """Raise :class:`ConfigurationError` unless the intermittency preconditions hold."""
    if not coeff.lipschitz > 0 or not coeff.j0 > 0:
        raise ConfigurationError(
            f"intermittency needs L_sigma > 0 and J0 > 0; {coeff.family} gives "
            f"L_sigma={coeff.lipschitz}, J0={coeff.j0}")
    if getattr(u0, "kind", None) != "constant" or not u0.value > 0:
        raise ConfigurationError("intermittency needs a constant positive initial value")
    if spec.measure.is_zero:
        raise ConfigurationError("intermittency needs a non-zero Levy measure")
    if spec.truncation is not None:
        raise ConfigurationError("intermittency preset uses the untruncated noise")
    if not spec.is_centered():
        raise ConfigurationError("intermittency needs the drift b = -int_{|z|>1} z lambda(dz)")


def estimate_lyapunov(grid, spec, coeff, u0, p, mc, window=(0.5, 1.0)):
    """Slopes of ``t -> log sup_x E|u|^p`` and ``t -> log inf_x E|u|^p`` over a window.

    Both suprema and infima run over grid nodes.  Standard errors and
    intervals come from resampling paths.
    """
    if not 1.0 < p < 3.0:
        raise DomainError(f"p={p} outside (1, 3)")
    check_intermittency_preset(spec, coeff, u0)
    lo = int(math.ceil(window[0] * grid.m - 1e-9))
    hi = int(math.floor(window[1] * grid.m + 1e-9))
    steps = list(range(max(lo, 1), hi + 1))
    if len(steps) < 3:
        raise FitError("window holds fewer than 3 time levels")

    def chunk(seeds):
        return np.abs(_snapshots(grid, spec, coeff, u0, seeds, steps)) ** p

    mom = np.concatenate(mc.map(chunk), axis=1)        # (steps, paths, n)
    times = grid.tau * np.asarray(steps)
    S, P, n = mom.shape
    mean = mom.mean(axis=1)
    log_sup = np.log(mean.max(axis=1))
    log_inf = np.log(mean.min(axis=1))

    counts = bootstrap_counts(P, mc.resamples, mc.base_seed)
    flat = mom.transpose(1, 0, 2).reshape(P, S * n)
    boot = (counts @ flat / P).reshape(-1, S, n)
    b_sup = np.log(boot.max(axis=2))
    b_inf = np.log(boot.min(axis=2))

    xc = times - times.mean()

    def slope(y):
        return (y - y.mean(axis=-1, keepdims=True)) @ xc / (xc @ xc)

    def summary(y, by):
        s = float(slope(y))
        bs = slope(by)
        return s, float(np.std(bs, ddof=1)), tuple(float(q) for q in np.percentile(bs, [2.5, 97.5]))

    up, up_se, up_ci = summary(log_sup, b_sup)
    low, low_se, low_ci = summary(log_inf, b_inf)
    intercept = float(log_sup.mean() - up * times.mean())
    return LyapunovEstimate(p, times, log_sup, log_inf, np.std(b_sup, axis=0, ddof=1),
                            up, low, up_se, low_se, up_ci, low_ci, intercept, tuple(window))


# ---------------------------------------------------------------------------
# refinement studies

@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    levels: tuple
    reference: tuple
    errors: np.ndarray
    fits: dict
    probes: tuple
    sq_diff: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"levels": [list(l) for l in self.levels], "reference": list(self.reference),
                "errors": self.errors.tolist(), "probes": list(self.probes),
                "fits": {k: v.to_dict() for k, v in self.fits.items()}}


def _is_pow2(k):
    return k >= 1 and (k & (k - 1)) == 0


def dyadic_ladder(theta, T, ladder):
    """Validate a refinement ladder whose last entry is the reference.

    Returns the list of :class:`GridSpec`; raises :class:`AlignmentError`
    when a level is not a dyadic coarsening of the reference and
    :class:`InvalidGridError` (naming the level) when a level is unstable.
    """
    if len(ladder) < 2:
        raise ConfigurationError("ladder needs at least one level plus the reference")
    grids = []
    for k, (n, tau) in enumerate(ladder):
        try:
            grids.append(GridSpec(n, tau, theta, T))
        except InvalidGridError as exc:
            raise InvalidGridError(f"ladder level {k} (n={n}, tau={tau}): {exc}") from None
    ref = grids[-1]
    for k, g in enumerate(grids[:-1]):
        if ref.n % g.n or ref.m % g.m or not _is_pow2(ref.n // g.n) or not _is_pow2(ref.m // g.m):
            raise AlignmentError(
                f"ladder level {k} (n={g.n}, m={g.m}) is not a dyadic coarsening of the "
                f"reference (n={ref.n}, m={ref.m})")
    return grids


def convergence_study(theta, coeff, u0, spec, ladder, T, probes=None, mc=None):
    """Strong errors of every ladder level against the finest (last) level.

    All levels are driven by block sums of one fine-grid noise realisation per
    path.  ``error_k = max_x (E|u_k(T, x) - u_ref(T, x)|^2)^{1/2}`` over the
    probe points, and power laws are fitted along every axis that varies
    (``1/n`` for space, ``tau`` for time).
    """
    mc = mc or MCConfig()
    grids = dyadic_ladder(theta, T, ladder)
    moment_m_lambda(spec.active_measure, 2.0)
    ref = grids[-1]
    if probes is None:
        probes = tuple(np.arange(min(g.n for g in grids)) / min(g.n for g in grids))
    probes = tuple(float(x) for x in probes)
    idx = [kappa_n(probes, g.n) for g in grids]

    def chunk(seeds):
        batch = sample_batch(spec, T, seeds)
        finals, totals = [], []
        for g in grids:
            tot = np.zeros(len(seeds))

            def counted(rows):
                nonlocal tot
                for row in rows:
                    tot = tot + row.sum(axis=1)
                    yield row

            u = evolve(_initial(u0, g.n, len(seeds)), counted(batch.rows(g, fine=ref)), g, coeff)
            finals.append(u)
            totals.append(tot)
        scale = np.abs(batch.z).sum() + abs(spec.cell_drift_rate) * T + 1.0
        for k, tot in enumerate(totals[:-1]):
            if np.max(np.abs(tot - totals[-1])) > 1e-12 * scale:
                raise AlignmentError(f"coupled noise totals differ at ladder level {k}")
        ref_vals = finals[-1][:, idx[-1]]
        return np.stack([(f[:, i] - ref_vals) ** 2 for f, i in zip(finals[:-1], idx[:-1])],
                        axis=1)

    sq = np.concatenate(mc.map(chunk), axis=0)          # (paths, levels, probes)
    errors = np.sqrt(sq.mean(axis=0).max(axis=1))
    fits = {}
    levels = [(g.n, g.tau) for g in grids[:-1]]
    if np.all(errors > 0) and len(levels) >= 3:
        counts = bootstrap_counts(mc.paths, mc.resamples, mc.base_seed)
        reps = np.sqrt(np.einsum("bp,plx->blx", counts, sq).max(axis=2) / mc.paths)
        ns = np.array([g.n for g in grids[:-1]])
        taus = np.array([g.tau for g in grids[:-1]])
        if np.unique(ns).size == ns.size:
            fits["space"] = fit_power_law(list(zip(1.0 / ns, errors)), replicates=reps)
        if np.unique(taus).size == taus.size:
            fits["time"] = fit_power_law(list(zip(taus, errors)), replicates=reps)
    return ConvergenceResult(tuple(levels), (ref.n, ref.tau), errors, fits, probes, sq)


@dataclass(frozen=True, eq=False)
class TruncationResult:
    levels: tuple
    mean_discrepancy: np.ndarray
    se: np.ndarray
    exact_fraction: np.ndarray
    discrepancy: np.ndarray = field(repr=False)
    max_jump: np.ndarray = field(repr=False)

    def rows(self):
        return [{"N": N, "mean_discrepancy": float(d), "se": float(s), "exact_fraction": float(f)}
                for N, d, s, f in zip(self.levels, self.mean_discrepancy, self.se,
                                      self.exact_fraction)]

    def exact_on_small_jump_paths(self):
        """Discrepancy vanishes on every path whose largest jump is at most ``N``."""
        ok = True
        for k, N in enumerate(self.levels):
            mask = self.max_jump <= N
            ok &= bool(np.all(self.discrepancy[mask, k] == 0.0))
        return ok

    def exact_fraction_monotone(self):
        return bool(np.all(np.diff(self.exact_fraction) >= 0))


def truncation_study(grid, spec, N_ladder, coeff, u0, t, x, mc):
    """Discrepancy ``|u_N(t, x) - u_Nmax(t, x)|`` with one jump stream per path.

    Every level drops the jumps above ``N`` from the same realisation, so a
    path whose jumps on ``[0, t) x [0, 1)`` all stay below ``N`` is reproduced
    exactly.
    """
    levels = [float(N) for N in N_ladder]
    if len(levels) < 2 or np.any(np.diff(levels) <= 0) or levels[0] <= 1:
        raise ConfigurationError("N_ladder must be increasing with entries > 1")
    i = step_index(t, grid.tau)
    if i < 1 or i > grid.m:
        raise DomainError(f"t={t} outside (0, T]")
    g = grid.replace(T=i * grid.tau)
    j = int(kappa_n(x, g.n))
    base = spec if spec.truncation is None else type(spec)(spec.b, spec.measure, None,
                                                           spec.deterministic)

    def chunk(seeds):
        full = sample_batch(base, g.T, seeds)
        vals = []
        for N in levels:
            b = full.truncated(N)
            u = evolve(_initial(u0, g.n, len(seeds)), b.rows(g), g, coeff)
            vals.append(u[:, j])
        vals = np.stack(vals, axis=1)
        return np.abs(vals - vals[:, -1:]), full.max_abs_jump()

    parts = mc.map(chunk)
    disc = np.concatenate([p[0] for p in parts], axis=0)
    maxjump = np.concatenate([p[1] for p in parts])
    mean = disc.mean(axis=0)
    se = disc.std(axis=0, ddof=1) / math.sqrt(disc.shape[0])
    exact = np.array([np.mean(maxjump <= N) for N in levels])
    return TruncationResult(tuple(levels), mean, se, exact, disc, maxjump)
