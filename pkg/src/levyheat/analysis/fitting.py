"""Log-log power-law regression with bootstrap intervals."""

from dataclasses import dataclass

import numpy as np

from ..errors import FitError

__all__ = ["OrderFit", "fit_power_law", "bootstrap_counts"]


@dataclass(frozen=True)
class OrderFit:
    points: tuple
    slope: float
    intercept: float
    ci: tuple
    se: float = float("nan")

    @property
    def half_width(self):
        return 0.5 * (self.ci[1] - self.ci[0])

    def to_dict(self):
        return {"points": [list(p) for p in self.points], "slope": self.slope,
                "intercept": self.intercept, "ci": list(self.ci), "se": self.se}


def _check(scales, errors):
    if scales.size < 3:
        raise FitError(f"need at least 3 points, got {scales.size}")
    if np.any(scales <= 0) or np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise FitError("scales and errors must be positive and finite")
    d = np.diff(scales)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise FitError("scales must be strictly monotone")


def _slopes(logx, logy):
    """Least-squares slope of each row of ``logy`` against ``logx``."""
    xc = logx - logx.mean()
    return (logy - logy.mean(axis=-1, keepdims=True)) @ xc / (xc @ xc)


def bootstrap_counts(paths, resamples, seed=0):
    """Multinomial resampling weights, shape ``(resamples, paths)``."""
    rng = np.random.default_rng(seed)
    return rng.multinomial(paths, np.full(paths, 1.0 / paths), size=resamples)


def fit_power_law(points, replicates=None, resamples=1000, level=0.95, seed=0):
    """Fit ``error = C * scale**slope`` by least squares in log-log coordinates.

    Parameters
    ----------
    points : sequence of (scale, error)
    replicates : array_like, optional
        Bootstrap replicates of the error vector, shape ``(B, len(points))``,
        typically from resampling Monte Carlo paths.  Without them the
        interval comes from resampling the points themselves.
    """
    pts = np.asarray(points, dtype=float)
    scales, errors = pts[:, 0], pts[:, 1]
    _check(scales, errors)
    lx, ly = np.log(scales), np.log(errors)
    slope = float(_slopes(lx, ly))
    intercept = float(ly.mean() - slope * lx.mean())
    if replicates is not None:
        reps = np.asarray(replicates, dtype=float)
        good = np.all(reps > 0, axis=1)
        boot = _slopes(lx, np.log(reps[good]))
    else:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, scales.size, size=(resamples, scales.size))
        keep = np.array([np.unique(row).size >= 2 for row in idx])
        idx = idx[keep]
        bx, by = lx[idx], ly[idx]
        bxc = bx - bx.mean(axis=1, keepdims=True)
        boot = np.sum(bxc * (by - by.mean(axis=1, keepdims=True)), axis=1) / np.sum(bxc ** 2, axis=1)
    if boot.size < 2:
        ci, se = (float("nan"), float("nan")), float("nan")
    else:
        tail = 50.0 * (1.0 - level)
        ci = tuple(float(q) for q in np.percentile(boot, [tail, 100.0 - tail]))
        se = float(np.std(boot, ddof=1))
    return OrderFit(tuple(map(tuple, pts.tolist())), slope, intercept, ci, se)
