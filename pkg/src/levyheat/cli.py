"""
Configuration-driven entry point.

A configuration is a set of blocks (``experiment``, ``grid``, ``noise``,
``coefficient``, ``initial``, ``mc``), written either as INI sections whose
values are JSON literals or as one JSON object.  Both encodings round-trip
losslessly.  Example::

    [experiment]
    command = pathreg
    t = 0.032
    r = -0.6

    [grid]
    n = 32
    tau = 0.001
    theta = 1.0
    T = 0.048

    [noise]
    centered = true
    kind = "atomic"
    atoms = [[0.01, 5000.0], [-0.01, 5000.0]]

    [coefficient]
    family = "bounded"
    beta = 1.0

    [initial]
    kind = "constant"
    value = 1.0

    [mc]
    paths = 2000

Each run writes ``summary.json``, ``points.csv`` and ``provenance.json``.
Exit status: 0 on success, 1 on an invalid configuration or a failed run,
2 when ``--strict`` is given and an acceptance band is missed.
"""

import argparse
import configparser
import csv
from dataclasses import dataclass, field
import datetime
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import (
    MCConfig,
    check_intermittency_preset,
    convergence_study,
    dyadic_ladder,
    estimate_lyapunov,
    estimate_path_exponent,
    fit_power_law,
    truncation_study,
)
from .errors import (
    AlignmentError,
    ConfigurationError,
    DomainError,
    InfiniteMomentError,
    InvalidGridError,
    InvalidParameterError,
    LevyHeatError,
)
from .green import green_l2_error
from .noise import LevyMeasure, LevyNoiseSpec, center_drift, moment_m_lambda, sample
from .scheme import Coefficient, InitialCondition, run
from .spectral import GridSpec, step_index

__all__ = ["ExperimentConfig", "COMMANDS", "validate", "run_experiment", "main"]

COMMANDS = ("simulate", "converge", "intermittency", "pathreg", "greenerr", "truncate")
BLOCKS = ("experiment", "grid", "noise", "coefficient", "initial", "mc")

REQUIRED = {
    "simulate": ("grid", "noise", "coefficient", "initial"),
    "converge": ("grid", "noise", "coefficient", "initial", "mc"),
    "intermittency": ("grid", "noise", "coefficient", "initial", "mc"),
    "pathreg": ("grid", "noise", "coefficient", "initial", "mc"),
    "greenerr": ("grid",),
    "truncate": ("grid", "noise", "coefficient", "initial", "mc"),
}

# default acceptance bands
SPACE_BAND = (0.4, 0.6)
TIME_BAND = (0.15, 0.35)
GREEN_BAND = (0.8, 1.2)

# exceptions raised when a precondition fails; anything else is a run failure
PRECONDITION_ERRORS = (InvalidGridError, InvalidParameterError, DomainError,
                       InfiniteMomentError, ConfigurationError, AlignmentError)


@dataclass
class ExperimentConfig:
    """Raw configuration blocks; objects are built by :func:`validate` / :func:`run_experiment`."""

    experiment: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    coefficient: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)

    @property
    def command(self):
        return self.experiment.get("command")

    def to_dict(self):
        return {b: dict(getattr(self, b)) for b in BLOCKS if getattr(self, b)}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(BLOCKS)
        if unknown:
            raise ConfigurationError(f"unknown block(s): {', '.join(sorted(unknown))}")
        return cls(**{b: dict(d.get(b) or {}) for b in BLOCKS})

    # -- encodings ---------------------------------------------------------
    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for block, values in self.to_dict().items():
            cp[block] = {k: json.dumps(v) for k, v in values.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        d = {}
        for block in cp.sections():
            d[block] = {}
            for k, raw in cp[block].items():
                try:
                    d[block][k] = json.loads(raw)
                except json.JSONDecodeError:
                    d[block][k] = raw          # bare words such as ``command = converge``
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            text = fh.read()
        if text.lstrip().startswith("{"):
            return cls.from_json(text)
        return cls.from_ini(text)

    def canonical(self):
        """Blocks without settings that cannot change results (the worker count)."""
        d = self.to_dict()
        if "mc" in d:
            d["mc"].pop("workers", None)
        return d

    def hash(self):
        canon = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# building objects

@dataclass
class _Plan:
    command: str
    params: dict
    grid: object = None
    ladder: list = None
    spec: object = None
    coeff: object = None
    u0: object = None
    mc: object = None


def _kwargs(block, allowed, name):
    extra = set(block) - set(allowed)
    if extra:
        raise ConfigurationError(f"[{name}] unknown key(s): {', '.join(sorted(extra))}")
    return dict(block)


def _build_grid(block, required=("n", "tau", "theta", "T")):
    keys = ("n", "tau", "theta", "T", "r_bound", "epsilon")
    d = _kwargs(block, keys, "grid")
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigurationError(f"[grid] missing key(s): {', '.join(missing)}")
    if "n" not in required:
        return None
    return GridSpec(**d)


def _build_noise(block):
    d = _kwargs(block, ("b", "centered", "truncation", "deterministic", "kind", "atoms", "rate",
                        "scale", "index", "eps_cut", "cap"), "noise")
    if "kind" not in d:
        raise ConfigurationError("[noise] missing key: kind")
    b = d.pop("b", None)
    centered = d.pop("centered", False)
    truncation = d.pop("truncation", None)
    deterministic = d.pop("deterministic", False)
    measure = LevyMeasure.from_dict(d)
    if centered and b is not None:
        raise ConfigurationError("[noise] give either b or centered, not both")
    if centered:
        b = center_drift(measure)
    if b is None:
        raise ConfigurationError("[noise] missing key: b (or centered = true)")
    return LevyNoiseSpec(float(b), measure, truncation, bool(deterministic))


def _build_coefficient(block):
    d = _kwargs(block, ("family", "gamma", "beta", "lo", "hi"), "coefficient")
    if "family" not in d:
        raise ConfigurationError("[coefficient] missing key: family")
    return Coefficient.from_dict(d)


def _build_initial(block):
    d = _kwargs(block, ("kind", "value", "l", "amplitude", "phase", "coeffs", "samples"), "initial")
    if "kind" not in d:
        raise ConfigurationError("[initial] missing key: kind")
    return InitialCondition.from_dict(d)


def _build_mc(block):
    d = _kwargs(block, ("paths", "base_seed", "resamples", "workers", "chunk"), "mc")
    return MCConfig(**d)


EXPERIMENT_KEYS = {
    "simulate": ("seed",),
    "converge": ("ladder", "probes", "axis", "band"),
    "intermittency": ("p", "window"),
    "pathreg": ("t", "h_ladder", "r"),
    "greenerr": ("sweep", "axis", "x", "band"),
    "truncate": ("N_ladder", "t", "x"),
}


def _axis_of(ladder):
    ns = {n for n, _ in ladder[:-1]}
    taus = {t for _, t in ladder[:-1]}
    if len(taus) == 1 and len(ns) > 1:
        return "space"
    if len(ns) == 1 and len(taus) > 1:
        return "time"
    return "both"


def _check_experiment(plan):
    """Command-specific preconditions; mirrors the checks inside the drivers."""
    c, p = plan.command, plan.params
    if c == "simulate":
        seed = p.get("seed", 0)
        if int(seed) != seed or seed < 0:
            raise ConfigurationError("[experiment] seed must be a non-negative integer")
    elif c == "converge":
        if "ladder" not in p:
            raise ConfigurationError("[experiment] converge needs a ladder of [n, tau] pairs")
        ladder = [tuple(e) for e in p["ladder"]]
        if any(len(e) != 2 for e in ladder):
            raise ConfigurationError("[experiment] ladder entries must be [n, tau] pairs")
        plan.ladder = dyadic_ladder(plan.params["theta"], plan.params["T"], ladder)
        moment_m_lambda(plan.spec.active_measure, 2.0)
        axis = p.get("axis", _axis_of(ladder))
        if axis not in ("space", "time", "both"):
            raise ConfigurationError(f"[experiment] unknown axis {axis!r}")
        if len(ladder) < 4:
            raise ConfigurationError("[experiment] converge needs at least 3 levels plus the reference")
        for x in p.get("probes", []):
            if not 0.0 <= x < 1.0:
                raise DomainError(f"probe x={x} outside [0, 1)")
    elif c == "intermittency":
        pv = p.get("p", 2.0)
        if not 1.0 < pv < 3.0:
            raise DomainError(f"p={pv} outside (1, 3)")
        check_intermittency_preset(plan.spec, plan.coeff, plan.u0)
        lo, hi = p.get("window", (0.5, 1.0))
        g = plan.grid
        first = max(int(math.ceil(lo * g.m - 1e-9)), 1)
        last = int(math.floor(hi * g.m + 1e-9))
        if not 0 <= lo < hi <= 1 or last - first + 1 < 3:
            raise ConfigurationError("[experiment] window must cover at least 3 time levels in [0, 1]")
    elif c == "pathreg":
        g = plan.grid
        if not plan.coeff.is_bounded:
            raise ConfigurationError(
                f"pathreg needs a bounded coefficient, got family {plan.coeff.family!r}")
        r = p.get("r", -0.6)
        if not r < -0.5:
            raise DomainError(f"order r={r} must be < -1/2")
        h = p.get("h_ladder", [k * g.tau for k in (2, 4, 8, 16)])
        if len(h) < 3:
            raise ConfigurationError("[experiment] h_ladder needs at least 3 points")
        t = p.get("t", 0.5 * g.T)
        for hk in h:
            if not g.tau < hk < min(t, 1.0):
                raise DomainError(f"h={hk} outside (tau, min(t, 1))")
            if t + hk > g.T * (1 + 1e-12):
                raise DomainError(f"t + h = {t + hk} exceeds T={g.T}")
        if len({step_index(t + hk, g.tau) for hk in h}) < len(h):
            raise ConfigurationError("[experiment] h_ladder entries must fall in distinct steps")
    elif c == "greenerr":
        sweep = p.get("sweep")
        if not sweep or len(sweep) < 3:
            raise ConfigurationError("[experiment] greenerr needs a sweep of at least 3 [n, tau] pairs")
        for n, tau in sweep:
            GridSpec(n, tau, p["theta"], tau, p.get("r_bound"), p.get("epsilon", 0.1))
        axis = p.get("axis", "space")
        if axis not in ("space", "time"):
            raise ConfigurationError(f"[experiment] unknown axis {axis!r}")
        scales = [1.0 / n if axis == "space" else math.sqrt(t) for n, t in sweep]
        d = np.diff(scales)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigurationError(f"[experiment] sweep must vary monotonically along {axis}")
    elif c == "truncate":
        g = plan.grid
        N = p.get("N_ladder")
        if not N or len(N) < 2 or any(b <= a for a, b in zip(N, N[1:])) or N[0] <= 1:
            raise ConfigurationError("[experiment] N_ladder must be increasing with entries > 1")
        t = p.get("t", g.T)
        i = step_index(t, g.tau)
        if i < 1 or i > g.m:
            raise DomainError(f"t={t} outside (0, T]")
        if not 0.0 <= p.get("x", 0.0) < 1.0:
            raise DomainError("x outside [0, 1)")


def _plan(config):
    """Build every object and check every precondition; return (plan, violations)."""
    violations = []
    command = config.experiment.get("command")
    if not config.experiment:
        violations.append("required block [experiment] is missing")
    if command is None:
        violations.append("[experiment] command is required, one of " + ", ".join(COMMANDS))
        for b in REQUIRED["simulate"]:
            if not getattr(config, b):
                violations.append(f"required block [{b}] is missing")
        return None, violations
    if command not in COMMANDS:
        return None, [f"[experiment] unknown command {command!r}"]
    for b in REQUIRED[command]:
        if not getattr(config, b):
            violations.append(f"required block [{b}] is missing")
    if violations:
        return None, violations
    params = {k: v for k, v in config.experiment.items() if k != "command"}
    extra = set(params) - set(EXPERIMENT_KEYS[command])
    if extra:
        violations.append(f"[experiment] unknown key(s) for {command}: {', '.join(sorted(extra))}")
    plan = _Plan(command, params)

    def attempt(fn, *args):
        try:
            return fn(*args)
        except (PRECONDITION_ERRORS + (TypeError, ValueError)) as exc:
            violations.append(str(exc))
            return None

    ladder_like = command in ("converge", "greenerr")
    required = {"converge": ("theta", "T"), "greenerr": ("theta",)}.get(command, ("n", "tau", "theta", "T"))
    plan.grid = attempt(_build_grid, config.grid, required)
    if ladder_like:
        for k in ("theta", "r_bound", "epsilon", "T"):
            if k in config.grid:
                params[k] = config.grid[k]
    if "noise" in REQUIRED[command]:
        plan.spec = attempt(_build_noise, config.noise)
        plan.coeff = attempt(_build_coefficient, config.coefficient)
        plan.u0 = attempt(_build_initial, config.initial)
    if "mc" in REQUIRED[command]:
        plan.mc = attempt(_build_mc, config.mc)
    if not violations:
        if plan.u0 is not None and plan.u0.kind == "samples" and plan.grid is not None:
            attempt(plan.u0.sample, plan.grid.n)
        if not violations:
            attempt(_check_experiment, plan)
    return plan, violations


def validate(config):
    """List of violated constraints (empty when the configuration can run).

    Nothing is simulated; every object is constructed and every precondition
    of the selected command is checked.
    """
    if isinstance(config, dict):
        try:
            config = ExperimentConfig.from_dict(config)
        except ConfigurationError as exc:
            return [str(exc)]
    return _plan(config)[1]


# ---------------------------------------------------------------------------
# commands

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _cmd_simulate(plan):
    seed = int(plan.params.get("seed", plan.mc.base_seed if plan.mc else 0))
    noise = sample(plan.grid, plan.spec, seed, keep_jump_log=False)
    sol = run(plan.grid, noise, plan.coeff, plan.u0)
    g = plan.grid
    rows = [(t, x, sol.values[i, j]) for i, t in enumerate(g.times) for j, x in enumerate(g.nodes)]
    summary = {"estimates": {"final_mean": float(sol.values[-1].mean()),
                             "final_max_abs": float(np.abs(sol.values[-1]).max())},
               "verdict": {}}
    extra = {"seeds": [seed], "solution_hash": sol.content_hash()}
    return summary, ("t", "x", "u"), rows, extra


def _band(params, default):
    lo, hi = params.get("band", default)
    return float(lo), float(hi)


def _cmd_converge(plan):
    p = plan.params
    ladder = [(g.n, g.tau) for g in plan.ladder]
    res = convergence_study(p["theta"], plan.coeff, plan.u0, plan.spec, ladder, p["T"],
                            p.get("probes"), plan.mc)
    axis = p.get("axis", _axis_of(ladder))
    verdict = {}
    for name, band in (("space", SPACE_BAND), ("time", TIME_BAND)):
        if name in res.fits and axis in (name, "both"):
            lo, hi = _band(p, band) if axis == name else band
            s = res.fits[name].slope
            verdict[f"{name}_slope_in_band"] = {"value": s, "band": [lo, hi], "pass": lo <= s <= hi}
    rows = [(n, tau, e) for (n, tau), e in zip(res.levels, res.errors)]
    return ({"estimates": res.to_dict(), "verdict": verdict}, ("n", "tau", "error"), rows,
            {"seeds": [plan.mc.base_seed, plan.mc.paths]})


def _cmd_intermittency(plan):
    p = plan.params
    est = estimate_lyapunov(plan.grid, plan.spec, plan.coeff, plan.u0, p.get("p", 2.0), plan.mc,
                            tuple(p.get("window", (0.5, 1.0))))
    verdict = {"lower_slope_positive_2se": {"value": est.lower_slope, "se": est.lower_se,
                                            "pass": bool(est.lower_positive)},
               "log_moment_below_affine_fit_3se": {"pass": bool(est.upper_bounded)}}
    rows = list(zip(est.times, est.log_sup, est.log_inf))
    return ({"estimates": est.to_dict(), "verdict": verdict}, ("t", "log_sup", "log_inf"), rows,
            {"seeds": [plan.mc.base_seed, plan.mc.paths]})


def _cmd_pathreg(plan):
    p, g = plan.params, plan.grid
    h = p.get("h_ladder", [k * g.tau for k in (2, 4, 8, 16)])
    fit = estimate_path_exponent(g, plan.spec, plan.coeff, plan.u0, p.get("t", 0.5 * g.T), h,
                                 p.get("r", -0.6), plan.mc)
    target = 1.0 - fit.half_width
    verdict = {"slope_at_least_one": {"value": fit.slope, "threshold": target,
                                      "pass": fit.slope >= target}}
    return ({"estimates": fit.to_dict(), "verdict": verdict}, ("h", "mean_product"),
            list(fit.points), {"seeds": [plan.mc.base_seed, plan.mc.paths]})


def _cmd_greenerr(plan):
    p = plan.params
    axis = p.get("axis", "space")
    x = p.get("x", 0.0)
    rows = []
    for n, tau in p["sweep"]:
        g = GridSpec(n, tau, p["theta"], tau, p.get("r_bound"), p.get("epsilon", 0.1))
        rows.append((n, tau, green_l2_error(g, x)))
    scales = [1.0 / n if axis == "space" else math.sqrt(tau) for n, tau, _ in rows]
    fit = fit_power_law(list(zip(scales, [r[2] for r in rows])))
    lo, hi = _band(p, GREEN_BAND)
    verdict = {f"{axis}_slope_in_band": {"value": fit.slope, "band": [lo, hi],
                                         "pass": lo <= fit.slope <= hi}}
    return {"estimates": fit.to_dict(), "verdict": verdict}, ("n", "tau", "l2_error"), rows, {}


def _cmd_truncate(plan):
    p, g = plan.params, plan.grid
    res = truncation_study(g, plan.spec, p["N_ladder"], plan.coeff, plan.u0, p.get("t", g.T),
                           p.get("x", 0.0), plan.mc)
    verdict = {"exact_on_small_jump_paths": {"pass": res.exact_on_small_jump_paths()},
               "exact_fraction_nondecreasing": {"pass": res.exact_fraction_monotone()}}
    rows = [(r["N"], r["mean_discrepancy"], r["se"], r["exact_fraction"]) for r in res.rows()]
    return ({"estimates": {"levels": res.rows()}, "verdict": verdict},
            ("N", "mean_discrepancy", "se", "exact_fraction"), rows,
            {"seeds": [plan.mc.base_seed, plan.mc.paths]})


_COMMANDS = {"simulate": _cmd_simulate, "converge": _cmd_converge,
             "intermittency": _cmd_intermittency, "pathreg": _cmd_pathreg,
             "greenerr": _cmd_greenerr, "truncate": _cmd_truncate}


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write(out, config, summary, header, rows, extra):
    os.makedirs(out, exist_ok=True)
    summary = {"command": config.command, "config": config.canonical(), **summary}
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")
    with open(os.path.join(out, "points.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    prov = {"config_hash": config.hash(), "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(), **extra}
    with open(os.path.join(out, "provenance.json"), "w") as fh:
        json.dump(prov, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass
class RunResult:
    status: int
    message: str = ""
    summary: dict = None
    precondition_failure: bool = False


def run_experiment(config, out=None, strict=False, log=None):
    """Run ``config`` and write its artifacts to ``out``.

    Returns
    -------
    RunResult
        ``status`` follows the exit-code convention of :func:`main`;
        ``precondition_failure`` is set when the run stopped on a violated
        precondition rather than during the computation.
    """
    log = log or (lambda msg: None)
    plan, violations = _plan(config)
    if violations:
        log(f"invalid configuration: {violations[0]}")
        return RunResult(1, violations[0], precondition_failure=True)
    try:
        summary, header, rows, extra = _COMMANDS[plan.command](plan)
    except PRECONDITION_ERRORS as exc:
        log(f"precondition failed: {exc}")
        return RunResult(1, str(exc), precondition_failure=True)
    except LevyHeatError as exc:
        log(f"run failed: {exc}")
        return RunResult(1, str(exc))
    verdict = summary["verdict"]
    passed = all(v["pass"] for v in verdict.values())
    summary["pass"] = passed
    if out is not None:
        _write(out, config, summary, header, rows, extra)
    if not passed:
        missed = [k for k, v in verdict.items() if not v["pass"]]
        log("acceptance band missed: " + ", ".join(missed))
        return RunResult(2 if strict else 0, "band missed", summary)
    return RunResult(0, "", summary)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="levyheat", description=__doc__.split("\n\n")[1])
    parser.add_argument("--config", required=True, help="INI or JSON configuration file")
    parser.add_argument("--out", help="output directory (default: levyheat-<command>)")
    parser.add_argument("--seed", type=int, help="base seed, overrides the configuration")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads for Monte Carlo (default: machine parallelism)")
    parser.add_argument("--strict", action="store_true",
                        help="exit with status 2 when an acceptance band is missed")
    args = parser.parse_args(argv)

    def log(msg):
        print(f"levyheat: {msg}", file=sys.stderr)

    try:
        config = ExperimentConfig.load(args.config)
    except (OSError, ValueError, configparser.Error) as exc:
        log(f"cannot read configuration: {exc}")
        return 1
    if args.seed is not None:
        if args.seed < 0:
            log("--seed must be non-negative")
            return 1
        config.mc["base_seed"] = args.seed
        if config.command == "simulate":
            config.experiment["seed"] = args.seed
    out = args.out or f"levyheat-{config.command or 'run'}"
    # worker count never changes results, so it stays out of the hashed configuration
    workers = args.workers or MCConfig.default_workers()
    if config.mc:
        config = ExperimentConfig.from_dict({**config.to_dict(),
                                             "mc": {**config.mc, "workers": workers}})
    result = run_experiment(config, out, args.strict, log)
    if result.status != 1:
        print(json.dumps({"command": config.command, "pass": result.summary.get("pass")}))
    return result.status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
