import csv
import json
import random

import numpy as np
import pytest

from levyheat.cli import COMMANDS, ExperimentConfig, main, run_experiment, validate

BASE = {
    "grid": {"n": 8, "tau": 0.01, "theta": 1.0, "T": 0.1},
    "noise": {"centered": True, "kind": "atomic", "atoms": [[0.05, 400.0], [-0.05, 400.0]]},
    "coefficient": {"family": "linear", "gamma": 1.0},
    "initial": {"kind": "constant", "value": 1.0},
    "mc": {"paths": 100},
}


def config(command, **blocks):
    d = {k: dict(v) for k, v in BASE.items()}
    d["experiment"] = {"command": command}
    for k, v in blocks.items():
        d[k] = {**d.get(k, {}), **v}
    return ExperimentConfig.from_dict(d)


def write_ini(tmp_path, cfg):
    p = tmp_path / "run.ini"
    p.write_text(cfg.to_ini())
    return str(p)


def test_round_trip_encodings():
    cfg = config("converge", experiment={"ladder": [[8, 0.01], [16, 0.01], [32, 0.01], [64, 0.01]],
                                         "probes": [0.0, 0.1 + 0.2]},
                 grid={"theta": 1.0, "T": 0.05, "epsilon": 0.1})
    assert ExperimentConfig.from_ini(cfg.to_ini()) == cfg
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    assert ExperimentConfig.from_ini(cfg.to_ini()).experiment["probes"][1] == 0.1 + 0.2


def test_ini_accepts_bare_words():
    text = "[experiment]\ncommand = simulate\n\n[grid]\nn = 8\ntau = 0.01\ntheta = 1\nT = 0.1\n"
    cfg = ExperimentConfig.from_ini(text)
    assert cfg.command == "simulate" and cfg.grid["n"] == 8


def test_validate_examples():
    bad = config("simulate", grid={"n": 10, "tau": 0.006, "theta": 0.0, "T": 0.06})
    v = validate(bad)
    assert len(v) == 1 and "n^2*tau <= r_bound" in v[0]
    ok = config("simulate", grid={"n": 500, "tau": 0.3, "theta": 0.75, "T": 0.3})
    assert validate(ok) == []
    empty = validate(ExperimentConfig())
    assert any("[experiment]" in v for v in empty)
    assert any("[grid]" in v for v in empty) and any("[noise]" in v for v in empty)


def test_intermittency_rejects_bounded_sigma(tmp_path):
    cfg = config("intermittency", coefficient={"family": "bounded", "beta": 1.0, "gamma": 0.0})
    cfg.coefficient = {"family": "bounded", "beta": 1.0}
    res = run_experiment(cfg, str(tmp_path))
    assert res.status == 1 and "J0" in res.message


def test_converge_non_dyadic(tmp_path):
    cfg = config("converge", experiment={"ladder": [[8, 0.01], [16, 0.01], [24, 0.01], [48, 0.01]]},
                 grid={"theta": 1.0, "T": 0.05})
    cfg.grid = {"theta": 1.0, "T": 0.05}
    res = run_experiment(cfg, str(tmp_path))
    assert res.status == 1 and "dyadic" in res.message


def test_simulate_deterministic_heat_decay(tmp_path):
    cfg = config("simulate", noise={"kind": "zero", "deterministic": True, "b": 0.0},
                 coefficient={"family": "constant", "beta": 0.0},
                 initial={"kind": "mode", "l": 1})
    cfg.noise = {"kind": "zero", "deterministic": True, "b": 0.0}
    cfg.coefficient = {"family": "constant", "beta": 0.0}
    cfg.initial = {"kind": "mode", "l": 1}
    out = tmp_path / "sim"
    assert main(["--config", write_ini(tmp_path, cfg), "--out", str(out)]) == 0
    with open(out / "points.csv") as fh:
        rows = list(csv.DictReader(fh))
    first = [float(r["u"]) for r in rows if float(r["t"]) == 0.0]
    last = [float(r["u"]) for r in rows if abs(float(r["t"]) - 0.1) < 1e-12]
    from levyheat.spectral import GridSpec, amplification
    a = amplification(GridSpec(8, 0.01, 1.0, 0.1)).a[1]
    assert np.allclose(last, a ** 10 * np.array(first), atol=1e-15)
    prov = json.loads((out / "provenance.json").read_text())
    assert {"config_hash", "version", "timestamp", "seeds", "solution_hash"} <= set(prov)
    # 17 significant digits
    assert any(len(r["u"].replace("-", "").replace(".", "").lstrip("0")) >= 15 for r in rows[8:])


def test_artifacts_bitwise_reproducible(tmp_path):
    cfg = config("pathreg", experiment={"t": 0.32, "r": -0.6}, grid={"T": 0.48}, coefficient={"family": "bounded",
                                                                            "beta": 1.0})
    cfg.coefficient = {"family": "bounded", "beta": 1.0}
    path = write_ini(tmp_path, cfg)
    outs = []
    for k, workers in enumerate((1, 2)):
        out = tmp_path / f"o{k}"
        assert main(["--config", path, "--out", str(out), "--workers", str(workers)]) in (0, 2)
        outs.append(out)
    for name in ("summary.json", "points.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    p0, p1 = (json.loads((o / "provenance.json").read_text()) for o in outs)
    p0.pop("timestamp"), p1.pop("timestamp")
    assert p0 == p1


def test_seed_override_and_strict(tmp_path):
    cfg = config("greenerr", experiment={"sweep": [[8, 0.01], [16, 0.01], [32, 0.01]],
                                         "band": [5.0, 6.0]})
    cfg.grid = {"theta": 1.0}
    for k in ("noise", "coefficient", "initial", "mc"):
        setattr(cfg, k, {})
    path = write_ini(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path / "a")]) == 0
    assert main(["--config", path, "--out", str(tmp_path / "b"), "--strict"]) == 2
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert summary["pass"] is False


def test_bad_config_file(tmp_path):
    p = tmp_path / "x.ini"
    p.write_text("not an ini")
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == 1


def test_each_command_runs(tmp_path):
    cases = {
        "simulate": config("simulate"),
        "converge": config("converge", experiment={"ladder": [[4, 0.01], [8, 0.01], [16, 0.01],
                                                              [32, 0.01]]}),
        "intermittency": config("intermittency", experiment={"p": 2.0}),
        "pathreg": config("pathreg", experiment={"t": 0.32}, grid={"T": 0.48}),
        "greenerr": config("greenerr", experiment={"sweep": [[8, 0.001], [16, 0.001], [32, 0.001]]}),
        "truncate": config("truncate", experiment={"N_ladder": [2, 10]}),
    }
    cases["converge"].grid = {"theta": 1.0, "T": 0.05}
    cases["pathreg"].coefficient = {"family": "bounded", "beta": 1.0}
    cases["greenerr"].grid = {"theta": 1.0}
    for cmd, cfg in cases.items():
        assert validate(cfg) == [], cmd
        res = run_experiment(cfg, str(tmp_path / cmd))
        assert res.status == 0, (cmd, res.message)
        assert (tmp_path / cmd / "summary.json").exists()
    assert set(cases) == set(COMMANDS)


# -- fuzzing: validate passes iff the run does not stop on a precondition ---

def pick(rng, good, bad, p_bad=0.12):
    return rng.choice(bad) if rng.random() < p_bad else rng.choice(good)


def random_config(rng):
    """Mostly valid configurations with one occasional defect per block."""
    cmd = rng.choice(COMMANDS)
    theta = rng.choice([0.0, 0.25, 0.5, 1.0])
    n = pick(rng, [4, 8], [2, 16])
    tau = pick(rng, [0.001, 0.005, 0.01], [0.02, 0.04])
    T = tau * rng.choice([8, 20]) + pick(rng, [0.0], [0.0031])
    grid = {"n": n, "tau": tau, "theta": theta, "T": T}
    noise = pick(rng, [
        {"centered": True, "kind": "atomic", "atoms": [[0.1, 50.0], [-0.1, 50.0]]},
        {"b": 0.5, "kind": "atomic", "atoms": [[0.2, 3.0]]},
        {"b": 0.0, "kind": "exponential", "rate": 20.0, "scale": 0.2},
        {"b": 0.0, "kind": "zero", "deterministic": True},
    ], [
        {"centered": True, "kind": "pareto", "rate": 2.0, "scale": 1.0, "index": 1.5},
        {"b": 0.0, "kind": "zero"},
        {"kind": "atomic", "atoms": [[0.1, 5.0]]},
    ])
    coeff = pick(rng, [{"family": "linear", "gamma": 1.0}, {"family": "bounded", "beta": 1.0},
                       {"family": "constant", "beta": 0.5}],
                 [{"family": "cubic"}, {"family": "linear", "gamma": 0.0}])
    initial = pick(rng, [{"kind": "constant", "value": 1.0}, {"kind": "mode", "l": 1}],
                   [{"kind": "constant", "value": -1.0}])
    mc = {"paths": pick(rng, [100], [50], 0.08)}
    exp = {"command": cmd}
    if cmd == "converge":
        grid = {"theta": theta, "T": T}
        exp["ladder"] = pick(rng, [[[4, tau], [8, tau], [16, tau], [32, tau]]],
                             [[[4, tau], [8, tau], [12, tau], [16, tau]], [[4, tau], [8, tau]]])
    elif cmd == "intermittency":
        exp["p"] = pick(rng, [2.0], [3.5])
    elif cmd == "pathreg":
        grid["T"] = 48 * tau
        exp["t"] = pick(rng, [32 * tau], [T / 10])
        exp["r"] = pick(rng, [-0.6], [-0.4])
    elif cmd == "greenerr":
        grid = {"theta": theta}
        exp["sweep"] = pick(rng, [[[8, 0.001], [16, 0.001], [32, 0.001]]],
                            [[[8, 0.01], [16, 0.01], [32, 0.01]], [[8, 0.001]]])
    elif cmd == "truncate":
        exp["N_ladder"] = pick(rng, [[2, 10]], [[10, 2], [0.5, 2]])
    if rng.random() < 0.05:
        grid = {}
    return ExperimentConfig.from_dict({"experiment": exp, "grid": grid, "noise": noise,
                                       "coefficient": coeff, "initial": initial, "mc": mc})


def test_validate_matches_run_on_random_configs(tmp_path):
    rng = random.Random(1234)
    n_valid = 0
    for k in range(200):
        cfg = random_config(rng)
        ok = validate(cfg) == []
        res = run_experiment(cfg, None)
        assert ok == (not res.precondition_failure), (cfg.to_dict(), validate(cfg), res.message)
        n_valid += ok
    # the generator must exercise both outcomes
    assert 10 <= n_valid <= 190
