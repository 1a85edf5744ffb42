import csv
import json
import math

import numpy as np
import pytest

from bipartite_spectra import cli
from bipartite_spectra.config import (ConfigError, ExperimentConfig, MonteCarloConfig,
                                      dump_config, load_config)
from bipartite_spectra.fixed_point import SolverConfig, SolverError


def small_config(**kw):
    base = dict(
        name="small", p=1.5, alpha=0.3, lambda_max=3.0, lambda_points=31, epsilon=0.2,
        epsilon_schedule=[0.4, 0.2],
        monte_carlo={"n": 120, "seeds": 3, "base_seed": 5, "n_list": [40, 80], "trials": 10},
    )
    base.update(kw)
    return base


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def read_csv(path):
    with open(path) as fh:
        first = fh.readline()
        rows = list(csv.DictReader(fh))
    return first, rows


def run(command, cfg_path, out, *extra):
    return cli.main([command, "--config", str(cfg_path), "--out", str(out), *extra])


def test_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_dict(small_config())
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    dump_config(cfg, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg


def test_hash_ignores_output_dir():
    a = ExperimentConfig.from_dict(small_config(output_dir="x"))
    b = ExperimentConfig.from_dict(small_config(output_dir="y"))
    c = ExperimentConfig.from_dict(small_config(p=1.0))
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_defaults_are_valid():
    cfg = ExperimentConfig().validate()
    assert isinstance(cfg.solver, SolverConfig)
    assert isinstance(cfg.monte_carlo, MonteCarloConfig)
    lams = cfg.lambdas()
    assert len(lams) == 241 and np.array_equal(lams, -lams[::-1])


@pytest.mark.parametrize("bad", [
    {"alpha": 1.0},
    {"lambda_points": 30},
    {"epsilon": 0.0},
    {"epsilon_schedule": [0.1]},
    {"measure": {"type": "atoms", "atoms": []}},
    {"measure": {"type": "cauchy"}},
    {"unknown_key": 1},
    {"solver": {"tol": -1}},
    {"monte_carlo": {"n": 10, "n_list": [5, 10]}, "p": 7.0},
    {"monte_carlo": {"variance_z": [0.0, 1.0]}},
])
def test_validation_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(small_config(**bad))


def test_exit_code_config_errors(tmp_path, capsys):
    assert run("solve", write(tmp_path, small_config(alpha=2.0)), tmp_path / "o") == 2
    assert run("solve", tmp_path / "missing.json", tmp_path / "o") == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert run("solve", tmp_path / "broken.json", tmp_path / "o") == 2
    assert run("simulate", write(tmp_path, small_config(measure={"type": "gaussian"})),
               tmp_path / "o") == 2
    assert run("solve", write(tmp_path, small_config()), tmp_path / "o", "--jobs", "0") == 2


def test_exit_code_numerical_failure(tmp_path, monkeypatch):
    def boom(cfg, out, jobs=1):
        raise SolverError("synthetic")
    monkeypatch.setitem(cli.COMMANDS, "solve", boom)
    assert run("solve", write(tmp_path, small_config()), tmp_path / "o") == 3


def test_solve_p0_is_poisson(tmp_path):
    assert run("solve", write(tmp_path, small_config(p=0.0)), tmp_path) == 0
    first, rows = read_csv(tmp_path / "density.csv")
    assert first.startswith("# config_hash=")
    lam = np.array([float(r["lambda"]) for r in rows])
    rho = np.array([float(r["rho"]) for r in rows])
    assert np.max(np.abs(rho - 0.2 / (math.pi * (lam ** 2 + 0.04)))) < 1e-8
    meta = json.loads((tmp_path / "solve.json").read_text())
    assert meta["partial"] is False
    assert len(meta["points"]) == 31
    assert {"iterations", "residual", "continuation_depth"} <= set(meta["points"][0])


def test_solve_deterministic(tmp_path):
    path = write(tmp_path, small_config(alpha=0.5))
    run("solve", path, tmp_path / "a")
    run("solve", path, tmp_path / "b")
    for name in ("density.csv", "solve.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_alpha_swap(tmp_path):
    run("solve", write(tmp_path, small_config(alpha=0.3), "a.json"), tmp_path / "a")
    run("solve", write(tmp_path, small_config(alpha=0.7), "b.json"), tmp_path / "b")
    _, ra = read_csv(tmp_path / "a" / "density.csv")
    _, rb = read_csv(tmp_path / "b" / "density.csv")
    assert [r["lambda"] for r in ra] == [r["lambda"] for r in rb]
    diff = max(abs(float(x["rho"]) - float(y["rho"])) for x, y in zip(ra, rb))
    assert diff < 1e-8


def test_simulate_outputs(tmp_path):
    path = write(tmp_path, small_config())
    assert run("simulate", path, tmp_path / "a") == 0
    assert run("simulate", path, tmp_path / "b", "--jobs", "2") == 0
    for name in ("eigenvalues.csv", "simulate.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    first, rows = read_csv(tmp_path / "a" / "eigenvalues.csv")
    assert first.startswith("# config_hash=") and len(rows) == 3 * 120
    assert list(rows[0]) == ["seed", "index", "lambda"]
    meta = json.loads((tmp_path / "a" / "simulate.json").read_text())
    for s in meta["per_seed"]:
        assert s["sum_lambda_sq_over_n"] == pytest.approx(s["frobenius_over_n"], rel=1e-10)
        assert s["zero_fraction"] >= meta["rank_bound_zero_fraction"]
    assert len(meta["cdf"]) == len(meta["cdf_lambdas"]) == 31


def test_simulate_complete_graph(tmp_path):
    cfg = small_config(p=40.0, monte_carlo={"n": 40, "seeds": 2, "n_list": [40, 40]})
    run("simulate", write(tmp_path, cfg), tmp_path)
    meta = json.loads((tmp_path / "simulate.json").read_text())
    assert meta["mean_edge_count"] == 12 * 28


def test_compare_p0(tmp_path):
    # both sides are a Cauchy law at 0; what is left is the trapezoid error
    # of the predicted CDF, second order in the lambda step
    cfg = small_config(p=0.0, lambda_points=121)
    assert run("compare", write(tmp_path, cfg), tmp_path) == 0
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["ks"] < 2e-3
    assert verdict["moment_ratio"] is None
    first, rows = read_csv(tmp_path / "comparison.csv")
    assert first.startswith("# config_hash=" + verdict["config_hash"])
    assert list(rows[0]) == ["lambda", "empirical_cdf", "empirical_cdf_smoothed",
                             "predicted_cdf", "gap"]


def test_compare_small(tmp_path):
    assert run("compare", write(tmp_path, small_config()), tmp_path) == 0
    v = json.loads((tmp_path / "verdict.json").read_text())
    assert {"ks", "ks_raw", "moment_ratio", "predicted_m2_extrapolated", "pass"} <= set(v)
    assert 0 <= v["ks"] <= v["ks_raw"] + 1


def test_variance_outputs(tmp_path):
    assert run("variance", write(tmp_path, small_config(p=0.0)), tmp_path) == 0
    meta = json.loads((tmp_path / "variance.json").read_text())
    assert all(row["variance"] == 0 for row in meta["table"])
    assert meta["slope"] is None
    first, rows = read_csv(tmp_path / "variance.csv")
    assert first.startswith("# config_hash=")
    assert [int(r["n"]) for r in rows] == [40, 80]


def test_variance_slope_reported(tmp_path):
    run("variance", write(tmp_path, small_config()), tmp_path)
    meta = json.loads((tmp_path / "variance.json").read_text())
    assert math.isfinite(meta["slope"])
