"""Command-line entry point.

::

    python -m bipartite_spectra solve|simulate|compare|variance --config cfg.json [--jobs K] [--out DIR]

Exit codes: 0 success (a partial density curve is flagged in the JSON, not
an error), 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .fixed_point import SolverError
from .measure import EXACT
from .simulation import (ZERO_TOL, averaged_cdf, decay_slope, ks_distance, part_size,
                         simulate_spectra, variance_experiment)
from .spectral import density, density_moment, extrapolated_moment

log = logging.getLogger("bipartite_spectra")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
KS_THRESHOLD = 0.05


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _csv_writer(fh, cfg_hash: str):
    fh.write(f"# config_hash={cfg_hash}\n")
    return csv.writer(fh, lineterminator="\n")


def _curve(cfg: ExperimentConfig):
    return density(cfg.weight_measure(), cfg.p, cfg.alpha, cfg.lambdas(), cfg.epsilon, cfg.solver)


def _simulate(cfg: ExperimentConfig, jobs: int):
    m = cfg.weight_measure()
    if m.kind != EXACT:
        raise ConfigError("Monte Carlo needs an exact-discrete weight law")
    mc = cfg.monte_carlo
    return simulate_spectra(mc.n, cfg.p, cfg.alpha, m, mc.seed_list(), mc.eig_method, jobs)


def _theory_m2(cfg: ExperimentConfig) -> float:
    return 2 * cfg.alpha * (1 - cfg.alpha) * cfg.p * cfg.weight_measure().moment(2)


def cmd_solve(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> dict:
    h = cfg.config_hash()
    curve = _curve(cfg)
    curve.to_csv(out / "density.csv", comment=f"config_hash={h}")
    summary = {
        "command": "solve",
        "config_hash": h,
        "partial": curve.partial,
        "epsilon": curve.epsilon,
        "mass": curve.mass(),
        "second_moment_window": density_moment(curve, 2),
        "atom_at_zero_hint": curve.atom_at_zero_hint,
        "points": curve.diagnostics,
    }
    _write_json(out / "solve.json", summary)
    return summary


def cmd_simulate(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> dict:
    h = cfg.config_hash()
    mc = cfg.monte_carlo
    runs = _simulate(cfg, jobs)
    with open(out / "eigenvalues.csv", "w", newline="") as fh:
        w = _csv_writer(fh, h)
        w.writerow(["seed", "index", "lambda"])
        for r in runs:
            for i, lam in enumerate(r["eigenvalues"]):
                w.writerow([r["seed"], i, repr(float(lam))])
    lambdas = cfg.lambdas()
    n1 = part_size(mc.n, cfg.alpha)
    per_seed = [{
        "seed": r["seed"],
        "n_edges": r["n_edges"],
        "zero_fraction": float(np.mean(np.abs(r["eigenvalues"]) <= ZERO_TOL)),
        "sum_lambda_sq_over_n": float(np.sum(r["eigenvalues"] ** 2) / mc.n),
        "frobenius_over_n": 2.0 * r["weight_sq_sum"] / mc.n,
    } for r in runs]
    summary = {
        "command": "simulate",
        "config_hash": h,
        "n": mc.n,
        "part_size": n1,
        "seeds": mc.seed_list(),
        "mean_edge_count": float(np.mean([r["n_edges"] for r in runs])),
        "expected_edge_count": n1 * (mc.n - n1) * cfg.p / mc.n,
        "mean_zero_fraction": float(np.mean([s["zero_fraction"] for s in per_seed])),
        "rank_bound_zero_fraction": (mc.n - 2 * min(n1, mc.n - n1)) / mc.n,
        "per_seed": per_seed,
        "cdf_lambdas": lambdas.tolist(),
        "cdf": averaged_cdf([r["eigenvalues"] for r in runs], lambdas).tolist(),
    }
    _write_json(out / "simulate.json", summary)
    return summary


def cmd_compare(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> dict:
    h = cfg.config_hash()
    runs = _simulate(cfg, jobs)
    spectra = [r["eigenvalues"] for r in runs]
    curve = _curve(cfg)
    lambdas = curve.lambdas
    zero_fraction = float(np.mean([np.mean(np.abs(ev) <= ZERO_TOL) for ev in spectra]))
    curve = dataclasses.replace(curve, atom_at_zero_hint=zero_fraction)
    predicted = curve.cdf()
    raw = averaged_cdf(spectra, lambdas)
    smoothed = averaged_cdf(spectra, lambdas, cfg.epsilon)
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = _csv_writer(fh, h)
        w.writerow(["lambda", "empirical_cdf", "empirical_cdf_smoothed", "predicted_cdf", "gap"])
        for row in zip(lambdas, raw, smoothed, predicted, smoothed - predicted):
            w.writerow([f"{v:.12g}" for v in row])
    ks = ks_distance(smoothed, predicted)
    empirical_m2 = float(np.mean([np.sum(ev ** 2) / len(ev) for ev in spectra]))
    theory = _theory_m2(cfg)
    extrapolated, _ = extrapolated_moment(
        cfg.weight_measure(), cfg.p, cfg.alpha, 2, tuple(cfg.epsilon_schedule),
        cfg.lambda_max, cfg.solver, known={cfg.epsilon: curve}
    ) if cfg.p > 0 else (0.0, None)
    verdict = {
        "command": "compare",
        "config_hash": h,
        "ks": ks,
        "ks_raw": ks_distance(raw, predicted),
        "ks_threshold": KS_THRESHOLD,
        "pass": bool(ks <= KS_THRESHOLD and not curve.partial),
        "partial": curve.partial,
        "empirical_m2": empirical_m2,
        "predicted_m2_extrapolated": extrapolated,
        "theory_m2": theory,
        "moment_ratio": empirical_m2 / theory if theory > 0 else None,
        "predicted_moment_ratio": extrapolated / theory if theory > 0 else None,
        "zero_fraction": zero_fraction,
    }
    _write_json(out / "verdict.json", verdict)
    return verdict


def cmd_variance(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> dict:
    h = cfg.config_hash()
    mc = cfg.monte_carlo
    m = cfg.weight_measure()
    if m.kind != EXACT:
        raise ConfigError("Monte Carlo needs an exact-discrete weight law")
    table = variance_experiment(m, cfg.p, cfg.alpha, mc.z, mc.n_list, mc.trials, mc.base_seed, jobs)
    with open(out / "variance.csv", "w", newline="") as fh:
        w = _csv_writer(fh, h)
        w.writerow(["n", "variance", "trials"])
        for row in table:
            w.writerow([row["n"], repr(row["variance"]), row["trials"]])
    slope = decay_slope(table)
    v = [row["variance"] for row in table]
    summary = {
        "command": "variance",
        "config_hash": h,
        "z": [mc.z.real, mc.z.imag],
        "slope": slope if math.isfinite(slope) else None,
        "monotone": bool(all(b < a for a, b in zip(v, v[1:]))),
        "table": table,
    }
    _write_json(out / "variance.json", summary)
    return summary


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate,
            "compare": cmd_compare, "variance": cmd_variance}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bipartite-spectra",
                                 description="Spectra of sparse random bipartite graphs")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="experiment JSON file")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo trials")
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
