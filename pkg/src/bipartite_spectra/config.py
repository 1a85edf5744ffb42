"""Experiment configuration: dataclasses, JSON round-trip and validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fixed_point import SolverConfig
from .measure import WeightMeasure, from_spec


class ConfigError(ValueError):
    pass


@dataclass
class MonteCarloConfig:
    n: int = 2000
    seeds: int = 20
    base_seed: int = 20240101
    eig_method: str = "dense"
    n_list: list = field(default_factory=lambda: [250, 500, 1000, 2000])
    trials: int = 200
    variance_z: list = field(default_factory=lambda: [1.0, 0.0])  # [Re z, Im z]

    @property
    def z(self) -> complex:
        return complex(*self.variance_z)

    def seed_list(self) -> list[int]:
        return [self.base_seed + k for k in range(self.seeds)]


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    measure: dict = field(default_factory=lambda: {"type": "atoms", "atoms": [[1.0, 1.0]]})
    p: float = 2.0
    alpha: float = 0.5
    lambda_max: float = 6.0
    lambda_points: int = 241
    epsilon: float = 0.05
    epsilon_schedule: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    solver: SolverConfig = field(default_factory=SolverConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    output_dir: str = "results"

    def weight_measure(self) -> WeightMeasure:
        return from_spec(self.measure)

    def lambdas(self) -> np.ndarray:
        half = np.linspace(0.0, self.lambda_max, (self.lambda_points + 1) // 2)
        return np.concatenate((-half[:0:-1], half))

    def validate(self) -> "ExperimentConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        try:
            self.weight_measure()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad measure: {exc}") from exc
        need(isinstance(self.p, (int, float)) and math.isfinite(self.p) and self.p >= 0,
             "p must be a finite number >= 0")
        need(isinstance(self.alpha, (int, float)) and 0 < self.alpha < 1,
             "alpha must lie in (0, 1)")
        need(self.lambda_max > 0, "lambda_max must be positive")
        need(isinstance(self.lambda_points, int) and self.lambda_points >= 3
             and self.lambda_points % 2 == 1, "lambda_points must be an odd integer >= 3")
        need(self.epsilon > 0, "epsilon must be positive")
        sched = list(self.epsilon_schedule)
        need(len(sched) >= 2 and all(e > 0 for e in sched) and len(set(sched)) == len(sched),
             "epsilon_schedule needs at least two distinct positive values")
        mc = self.monte_carlo
        need(isinstance(mc.n, int) and mc.n >= 2, "monte_carlo.n must be an integer >= 2")
        need(isinstance(mc.seeds, int) and mc.seeds >= 1, "monte_carlo.seeds must be >= 1")
        need(isinstance(mc.base_seed, int) and mc.base_seed >= 0, "base_seed must be a nonnegative int")
        need(mc.eig_method in ("dense", "svd"), "eig_method must be 'dense' or 'svd'")
        need(len(mc.n_list) >= 2 and all(isinstance(n, int) and n >= 2 for n in mc.n_list),
             "n_list needs at least two integers >= 2")
        need(isinstance(mc.trials, int) and mc.trials >= 2, "trials must be >= 2")
        need(len(mc.variance_z) == 2 and mc.variance_z[0] > 0, "variance_z must be [re > 0, im]")
        need(self.p <= min([mc.n] + list(mc.n_list)), "p must not exceed the graph size")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        try:
            solver = SolverConfig(**data.pop("solver", {}))
            mc = MonteCarloConfig(**data.pop("monte_carlo", {}))
            cfg = cls(solver=solver, monte_carlo=mc, **data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form; the output directory is not part of it."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def dump_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
