"""Edge-weight distributions.

A :class:`WeightMeasure` is always stored as a finite list of atoms.  Continuous
laws are discretised by Gauss quadrature when they are built; such measures
can be integrated against but not sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

EXACT = "exact-discrete"
QUADRATURE = "quadrature-of-continuous"

MERGE_TOL = 1e-12
MAX_MOMENT_ORDER = 8


@dataclass(frozen=True)
class WeightMeasure:
    values: tuple[float, ...]
    masses: tuple[float, ...]
    kind: str = EXACT

    def __post_init__(self):
        if len(self.values) == 0 or len(self.values) != len(self.masses):
            raise ValueError("measure needs at least one atom")
        if any(m < 0 for m in self.masses):
            raise ValueError("masses must be nonnegative")
        if abs(sum(self.masses) - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1")
        if self.kind not in (EXACT, QUADRATURE):
            raise ValueError(f"unknown measure kind {self.kind!r}")

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.masses))

    @property
    def max_abs(self) -> float:
        return max(abs(v) for v, m in self.atoms if m > 0)

    def moment(self, k: int) -> float:
        return moment(self, k)

    def __len__(self):
        return len(self.values)


def _merge(atoms: Iterable[tuple[float, float]]) -> tuple[list[float], list[float]]:
    merged: list[list[float]] = []
    for value, mass in sorted(atoms):
        if merged and abs(value - merged[-1][0]) <= MERGE_TOL:
            merged[-1][1] += mass
        else:
            merged.append([float(value), float(mass)])
    return [v for v, _ in merged], [m for _, m in merged]


def make_measure(atoms: Iterable[tuple[float, float]], kind: str = EXACT) -> WeightMeasure:
    """Build a measure from ``(value, mass)`` pairs.

    Masses are renormalised to sum to one and atoms closer than ``1e-12``
    are merged.  The second absolute moment must be positive.
    """
    atoms = [(float(v), float(m)) for v, m in atoms]
    if not atoms:
        raise ValueError("empty atom list")
    if any(not np.isfinite(v) or not np.isfinite(m) for v, m in atoms):
        raise ValueError("atom values and masses must be finite")
    if any(m < 0 for _, m in atoms):
        raise ValueError("masses must be nonnegative")
    total = sum(m for _, m in atoms)
    if total <= 0:
        raise ValueError("all masses are zero")
    values, masses = _merge((v, m / total) for v, m in atoms if m > 0)
    # exact renormalisation after merging
    s = sum(masses)
    masses = [m / s for m in masses]
    masses[-1] = 1.0 - sum(masses[:-1])
    measure = WeightMeasure(tuple(values), tuple(masses), kind)
    if moment(measure, 2) <= 0:
        raise ValueError("second absolute moment must be positive")
    return measure


def point_mass(value: float = 1.0) -> WeightMeasure:
    return make_measure([(value, 1.0)])


def rademacher(scale: float = 1.0) -> WeightMeasure:
    """Symmetric two-point law on ``{-scale, +scale}``."""
    return make_measure([(-scale, 0.5), (scale, 0.5)])


def gaussian(std: float = 1.0, mean: float = 0.0, nodes: int = 64) -> WeightMeasure:
    """Gauss-Hermite discretisation of ``N(mean, std^2)``."""
    if std <= 0:
        raise ValueError("std must be positive")
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    return make_measure(zip(mean + std * x, w), kind=QUADRATURE)


def uniform(low: float = -1.0, high: float = 1.0, nodes: int = 64) -> WeightMeasure:
    """Gauss-Legendre discretisation of the uniform law on ``[low, high]``."""
    if not high > low:
        raise ValueError("need high > low")
    x, w = np.polynomial.legendre.leggauss(nodes)
    return make_measure(zip(low + (high - low) * (x + 1) / 2, w / 2), kind=QUADRATURE)


def from_spec(spec: Mapping) -> WeightMeasure:
    """Build a measure from its config dictionary.

    Accepted forms::

        {"type": "atoms", "atoms": [[value, mass], ...]}
        {"type": "gaussian", "std": s, "mean": 0.0, "nodes": n}
        {"type": "uniform", "low": a, "high": b, "nodes": n}
        {"type": "two_point", "value": a}
    """
    kind = spec.get("type")
    if kind == "atoms":
        return make_measure([tuple(a) for a in spec["atoms"]])
    if kind == "gaussian":
        return gaussian(spec.get("std", 1.0), spec.get("mean", 0.0), spec.get("nodes", 64))
    if kind == "uniform":
        return uniform(spec.get("low", -1.0), spec.get("high", 1.0), spec.get("nodes", 64))
    if kind == "two_point":
        return rademacher(spec.get("value", 1.0))
    raise ValueError(f"unknown measure type {kind!r}")


def moment(m: WeightMeasure, k: int) -> float:
    """Absolute moment ``X_k = sum mass * |value|**k``."""
    if int(k) != k or k < 0 or k > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order must be an integer in [0, {MAX_MOMENT_ORDER}]")
    v = np.abs(np.asarray(m.values))
    return float(np.dot(m.masses, v ** int(k)))


def truncate(m: WeightMeasure, T: float) -> WeightMeasure:
    """Replace every atom with value ``>= T`` by ``T``.

    Values below ``T`` (including all negative ones) are left alone.
    """
    if not T > 0:
        raise ValueError("truncation level must be positive")
    atoms = [(v if v < T else T, w) for v, w in m.atoms]
    return make_measure(atoms, kind=m.kind)


def integrate_abs(m: WeightMeasure, phi: Callable[[np.ndarray], np.ndarray]) -> complex:
    """``sum mass * |a| * phi(|a|)`` over the atoms."""
    a = np.abs(np.asarray(m.values, dtype=float))
    vals = np.asarray(phi(a), dtype=complex) * np.ones_like(a)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite at some atom")
    return complex(np.sum(np.asarray(m.masses) * a * vals))


def sample(m: WeightMeasure, seed, n: int) -> np.ndarray:
    """``n`` i.i.d. draws; the sign of each atom is kept."""
    if m.kind != EXACT:
        raise ValueError("cannot sample a quadrature representation of a continuous law")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    values = np.asarray(m.values)
    if len(values) == 1:
        return np.full(n, values[0])
    return values[rng.choice(len(values), size=n, p=np.asarray(m.masses))]
