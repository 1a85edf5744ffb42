"""From a solved pair (f1, f2) to the Stieltjes transform and smoothed density.

Conventions: ``g(w) = int dsigma(lambda) / (lambda - w)`` for ``Im w > 0`` and
``rho_eps(lambda) = Im g(lambda + i eps) / pi``.  The solver works at
``z = -i w``, i.e. ``z = eps - i lambda``, and ``g(w) = i h(-i w)``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fixed_point import (ConvergenceError, EnsembleParams, SolverConfig, SolverState,
                          grid_for, solve_fixed_point)
from .measure import WeightMeasure

log = logging.getLogger(__name__)

# continuation ladder, as multiples of the target epsilon
CONTINUATION = tuple(4.0 * 2.0 ** (-k / 2) for k in range(5))


def h_components(state: SolverState, params: EnsembleParams) -> tuple[complex, complex]:
    """``h_i = -X2^{-1} d/du f_i(u)|_{u=0}`` from the small-u limit of the operator.

    Expanding ``J1(x) ~ x / 2`` inside the operator gives
    ``h1 = int_0^inf exp(-z v + (1-alpha) p (f2(v) - 1)) dv`` and the same
    for h2 with ``alpha p`` and f1; the second moment cancels.
    """
    if not state.converged:
        raise ConvergenceError("state has not converged", state)
    grid = state.grid
    w1, w2 = params.weights
    base = 2.0 * grid.weights * grid.t
    ez = -state.z * grid.t ** 2
    h1 = np.dot(base, np.exp(ez + w1 * (state.f2[1:] - 1.0)))
    h2 = np.dot(base, np.exp(ez + w2 * (state.f1[1:] - 1.0)))
    return complex(h1), complex(h2)


def h_total(h1: complex, h2: complex, alpha: float) -> complex:
    return alpha * h1 + (1.0 - alpha) * h2


def _g_from_state(state: SolverState, params: EnsembleParams) -> complex:
    h1, h2 = h_components(state, params)
    return 1j * h_total(h1, h2, params.alpha)


def solve_at(w: complex, measure: WeightMeasure, p: float, alpha: float,
             config: SolverConfig = SolverConfig(), initial=None, grid=None):
    """Solve at ``z = -i w`` and return ``(g(w), state)``."""
    w = complex(w)
    if not w.imag > 0:
        raise ValueError("need Im w > 0")
    params = EnsembleParams(p, alpha, -1j * w)
    state = solve_fixed_point(params, measure, grid, config, initial)
    return _g_from_state(state, params), state


def stieltjes_g(w: complex, measure: WeightMeasure, p: float, alpha: float,
                config: SolverConfig = SolverConfig()) -> complex:
    """Stieltjes transform of the limiting spectral measure at ``Im w > 0``."""
    return solve_at(w, measure, p, alpha, config)[0]


@dataclass(frozen=True, eq=False)
class DensityCurve:
    lambdas: np.ndarray
    rho: np.ndarray
    epsilon: float
    converged: np.ndarray
    atom_at_zero_hint: float = math.nan
    diagnostics: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return not bool(np.all(self.converged))

    def mass(self) -> float:
        return float(np.trapezoid(self.rho, self.lambdas))

    def cdf(self) -> np.ndarray:
        """Smoothed CDF on the curve's grid.

        Mass outside the window is split evenly between the two tails, which
        is exact for the symmetric curves produced here.
        """
        steps = np.diff(self.lambdas) * (self.rho[1:] + self.rho[:-1]) / 2
        inner = np.concatenate(([0.0], np.cumsum(steps)))
        tail = max(0.0, (1.0 - inner[-1]) / 2)
        return tail + inner

    def to_csv(self, path, comment: str | None = None):
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lambda", "rho", "epsilon", "converged"])
            for lam, r, ok in zip(self.lambdas, self.rho, self.converged):
                writer.writerow([f"{lam:.10g}", f"{r:.12e}", f"{self.epsilon:.10g}", int(ok)])


def symmetric_grid(half_width: float, step: float) -> np.ndarray:
    """``[-half_width, half_width]`` with spacing close to ``step``, 0 included."""
    k = int(math.ceil(half_width / step - 1e-9))
    half = np.linspace(0.0, half_width, k + 1)
    return np.concatenate((-half[:0:-1], half))


def _solve_point(measure, p, alpha, lam, eps, config, warm):
    params = EnsembleParams(p, alpha, eps - 1j * lam)
    grid = grid_for(params.z, measure, config)
    try:
        return solve_fixed_point(params, measure, grid, config, warm), 0
    except ConvergenceError as exc:
        log.info("lambda=%g: %s; continuing from larger epsilon", lam, exc)
    start = None
    for depth, factor in enumerate(CONTINUATION, 1):
        try:
            start = solve_fixed_point(params.with_z(factor * eps - 1j * lam), measure, grid,
                                      config, start)
        except ConvergenceError as exc:
            log.warning("lambda=%g: continuation failed at eps=%g", lam, factor * eps)
            return exc.state, depth
    return start, len(CONTINUATION)


def density(measure: WeightMeasure, p: float, alpha: float, lambdas, epsilon: float,
            config: SolverConfig = SolverConfig()) -> DensityCurve:
    """Smoothed density ``Im g(lambda + i eps) / pi`` on a symmetric grid.

    Points are solved from the one nearest 0 outward in both directions, each
    warm-started from its neighbour.  If a point fails it is re-solved by
    lowering epsilon from ``4 eps`` in geometric steps.  Points that still
    fail keep their last iterate and are flagged in ``converged``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if lambdas.ndim != 1 or np.any(np.diff(lambdas) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    if not np.allclose(lambdas, -lambdas[::-1], atol=1e-12, rtol=0):
        raise ValueError("lambda grid must be symmetric about 0")
    n = len(lambdas)
    rho = np.empty(n)
    ok = np.zeros(n, dtype=bool)
    diags: list = [None] * n
    i0 = int(np.argmin(np.abs(lambdas)))
    anchor = None
    for sweep in (range(i0, n), range(i0 - 1, -1, -1)):
        warm = anchor
        for i in sweep:
            lam = lambdas[i]
            state, depth = _solve_point(measure, p, alpha, lam, epsilon, config, warm)
            params = EnsembleParams(p, alpha, state.z)
            ok[i] = state.converged and abs(state.z.real - epsilon) < 1e-15
            if ok[i]:
                g = _g_from_state(state, params)
                warm = state
            else:
                # unconverged: report the last iterate's value, flagged
                g = 1j * h_total(*_h_unchecked(state, params), alpha)
            rho[i] = g.imag / math.pi
            diags[i] = {"lambda": float(lam), "iterations": int(state.iterations),
                        "residual": float(state.residual), "continuation_depth": depth,
                        "nodes": int(state.grid.n), "converged": bool(ok[i])}
            if i == i0:
                anchor = state if ok[i] else None
    bad = ok & (rho < -1e-12)
    if np.any(bad):
        log.warning("negative density %.2e at converged points", rho[bad].min())
    return DensityCurve(lambdas, np.maximum(rho, 0.0), float(epsilon), ok,
                        abs(1.0 - 2.0 * alpha), diags)


def _h_unchecked(state, params):
    forced = SolverState(state.grid, state.f1, state.f2, state.z, 0.0, state.iterations, 1.0)
    return h_components(forced, params)


def density_moment(curve: DensityCurve, k: int) -> float:
    """Trapezoid ``int lambda^k rho_eps`` over the curve's window (even k only)."""
    if k < 0 or k % 2:
        raise ValueError("only even moments are meaningful for a smoothed symmetric density")
    return float(np.trapezoid(curve.lambdas ** k * curve.rho, curve.lambdas))


def extrapolated_moment(measure: WeightMeasure, p: float, alpha: float, k: int = 2,
                        epsilons=(0.2, 0.1, 0.05), half_width: float = 6.0,
                        config: SolverConfig = SolverConfig(), points_per_eps: float = 1.0,
                        known=None):
    """Richardson extrapolation of the k-th window moment to ``eps -> 0``.

    Each density uses a lambda step close to ``eps / points_per_eps``.
    ``known`` may map epsilon to an already computed curve, which is then
    used as is.  Returns the extrapolated value and the list of curves.
    """
    known = known or {}
    curves = []
    for e in epsilons:
        c = known.get(e)
        if c is None:
            c = density(measure, p, alpha, symmetric_grid(half_width, e / points_per_eps), e, config)
        curves.append(c)
    moments = [density_moment(c, k) for c in curves]
    coeffs = np.polyfit(np.asarray(epsilons, dtype=float), moments, len(epsilons) - 1)
    return float(np.polyval(coeffs, 0.0)), curves
