"""Limiting spectral density of sparse weighted random bipartite graphs.

The analytic side solves the functional fixed-point equations for the pair
(f1, f2) and turns them into the Stieltjes transform and a smoothed density;
the Monte Carlo side samples the ensemble and measures the same quantities.
"""

from .fixed_point import (BallExitError, ConvergenceError, EnsembleParams, GridSpec,
                          SolverConfig, SolverError, SolverState, apply_Fz, apply_L,
                          solve_fixed_point)
from .measure import (WeightMeasure, gaussian, make_measure, moment, point_mass, rademacher,
                      truncate, uniform)
from .special import bessel_j1, exp_resolvent_check
from .spectral import DensityCurve, density, density_moment, extrapolated_moment, stieltjes_g
from .simulation import eigenvalues, empirical_f, sample_graph, variance_experiment

__all__ = [
    "BallExitError", "ConvergenceError", "DensityCurve", "EnsembleParams", "GridSpec",
    "SolverConfig", "SolverError", "SolverState", "WeightMeasure", "apply_Fz", "apply_L",
    "bessel_j1", "density", "density_moment", "eigenvalues", "empirical_f",
    "exp_resolvent_check", "extrapolated_moment", "gaussian", "make_measure", "moment",
    "point_mass", "rademacher", "sample_graph", "solve_fixed_point", "stieltjes_g",
    "truncate", "uniform", "variance_experiment",
]
