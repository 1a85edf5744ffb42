"""Empirical contraction constant of the paired map as Re z decreases.

For each Re z the largest Lipschitz ratio over random pairs in the ball of
radius 2 is reported, together with whether plain Picard iteration from
f = 1 converges.  This locates the empirical threshold below the
sufficient bound Re z >= 4 p X1 + 4.

    python scripts/contraction_scan.py --p 2 --alpha 0.5
"""

import argparse

import numpy as np

from bipartite_spectra.fixed_point import (BALL_RADIUS, ConvergenceError, EnsembleParams,
                                           SolverConfig, contraction_threshold, grid_for,
                                           lipschitz_ratio, solve_fixed_point)
from bipartite_spectra.measure import point_mass


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--im", type=float, default=0.0, help="Im z")
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = point_mass()
    rng = np.random.default_rng(args.seed)
    top = contraction_threshold(args.p, m)
    print(f"sufficient threshold 4 p X1 + 4 = {top:g}")
    print("Re z    max ratio   picard iterations")
    for re in np.geomspace(top, 0.05, 12):
        params = EnsembleParams(args.p, args.alpha, complex(re, args.im))
        grid = grid_for(params.z, m)

        def ball_point():
            f = rng.uniform(0, BALL_RADIUS, grid.n + 1) * grid.scale
            f = f * np.exp(2j * np.pi * rng.uniform(size=grid.n + 1))
            f[0] = 1.0
            return f

        worst = max(lipschitz_ratio((ball_point(), ball_point()), (ball_point(), ball_point()),
                                    m, params, grid) for _ in range(args.pairs))
        try:
            s = solve_fixed_point(params, m, grid,
                                  SolverConfig(accel="picard", damping=1.0, max_iter=500))
            iters = str(s.iterations)
        except ConvergenceError:
            iters = "no convergence"
        print(f"{re:7.3f}  {worst:9.3f}   {iters}")


if __name__ == "__main__":
    main()
