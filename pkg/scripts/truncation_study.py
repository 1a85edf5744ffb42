"""Convergence of the density under weight truncation a -> min(a, T).

    python scripts/truncation_study.py --T 1 2 5 10 20
"""

import argparse

import numpy as np

from bipartite_spectra.measure import make_measure, truncate
from bipartite_spectra.spectral import density, symmetric_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, nargs="+", default=[1.0, 2.0, 5.0, 10.0, 20.0])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--epsilon", type=float, default=0.2)
    args = ap.parse_args()

    m = make_measure([(0.5, 0.5), (1.0, 0.45), (10.0, 0.05)])
    lams = symmetric_grid(3.0, 0.05)
    ref = density(m, args.p, args.alpha, lams, args.epsilon)
    print("T       X2(T)     sup|rho_T - rho|")
    for T in args.T:
        mt = truncate(m, T)
        c = density(mt, args.p, args.alpha, lams, args.epsilon)
        print(f"{T:5g}  {mt.moment(2):8.4f}  {np.max(np.abs(c.rho - ref.rho)):.3e}")


if __name__ == "__main__":
    main()
