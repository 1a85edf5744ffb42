"""Monte Carlo side: sampling the bipartite ensemble and its spectral statistics."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measure import EXACT, WeightMeasure, sample

ZERO_TOL = 1e-8


def part_size(n: int, alpha: float) -> int:
    """Integer part of ``alpha * n``, guarded against round-off just below an integer."""
    return int(math.floor(alpha * n + 1e-9))


@dataclass(frozen=True, eq=False)
class GraphSample:
    n: int
    part_size: int
    rows: np.ndarray   # vertex in part 1, 0-based, < part_size
    cols: np.ndarray   # vertex in part 2, 0-based, >= part_size
    weights: np.ndarray
    seed: object
    measure: WeightMeasure | None = None

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def biadjacency(self) -> np.ndarray:
        B = np.zeros((self.part_size, self.n - self.part_size))
        B[self.rows, self.cols - self.part_size] = self.weights
        return B

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self.rows, self.cols] = self.weights
        A[self.cols, self.rows] = self.weights
        return A


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def zero_fraction(self, tol: float = ZERO_TOL) -> float:
        return float(np.mean(np.abs(self.eigenvalues) <= tol))


def sample_graph(n: int, p: float, alpha: float, measure: WeightMeasure, seed) -> GraphSample:
    """One draw of the weighted bipartite adjacency structure.

    Each of the ``[alpha n] (n - [alpha n])`` cross pairs is kept with
    probability ``p / n``; Bernoulli draws are made in row-major pair order,
    then weights are drawn for the kept pairs in the same order.
    """
    if not 0 <= p <= n:
        raise ValueError("need 0 <= p <= n")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if measure.kind != EXACT:
        raise ValueError("graphs can only be sampled with an exact-discrete weight law")
    rng = np.random.default_rng(seed)
    n1 = part_size(n, alpha)
    keep = rng.random((n1, n - n1)) < p / n
    rows, cols = np.nonzero(keep)
    weights = sample(measure, rng, len(rows)).astype(float)
    return GraphSample(n, n1, rows, cols + n1, weights, seed, measure)


def eigenvalues(g: GraphSample, method: str = "dense") -> EmpiricalSpectrum:
    """Sorted spectrum of the adjacency matrix.

    ``dense`` runs a symmetric eigensolver on the full matrix; ``svd`` uses
    the singular values ``s`` of the biadjacency block, whose spectrum is
    ``{+s, -s}`` padded with zeros.
    """
    if method == "dense":
        ev = np.linalg.eigvalsh(g.adjacency())
    elif method == "svd":
        n1, n2 = g.part_size, g.n - g.part_size
        s = np.linalg.svd(g.biadjacency(), compute_uv=False) if min(n1, n2) else np.zeros(0)
        ev = np.concatenate((-s, s, np.zeros(g.n - 2 * len(s))))
    else:
        raise ValueError(f"unknown method {method!r}")
    return EmpiricalSpectrum(np.sort(ev))


def empirical_counting(s: EmpiricalSpectrum, lam: float) -> float:
    """Fraction of eigenvalues strictly below ``lam``."""
    return float(np.searchsorted(s.eigenvalues, lam, side="left") / s.n)


def empirical_stieltjes(s: EmpiricalSpectrum, w: complex) -> complex:
    w = complex(w)
    if not w.imag > 0:
        raise ValueError("need Im w > 0")
    return complex(np.mean(1.0 / (s.eigenvalues - w)))


def resolvent_diagonal(g: GraphSample, z) -> np.ndarray:
    """Diagonal of ``(z - iA)^{-1}`` for one or several ``z`` (Re z > 0).

    Uses one SVD ``B = U S V^T`` of the biadjacency block:
    ``G_11 = z (z^2 + B B^T)^{-1}`` and ``G_22 = z (z^2 + B^T B)^{-1}``.
    Returns shape ``(len(z), n)`` for array input, ``(n,)`` for a scalar.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(zs.real <= 0):
        raise ValueError("need Re z > 0")
    n1, n2 = g.part_size, g.n - g.part_size
    U, s, Vt = np.linalg.svd(g.biadjacency(), full_matrices=True)
    s1 = np.zeros(n1)
    s1[: len(s)] = s
    s2 = np.zeros(n2)
    s2[: len(s)] = s
    U2 = U ** 2
    V2 = Vt.T ** 2
    out = np.empty((len(zs), g.n), dtype=complex)
    for k, zk in enumerate(zs):
        out[k, :n1] = U2 @ (zk / (zk * zk + s1 ** 2))
        out[k, n1:] = V2 @ (zk / (zk * zk + s2 ** 2))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("singular resolvent")
    return out[0] if np.ndim(z) == 0 else out


def empirical_f(g: GraphSample, u, z, aux_seed, measure: WeightMeasure | None = None):
    """Finite-N statistics ``f_{i,N}(u, z)``, averaged over each part.

    ``f_{1,N} = [alpha N]^{-1} sum_{k in part 1} exp(-u a_k^2 G_kk(z))`` with
    auxiliary weights ``a_k`` drawn afresh from the weight law under
    ``aux_seed``.  Returns ``(f1N, f2N)``, arrays if ``u`` is an array.
    """
    measure = measure or g.measure
    if measure is None:
        raise ValueError("no weight law attached to the sample")
    diag = resolvent_diagonal(g, complex(z))
    a2 = sample(measure, aux_seed, g.n) ** 2
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    E = np.exp(-np.multiply.outer(u_arr, a2 * diag))
    n1 = g.part_size
    f1 = E[:, :n1].mean(axis=1)
    f2 = E[:, n1:].mean(axis=1)
    if np.ndim(u) == 0:
        return complex(f1[0]), complex(f2[0])
    return f1, f2


# -- ensembles of samples -------------------------------------------------

def _spectrum_task(args):
    n, p, alpha, measure, seed, method = args
    g = sample_graph(n, p, alpha, measure, seed)
    spec = eigenvalues(g, method)
    return {
        "seed": seed,
        "n_edges": g.n_edges,
        "weight_sq_sum": float(np.sum(g.weights ** 2)),
        "eigenvalues": spec.eigenvalues,
    }


def _pool_map(fn, tasks, jobs: int):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        # map keeps submission order, so results do not depend on scheduling
        return list(ex.map(fn, tasks))


def simulate_spectra(n, p, alpha, measure, seeds, method="dense", jobs=1) -> list[dict]:
    tasks = [(n, p, alpha, measure, s, method) for s in seeds]
    return _pool_map(_spectrum_task, tasks, jobs)


def averaged_cdf(spectra, lambdas, epsilon: float | None = None) -> np.ndarray:
    """Seed-averaged counting function on ``lambdas``.

    With ``epsilon`` each eigenvalue is replaced by a Cauchy law of width
    epsilon, i.e. the CDF of the empirical measure smoothed exactly like the
    analytic density.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    out = np.zeros_like(lambdas)
    for ev in spectra:
        ev = np.asarray(getattr(ev, "eigenvalues", ev))
        if epsilon is None:
            out += np.searchsorted(np.sort(ev), lambdas, side="left") / len(ev)
        else:
            out += np.mean(0.5 + np.arctan((lambdas[:, None] - ev[None, :]) / epsilon) / np.pi,
                           axis=1)
    return out / len(spectra)


def ks_distance(cdf_a, cdf_b, lambdas_a=None, lambdas_b=None) -> float:
    """Sup distance between two CDFs tabulated on the same grid."""
    a = np.asarray(cdf_a, dtype=float)
    b = np.asarray(cdf_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("CDFs are not on a common grid")
    if lambdas_a is not None and lambdas_b is not None:
        if not np.array_equal(np.asarray(lambdas_a), np.asarray(lambdas_b)):
            raise ValueError("CDFs are not on a common grid")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def _stieltjes_task(args):
    n, p, alpha, measure, seed, w = args
    ev = eigenvalues(sample_graph(n, p, alpha, measure, seed), "svd")
    return empirical_stieltjes(ev, w)


def variance_experiment(measure, p, alpha, z, n_list, trials, seed, jobs=1) -> list[dict]:
    """Sample variance of ``g_N(w)`` at ``w = i z`` for each N.

    Trial ``k`` at size ``N`` uses the seed sequence ``[seed, N, k]``.
    """
    z = complex(z)
    if not z.real > 0:
        raise ValueError("need Re z > 0")
    if trials < 2:
        raise ValueError("need at least two trials")
    w = 1j * z
    table = []
    for n in n_list:
        tasks = [(n, p, alpha, measure, [seed, n, k], w) for k in range(trials)]
        g = np.array(_pool_map(_stieltjes_task, tasks, jobs))
        mean = g.mean()
        var = float(np.sum(np.abs(g - mean) ** 2) / (trials - 1))
        table.append({"n": int(n), "variance": var, "trials": int(trials),
                      "mean_re": float(mean.real), "mean_im": float(mean.imag)})
    return table


def decay_slope(table) -> float:
    """Least-squares slope of log(variance) against log(N)."""
    n = np.array([row["n"] for row in table], dtype=float)
    v = np.array([row["variance"] for row in table], dtype=float)
    if np.any(v <= 0):
        return -math.inf
    return float(np.polyfit(np.log(n), np.log(v), 1)[0])
