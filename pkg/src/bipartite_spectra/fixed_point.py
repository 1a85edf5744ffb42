"""Discretised functional fixed point for the pair (f1, f2).

For ``Re z > 0`` the limiting functions solve::

    f1 = L(f2, mu, 1 - alpha),   f2 = L(f1, mu, alpha),
    L(f, mu, beta)(u) = 1 - sqrt(u) exp(-beta p) int |a| dmu(a)
                        int_0^inf J1(2|a| sqrt(uv)) / sqrt(v) exp(-z v + beta p f(v)) dv.

The v-integral is taken in ``t = sqrt(v)`` with Gauss-Legendre nodes on
``[0, t_max]``.  Functions are tabulated on the u-grid ``{0} U {t_j^2}``, so
the map never needs interpolation.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict, deque
from dataclasses import dataclass, replace

import numpy as np

from .measure import WeightMeasure, moment
from .special import bessel_j1, gauss_legendre

log = logging.getLogger(__name__)

BALL_RADIUS = 2.0
MIN_DECAY = 36.0  # t_max >= 6 / sqrt(Re z)


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    """Raised when the iteration stops short of the tolerance.

    ``state`` holds the last iterate so callers can continue from it.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class BallExitError(ConvergenceError):
    pass


@dataclass(frozen=True)
class EnsembleParams:
    p: float
    alpha: float
    z: complex

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if not self.p >= 0:
            raise ValueError("p must be nonnegative")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not self.z.real > 0:
            raise ValueError("need Re z > 0")

    def with_z(self, z) -> "EnsembleParams":
        return replace(self, z=complex(z))

    @property
    def weights(self) -> tuple[float, float]:
        """Exponent weights feeding f1 (from f2) and f2 (from f1)."""
        return (1.0 - self.alpha) * self.p, self.alpha * self.p


@dataclass(frozen=True, eq=False)
class GridSpec:
    t: np.ndarray
    weights: np.ndarray
    t_max: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or len(t) == 0:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] > self.t_max:
            raise ValueError("nodes must be strictly increasing in (0, t_max]")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        t.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def u(self) -> np.ndarray:
        """u-nodes: the pinned 0 followed by ``t_j**2``."""
        return np.concatenate(([0.0], self.t ** 2))

    @property
    def root_u(self) -> np.ndarray:
        return np.concatenate(([0.0], self.t))

    @property
    def scale(self) -> np.ndarray:
        return np.sqrt(1.0 + self.u)

    def key(self):
        return (self.n, self.t_max, hash(self.t.tobytes()), hash(self.weights.tobytes()))


def make_grid(nodes: int, t_max: float) -> GridSpec:
    t, w = gauss_legendre(nodes, t_max)
    return GridSpec(t, w, t_max)


def auto_nodes(t_max: float, im_z: float, a_max: float) -> int:
    """Node count resolving the two oscillations of the integrand.

    ``exp(-i Im(z) t^2)`` and ``J1(2 |a| t_i t)`` each carry a phase of order
    ``t_max^2``; the constants were calibrated so that h converges to ~1e-10.
    Rounded up to a multiple of 256 so that sweeps share a few grids.
    """
    phase = max(abs(im_z) / 2.5, a_max / 3.5) * t_max ** 2
    return int(256 * math.ceil((256 + phase) / 256))


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-11
    max_iter: int = 2000
    damping: float | None = None
    accel: str = "anderson"
    depth: int = 5
    nodes: int | None = None
    decay: float = 40.0
    refine: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.damping is not None and not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.accel not in ("anderson", "picard"):
            raise ValueError("accel must be 'anderson' or 'picard'")
        if self.decay < MIN_DECAY:
            raise ValueError(f"decay must be at least {MIN_DECAY}")
        if self.refine < 1 or (self.nodes is not None and self.nodes < 2):
            raise ValueError("bad grid size")


def grid_for(z: complex, measure: WeightMeasure, config: SolverConfig = SolverConfig()) -> GridSpec:
    z = complex(z)
    t_max = math.sqrt(config.decay / z.real)
    nodes = config.nodes or auto_nodes(t_max, z.imag, measure.max_abs)
    return make_grid(nodes * config.refine, t_max * config.refine)


@dataclass(frozen=True, eq=False)
class SolverState:
    grid: GridSpec
    f1: np.ndarray
    f2: np.ndarray
    z: complex
    residual: float = math.inf
    iterations: int = 0
    tol: float = math.nan

    @property
    def converged(self) -> bool:
        return bool(self.residual <= self.tol)

    @property
    def norms(self) -> tuple[float, float]:
        return norm_H(self.f1, self.grid), norm_H(self.f2, self.grid)


def norm_H(values, grid: GridSpec) -> float:
    """Discrete ``sup_u |f(u)| / sqrt(1 + u)`` over the grid's u-nodes."""
    values = np.asarray(values)
    if values.shape != (grid.n + 1,):
        raise ValueError("values do not match the grid")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite values")
    return float(np.max(np.abs(values) / grid.scale))


# -- Bessel kernel ---------------------------------------------------------

_KERNELS: OrderedDict = OrderedDict()
_KERNEL_CACHE_SIZE = 12


def clear_kernel_cache():
    _KERNELS.clear()


def _kernel_rows(root_u: np.ndarray, grid: GridSpec, measure: WeightMeasure) -> np.ndarray:
    # rows[i, j] = sqrt(u_i) sum_a mass |a| 2 w_j J1(2 |a| sqrt(u_i) t_j)
    rows = np.zeros((len(root_u), grid.n))
    for a, mass in measure.atoms:
        a = abs(a)
        if a == 0 or mass == 0:
            continue
        rows += (mass * a) * bessel_j1(2.0 * a * np.multiply.outer(root_u, grid.t))
    rows *= root_u[:, None] * (2.0 * grid.weights)[None, :]
    return rows


def bessel_kernel(grid: GridSpec, measure: WeightMeasure) -> np.ndarray:
    """Quadrature matrix of the operator on the u-grid (cached, read-only)."""
    key = (measure.values, measure.masses, grid.key())
    K = _KERNELS.get(key)
    if K is None:
        K = _kernel_rows(grid.root_u, grid, measure)
        K.flags.writeable = False
        _KERNELS[key] = K
        while len(_KERNELS) > _KERNEL_CACHE_SIZE:
            _KERNELS.popitem(last=False)
    else:
        _KERNELS.move_to_end(key)
    return K


def _integrand(f_in: np.ndarray, weight: float, z: complex, grid: GridSpec) -> np.ndarray:
    # exp(-w) exp(-z v + w f(v)) folded into one exponent to keep large p finite
    return np.exp(-z * grid.t ** 2 + weight * (f_in[1:] - 1.0))


def apply_L(f_in, measure: WeightMeasure, weight: float, z: complex, u, grid: GridSpec):
    """Evaluate ``L(f_in)`` at arbitrary ``u >= 0``.

    ``weight`` is the exponent factor (``alpha * p`` or ``(1 - alpha) * p``).
    Returns a complex scalar for scalar ``u``.
    """
    f_in = np.asarray(f_in, dtype=complex)
    if f_in.shape != (grid.n + 1,):
        raise ValueError("f_in does not match the grid")
    z = complex(z)
    if not z.real > 0:
        raise ValueError("need Re z > 0")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr < 0):
        raise ValueError("need u >= 0")
    rows = _kernel_rows(np.sqrt(u_arr), grid, measure)
    out = 1.0 - rows @ _integrand(f_in, weight, z, grid)
    if not np.all(np.isfinite(out)):
        raise SolverError("non-finite value in L; t_max is probably too small for this z")
    return complex(out[0]) if np.ndim(u) == 0 else out


def _apply_pair(K, grid, f1, f2, params: EnsembleParams):
    w1, w2 = params.weights
    v1 = _integrand(f2, w1, params.z, grid)
    v2 = _integrand(f1, w2, params.z, grid)
    V = np.column_stack((v1.real, v2.real, v1.imag, v2.imag))
    KV = K @ V
    g1 = 1.0 - (KV[:, 0] + 1j * KV[:, 2])
    g2 = 1.0 - (KV[:, 1] + 1j * KV[:, 3])
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise SolverError("non-finite value in F_z; t_max is probably too small for this z")
    # L returns exactly 1 at u = 0
    g1[0] = g2[0] = 1.0
    return g1, g2


def _distance(a1, a2, b1, b2, scale) -> float:
    return float(max(np.max(np.abs(a1 - b1) / scale), np.max(np.abs(a2 - b2) / scale)))


def apply_Fz(state: SolverState, measure: WeightMeasure, params: EnsembleParams) -> SolverState:
    """One application of the paired map; ``residual`` is that of the input state."""
    grid = state.grid
    g1, g2 = _apply_pair(bessel_kernel(grid, measure), grid, state.f1, state.f2, params)
    r = _distance(g1, g2, state.f1, state.f2, grid.scale)
    return SolverState(grid, g1, g2, params.z, r, state.iterations + 1, state.tol)


def lipschitz_ratio(phi: tuple, psi: tuple, measure: WeightMeasure, params: EnsembleParams,
                    grid: GridSpec) -> float:
    """``||F(phi) - F(psi)|| / ||phi - psi||`` in the product norm."""
    K = bessel_kernel(grid, measure)
    a = _apply_pair(K, grid, phi[0], phi[1], params)
    b = _apply_pair(K, grid, psi[0], psi[1], params)
    num = _distance(a[0], a[1], b[0], b[1], grid.scale)
    den = _distance(phi[0], phi[1], psi[0], psi[1], grid.scale)
    return num / den


def contraction_threshold(p: float, measure: WeightMeasure) -> float:
    """Re z above which plain Picard iteration is used by default."""
    return 4.0 * p * moment(measure, 1) + 4.0


def closed_form_p0(measure: WeightMeasure, z: complex, u) -> np.ndarray:
    """``int exp(-u a^2 / z) dmu(a)``, the solution when p = 0."""
    u = np.asarray(u, dtype=float)
    a2 = np.asarray(measure.values) ** 2
    return np.exp(-np.multiply.outer(u, a2) / complex(z)) @ np.asarray(measure.masses)


def transfer(state: SolverState, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Values of a state on another grid (linear in t); used for warm starts."""
    if state.grid is grid or state.grid.key() == grid.key():
        return state.f1.copy(), state.f2.copy()
    src, dst = state.grid.root_u, grid.root_u

    def interp(f):
        # beyond the source grid the solution has decayed; hold the last value
        return np.interp(dst, src, f.real) + 1j * np.interp(dst, src, f.imag)

    return interp(state.f1), interp(state.f2)


def solve_fixed_point(params: EnsembleParams, measure: WeightMeasure, grid: GridSpec | None = None,
                      config: SolverConfig = SolverConfig(), initial=None) -> SolverState:
    """Solve the paired system at one spectral parameter.

    The basic step is ``f <- (1 - d) f + d F_z(f)`` starting from ``f = 1``
    (or ``initial``: a :class:`SolverState` or an ``(f1, f2)`` pair on
    ``grid``).  With ``config.accel == "anderson"`` the damped step is
    mixed with the previous ``config.depth`` iterates.  Damping defaults to
    1 inside the contraction region and 0.5 below it.

    Raises :class:`ConvergenceError` after ``max_iter`` steps and
    :class:`BallExitError` if a plain step leaves the ball of radius 2.
    """
    z = params.z
    grid = grid if grid is not None else grid_for(z, measure, config)
    if grid.t_max < 6.0 / math.sqrt(z.real) * (1 - 1e-12):
        raise ValueError("t_max is below 6/sqrt(Re z)")
    tol = config.tol

    if params.p == 0:
        # exact solution; measured against the discrete map it only shows the
        # quadrature error at large u, where the weight exp(-Re z u) kills it
        f = closed_form_p0(measure, z, grid.u)
        return SolverState(grid, f, f.copy(), z, 0.0, 1, tol)

    K = bessel_kernel(grid, measure)
    scale = grid.scale

    if initial is None:
        f1 = np.ones(grid.n + 1, dtype=complex)
        f2 = f1.copy()
    elif isinstance(initial, SolverState):
        f1, f2 = transfer(initial, grid)
    else:
        f1, f2 = (np.array(v, dtype=complex) for v in initial)
    f1[0] = f2[0] = 1.0

    d = config.damping
    if d is None:
        d = 1.0 if z.real >= contraction_threshold(params.p, measure) else 0.5
    anderson = config.accel == "anderson" and config.depth > 0
    size = grid.n + 1
    xs: deque = deque(maxlen=config.depth + 1)
    rs: deque = deque(maxlen=config.depth + 1)
    best = math.inf
    r = math.inf

    for it in range(1, config.max_iter + 1):
        g1, g2 = _apply_pair(K, grid, f1, f2, params)
        r = _distance(g1, g2, f1, f2, scale)
        if r <= tol:
            return SolverState(grid, f1, f2, z, r, it, tol)
        # plain damped step
        p1 = f1 + d * (g1 - f1)
        p2 = f2 + d * (g2 - f2)
        step_from_mix = False
        if anderson:
            if r > 1e3 * best:
                xs.clear()
                rs.clear()
            best = min(best, r)
            x = np.concatenate((f1, f2)) / np.tile(scale, 2)
            res = np.concatenate((g1 - f1, g2 - f2)) / np.tile(scale, 2)
            xs.append(x)
            rs.append(res)
            if len(xs) > 1:
                dX = np.diff(np.array(xs), axis=0).T
                dR = np.diff(np.array(rs), axis=0).T
                gamma = np.linalg.lstsq(dR, res, rcond=None)[0]
                xn = x + d * res - (dX + d * dR) @ gamma
                xn = xn * np.tile(scale, 2)
                if np.all(np.isfinite(xn)):
                    p1, p2 = xn[:size].copy(), xn[size:].copy()
                    step_from_mix = True
        p1[0] = p2[0] = 1.0
        if max(norm_H(p1, grid), norm_H(p2, grid)) > BALL_RADIUS + 1e-6:
            if not step_from_mix:
                raise BallExitError("iterate left the ball of radius 2",
                                    SolverState(grid, f1, f2, z, r, it, tol))
            xs.clear()
            rs.clear()
            p1 = f1 + d * (g1 - f1)
            p2 = f2 + d * (g2 - f2)
            p1[0] = p2[0] = 1.0
            if max(norm_H(p1, grid), norm_H(p2, grid)) > BALL_RADIUS + 1e-6:
                raise BallExitError("iterate left the ball of radius 2",
                                    SolverState(grid, f1, f2, z, r, it, tol))
        f1, f2 = p1, p2

    raise ConvergenceError(f"no convergence after {config.max_iter} iterations (residual {r:.2e})",
                           SolverState(grid, f1, f2, z, r, config.max_iter, tol))


def evaluate_solution(state: SolverState, measure: WeightMeasure, params: EnsembleParams, u):
    """``(f1(u), f2(u))`` at arbitrary u, read off the fixed-point equations."""
    w1, w2 = params.weights
    return (apply_L(state.f2, measure, w1, state.z, u, state.grid),
            apply_L(state.f1, measure, w2, state.z, u, state.grid))
