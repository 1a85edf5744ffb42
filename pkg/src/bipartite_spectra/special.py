"""Bessel function J1 and the exponential-resolvent kernel identity."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

SERIES_SWITCH = 13.0
_SERIES_TERMS = 40
_ASYMPTOTIC_TERMS = 24

# J1(x) = x/2 * sum_k (-x^2/4)^k / (k! (k+1)!)
# coefficients kept in extended precision: the series cancels by ~3 digits near the switch
_SERIES = np.array(
    [np.longdouble((-1) ** k) / (np.longdouble(math.factorial(k)) * math.factorial(k + 1))
     for k in range(_SERIES_TERMS)],
    dtype=np.longdouble,
)


def _hankel_coefficients(n_terms: int) -> np.ndarray:
    # a_k = prod_{j<=k} (4 - (2j-1)^2) / (k! 8^k), Hankel expansion for order 1
    a = [1.0]
    for k in range(1, n_terms):
        a.append(a[-1] * (4.0 - (2 * k - 1) ** 2) / (k * 8.0))
    return np.array(a)


_HANKEL = _hankel_coefficients(_ASYMPTOTIC_TERMS)
# P collects the even terms with alternating sign, Q the odd ones
_P = _HANKEL[0::2] * (-1.0) ** np.arange(len(_HANKEL[0::2]))
_Q = _HANKEL[1::2] * (-1.0) ** np.arange(len(_HANKEL[1::2]))


def _j1_series(x: np.ndarray) -> np.ndarray:
    xl = np.asarray(x, dtype=np.longdouble)
    y = xl * xl / 4
    acc = np.zeros_like(xl)
    for c in _SERIES[::-1]:
        acc = acc * y + c
    return np.asarray(acc * xl / 2, dtype=float)


def _j1_asymptotic(x: np.ndarray) -> np.ndarray:
    inv2 = 1.0 / (x * x)
    p = np.zeros_like(x)
    for c in _P[::-1]:
        p = p * inv2 + c
    q = np.zeros_like(x)
    for c in _Q[::-1]:
        q = q * inv2 + c
    q = q / x
    s, c = np.sin(x), np.cos(x)
    # cos(x - 3pi/4) and sin(x - 3pi/4) without reducing a shifted argument
    cos_chi = (s - c) / math.sqrt(2.0)
    sin_chi = -(s + c) / math.sqrt(2.0)
    return np.sqrt(2.0 / (math.pi * x)) * (p * cos_chi - q * sin_chi)


def bessel_j1(x):
    """Bessel function of the first kind of order one for real ``x >= 0``.

    Power series below ``SERIES_SWITCH``, Hankel asymptotic expansion above.
    Accepts scalars or arrays; absolute error is below ``1e-12``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("bessel_j1 needs finite arguments")
    if np.any(arr < 0):
        raise ValueError("bessel_j1 is only defined here for x >= 0")
    out = np.empty_like(arr)
    small = arr <= SERIES_SWITCH
    out[small] = _j1_series(arr[small])
    out[~small] = _j1_asymptotic(arr[~small])
    if out.ndim == 0:
        return float(out)
    return out


def _legendre_with_derivative(n: int, x: np.ndarray):
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1, n * (x * p1 - p0) / (x * x - 1.0)


@lru_cache(maxsize=64)
def _leggauss(n: int):
    # Tricomi's approximation for the nonnegative nodes, polished by Newton on
    # the three-term recurrence; numpy's leggauss needs a dense eigensolve,
    # which costs seconds for the node counts used here
    k = np.arange(n // 2 + 1, n + 1)
    theta = np.pi * (4 * (n + 1 - k) - 1) / (4 * n + 2)
    x = (1 - 1 / (8 * n ** 2) + 1 / (8 * n ** 3)) * np.cos(theta)
    for _ in range(3):
        p, dp = _legendre_with_derivative(n, x)
        x = x - p / dp
    p, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    if n % 2:
        x[0] = 0.0
        x, w = np.concatenate((-x[:0:-1], x)), np.concatenate((w[:0:-1], w))
    else:
        x, w = np.concatenate((-x[::-1], x)), np.concatenate((w[::-1], w))
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n: int, upper: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, upper]``."""
    x, w = _leggauss(int(n))
    return upper * (x + 1.0) / 2.0, w * upper / 2.0


def exp_resolvent_closed(u: float, a: float, R: complex) -> complex:
    return complex(np.exp(-u * a * a * R))


def exp_resolvent_check(u: float, a: float, R: complex, nodes: int = 256,
                        decay: float = 40.0) -> complex:
    """Quadrature value of ``1 - sqrt(u)|a| int_0^inf J1(2|a|sqrt(uv))/sqrt(v) exp(-v/R) dv``.

    For ``Re R > 0`` this equals ``exp(-u a^2 R)``.  The integral is taken
    in ``t = sqrt(v)`` on ``[0, sqrt(decay / Re(1/R))]``; a ``RuntimeError``
    is raised when the discarded tail could exceed ``1e-10``.
    """
    R = complex(R)
    if not R.real > 0:
        raise ValueError("need Re R > 0")
    if u < 0:
        raise ValueError("need u >= 0")
    if u == 0 or a == 0:
        return 1.0 + 0.0j
    s = (1.0 / R).real
    T = math.sqrt(decay / s)
    pref = math.sqrt(u) * abs(a)
    # |J1| <= 1, so the tail is at most pref * 2 int_T^inf exp(-s t^2) dt
    tail = pref * math.sqrt(math.pi / s) * math.erfc(math.sqrt(s) * T)
    if tail > 1e-10:
        raise RuntimeError(f"quadrature tail estimate {tail:.1e} exceeds 1e-10")
    t, w = gauss_legendre(nodes, T)
    integrand = bessel_j1(2.0 * abs(a) * math.sqrt(u) * t) * np.exp(-t * t / R)
    return complex(1.0 - pref * 2.0 * np.dot(w, integrand))
