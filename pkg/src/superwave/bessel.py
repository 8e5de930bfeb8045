"""Spherical Bessel functions by Miller's downward recurrence.

j_n(x) for n = 0..n_max is obtained by running

    j_{n-1}(x) = (2n + 1)/x * j_n(x) - j_{n+1}(x)

downward from an index well above max(n_max, |x|) and normalising with the
sum rule sum_n (2n + 1) j_n(x)^2 = 1. Small arguments use the power series.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import eval_legendre

__all__ = ["spherical_jn_all", "spherical_jn", "legendre_coeffs", "legendre_line_function"]

_SERIES_X = 0.5
_SERIES_TERMS = 12


def _series(n_max: int, x: np.ndarray) -> np.ndarray:
    # j_n(x) = x^n/(2n+1)!! * sum_s (-x^2/2)^s / (s! (2n+3)(2n+5)...(2n+2s+1))
    out = np.empty((n_max + 1, x.size))
    z = -0.5 * x * x
    dfact = 1.0
    for n in range(n_max + 1):
        if n:
            dfact *= 2 * n + 1
        term = np.ones_like(x)
        total = np.ones_like(x)
        for s in range(1, _SERIES_TERMS):
            term = term * z / (s * (2 * n + 2 * s + 1))
            total = total + term
        out[n] = x**n / dfact * total
    return out


def _miller(n_max: int, x: np.ndarray) -> np.ndarray:
    n_top = max(n_max, 1)
    xmax = float(np.max(np.abs(x)))
    start = int(n_top + 20 + xmax + 4 * math.sqrt(n_top + 20 + xmax))
    out = np.zeros((n_top + 1, x.size))
    upper = np.zeros_like(x)
    cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for n in range(start, 0, -1):
        # cur holds j_n (unnormalised), upper holds j_{n+1}
        if n <= n_top:
            out[n] = cur
        norm += (2 * n + 1) * cur * cur
        upper, cur = cur, (2 * n + 1) / x * cur - upper
        big = np.abs(cur) > 1e100
        if np.any(big):
            s = np.where(big, 1e-100, 1.0)
            cur, upper, norm = cur * s, upper * s, norm * s * s
            out[n:] *= s
    out[0] = cur
    norm += cur * cur
    # sum rule fixes the magnitude; j_0 or j_1 (the larger) fixes the sign
    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    use_j0 = np.abs(j0) >= np.abs(j1)
    sign = np.sign(np.where(use_j0, j0 * out[0], j1 * out[1]))
    return (out * (sign / np.sqrt(norm)))[: n_max + 1]


def spherical_jn_all(n_max: int, x) -> np.ndarray:
    """Array of shape (n_max + 1, *x.shape) holding j_0(x) .. j_n_max(x)."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty((n_max + 1, flat.size))
    small = np.abs(flat) < _SERIES_X
    if np.any(small):
        out[:, small] = _series(n_max, flat[small])
    if np.any(~small):
        out[:, ~small] = _miller(n_max, flat[~small])
    return out.reshape((n_max + 1,) + x.shape)


def spherical_jn(n: int, x) -> np.ndarray:
    return spherical_jn_all(n, x)[n]


def legendre_coeffs(ftilde, n_terms: int, n_quad: int = 200) -> np.ndarray:
    """d_n = (2n+1)/2 * integral_{-1}^{1} ftilde(k) P_n(k) dk by Gauss-Legendre quadrature."""
    k, w = np.polynomial.legendre.leggauss(n_quad)
    fk = np.asarray(ftilde(k), dtype=complex)
    return np.array([(2 * n + 1) / 2 * np.sum(w * fk * eval_legendre(n, k)) for n in range(n_terms)])


def legendre_line_function(d, x) -> np.ndarray:
    """f(x) = sqrt(2/pi) * sum_n i^n d_n j_n(x), the transform of sum_n d_n P_n(k) on [-1, 1]."""
    d = np.asarray(d, dtype=complex)
    j = spherical_jn_all(len(d) - 1, x)
    phases = 1j ** np.arange(len(d))
    return math.sqrt(2 / np.pi) * np.tensordot(phases * d, j, axes=1)
