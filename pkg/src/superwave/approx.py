"""Best band-limited approximation of a target on a finite interval.

Two bases are provided:

* a Fourier series psi_N(x) = sum_n C_n exp(i k_n x) with k_n = K (1 - 2n/N),
  band limit K (2 pi by default);
* a truncated whole-line expansion f_N(x) = sqrt(2/pi) sum_n i^n D_n j_n(x)
  in spherical Bessel functions, band limit 1.

Both minimise the squared error over (x1, x2) through the normal equations,
solved with an SVD pseudo-inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec
from scipy.interpolate import CubicSpline

from .bessel import spherical_jn_all

__all__ = [
    "QuadratureError",
    "IntervalApproxDesign",
    "BesselApproxDesign",
    "interval_approx",
    "bessel_line_approx",
    "pinv_solve",
]

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12
PINV_RCOND = 1e-12


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, what: str, achieved: float):
        super().__init__(f"quadrature for {what} did not converge; achieved error estimate {achieved:.3g}")
        self.achieved = achieved


def _integrate(func, a, b, what, limit=2000):
    res, err, info = quad_vec(func, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=limit, full_output=True)
    if info.status != 0:
        raise QuadratureError(what, float(err))
    return res


def _as_callable(target, interval):
    """Accept a callable or a sampled target given as (x, values)."""
    if callable(target):
        return target
    x, v = target
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=complex)
    if x.ndim != 1 or x.shape != v.shape or x.size < 4:
        raise ValueError("sampled target must be two 1D arrays of equal length (>= 4)")
    if interval[0] < x.min() or interval[1] > x.max():
        raise ValueError("sampled target does not cover the interval")
    return CubicSpline(x, v)


def _check_interval(interval):
    x1, x2 = map(float, interval)
    if not x1 < x2:
        raise ValueError(f"interval must satisfy x1 < x2, got ({x1}, {x2})")
    return x1, x2


def pinv_solve(gram: np.ndarray, rhs: np.ndarray, rcond: float = PINV_RCOND) -> tuple[np.ndarray, int]:
    """Minimum-norm least-squares solution gram^+ rhs and the numerical rank."""
    u, s, vh = np.linalg.svd(gram)
    keep = s > rcond * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, bool)
    inv = np.where(keep, 1 / np.where(keep, s, 1), 0)
    return vh.conj().T @ (inv * (u.conj().T @ rhs)), int(keep.sum())


@dataclass(frozen=True)
class IntervalApproxDesign:
    N: int
    interval: tuple[float, float]
    bandlimit: float
    k: np.ndarray = dc_field(repr=False)
    C: np.ndarray = dc_field(repr=False)
    alpha: np.ndarray = dc_field(repr=False)
    b: np.ndarray = dc_field(repr=False)
    target_norm2: float = 0.0
    residual: float = 0.0
    rank: int = 0
    target: Callable | None = dc_field(default=None, repr=False, compare=False)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, self.k)) @ self.C

    def residual_of(self, C) -> float:
        """Interval error for coefficients C from the quadratic form.

        eps(C) = |Phi|^2 - 2 Re(C^H b) + C^H alpha C.
        """
        C = np.asarray(C, dtype=complex)
        return float(self.target_norm2 - 2 * np.real(np.vdot(C, self.b)) + np.real(np.vdot(C, self.alpha @ C)))


def _alpha(k: np.ndarray, x1: float, x2: float) -> np.ndarray:
    # alpha_nm = integral of exp(i (k_m - k_n) x) over (x1, x2)
    d = k[None, :] - k[:, None]
    L = x2 - x1
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (np.exp(1j * d * x2) - np.exp(1j * d * x1)) / (1j * d)
    return np.where(d == 0, L, off)


def interval_approx(
    target,
    interval: tuple[float, float],
    N: int,
    bandlimit: float = 2 * np.pi,
    rcond: float = PINV_RCOND,
) -> IntervalApproxDesign:
    """Fourier-series approximation C = alpha^+ b on ``interval``.

    ``target`` is a callable Phi(x) or a sampled pair (x, values), which is
    interpolated with a cubic spline.
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    x1, x2 = _check_interval(interval)
    phi = _as_callable(target, (x1, x2))
    k = bandlimit * (1 - 2 * np.arange(N + 1) / N)
    alpha = _alpha(k, x1, x2)
    b = _integrate(lambda x: complex(phi(x)) * np.exp(-1j * k * x), x1, x2, "b_n")
    norm2 = float(_integrate(lambda x: abs(complex(phi(x))) ** 2, x1, x2, "target norm"))
    C, rank = pinv_solve(alpha, b, rcond)
    res = _integrate(lambda x: abs(complex(phi(x)) - np.exp(1j * k * x) @ C) ** 2, x1, x2, "residual")
    return IntervalApproxDesign(N, (x1, x2), float(bandlimit), k, C, alpha, b, norm2, float(res), rank, phi)


@dataclass(frozen=True)
class BesselApproxDesign:
    N_terms: int
    interval: tuple[float, float]
    D: np.ndarray = dc_field(repr=False)
    A: np.ndarray = dc_field(repr=False)
    B: np.ndarray = dc_field(repr=False)
    target_norm2: float = 0.0
    residual: float = 0.0
    rank: int = 0

    @property
    def weights(self) -> np.ndarray:
        """Coefficients E_n of j_n in f_N, i.e. sqrt(2/pi) i^n D_n."""
        return math.sqrt(2 / np.pi) * 1j ** np.arange(self.N_terms) * self.D

    def evaluate(self, x) -> np.ndarray:
        j = spherical_jn_all(self.N_terms - 1, x)
        return np.tensordot(self.weights, j, axes=1)

    def residual_of(self, D) -> float:
        E = math.sqrt(2 / np.pi) * 1j ** np.arange(self.N_terms) * np.asarray(D, dtype=complex)
        gj = self.B / math.sqrt(np.pi / 2)
        return float(self.target_norm2 - 2 * np.real(np.vdot(E, gj)) + np.real(np.vdot(E, self.A @ E)))


def bessel_line_approx(
    target,
    interval: tuple[float, float],
    N_terms: int,
    rcond: float = PINV_RCOND,
) -> BesselApproxDesign:
    """Spherical-Bessel approximation on ``interval``.

    With B_n = sqrt(pi/2) int g j_n and A_nm = int j_n j_m the optimum of
    int |g - f_N|^2 is i^n D_n = (A^+ B)_n.
    """
    if int(N_terms) != N_terms or N_terms < 1:
        raise ValueError("N_terms must be a positive integer")
    N_terms = int(N_terms)
    x1, x2 = _check_interval(interval)
    g = _as_callable(target, (x1, x2))
    nmax = N_terms - 1

    def jvec(x):
        return spherical_jn_all(nmax, x)

    B = math.sqrt(np.pi / 2) * _integrate(lambda x: complex(g(x)) * jvec(x), x1, x2, "B_n")
    A = _integrate(lambda x: np.outer(jvec(x), jvec(x)).ravel(), x1, x2, "A_nm").reshape(N_terms, N_terms)
    A = 0.5 * (A + A.T)
    norm2 = float(_integrate(lambda x: abs(complex(g(x))) ** 2, x1, x2, "target norm"))
    sol, rank = pinv_solve(A, B, rcond)
    D = sol * (1j ** -np.arange(N_terms))
    design = BesselApproxDesign(N_terms, (x1, x2), D, A, B, norm2, 0.0, rank)
    res = _integrate(lambda x: abs(complex(g(x)) - design.weights @ jvec(x)) ** 2, x1, x2, "residual")
    return BesselApproxDesign(N_terms, (x1, x2), D, A, B, norm2, float(res), rank)
