"""Closed-form superoscillation constructors.

* :func:`product_function` -- f(x) = [cos(x/N) + i a sin(x/N)]^N, band limit 1,
  local wavenumber a at the origin.
* :func:`forced_zero_field` -- cosine-power spectrum on [-Omega/2, Omega/2]^2,
  multiplied in real space by linear zero factors.
* :func:`canvas_function` -- polynomial times sinc(Omega x / m)^m.
* :func:`taylor_match_coeffs` -- Fourier coefficients whose series matches the
  Taylor expansion of exp(i a x) at the origin through order N.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .field import BandDescriptor, Grid1D, Grid2D, SampledField

__all__ = [
    "ProductFunctionParams",
    "ForcedZeroDesign",
    "CanvasDesign",
    "TaylorMatchDesign",
    "product_function",
    "product_fourier_coeffs",
    "product_irradiance",
    "forced_zero_field",
    "cosine_power_profile",
    "canvas_function",
    "canvas_fit",
    "sinc",
    "taylor_match_coeffs",
    "taylor_match_field",
]

# exp(690) ~ 1e300
_LOG_OVERFLOW = math.log(1e300)


def sinc(u):
    """Unnormalised sinc, sin(u)/u."""
    return np.sinc(np.asarray(u) / np.pi)


def _log_guard(logf: np.ndarray) -> tuple[np.ndarray, dict]:
    peak = float(np.max(logf.real))
    if peak <= _LOG_OVERFLOW:
        return np.exp(logf), {}
    # store values relative to exp(peak); the physical field is values * exp(log_scale)
    return np.exp(logf - peak), {"representation": "log-scaled", "log_scale": peak}


# --------------------------------------------------------------------------
# product function


@dataclass(frozen=True)
class ProductFunctionParams:
    N: int
    a: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not math.isfinite(self.a):
            raise ValueError("a must be finite")
        object.__setattr__(self, "N", int(self.N))


def product_function(params: ProductFunctionParams, grid: Grid1D) -> SampledField:
    x = grid.x
    N, a = params.N, params.a
    base = np.cos(x / N) + 1j * a * np.sin(x / N)
    with np.errstate(divide="ignore"):
        logf = N * np.log(base.astype(np.complex128))
    if np.any(base == 0):
        # exact zeros (a == 0 at x = N pi/2 + ...): log is -inf, exp gives 0
        logf = np.where(base == 0, -np.inf + 0j, logf)
    values, meta = _log_guard(logf)
    meta = {"constructor": "product", "N": N, "a": a, **meta}
    return SampledField(grid, values, BandDescriptor(1.0), meta)


def product_fourier_coeffs(params: ProductFunctionParams, exact: bool = False) -> list[tuple]:
    """Binomial expansion: wavenumbers k_n = 1 - 2n/N and coefficients c_n.

    cos(u) + i a sin(u) = p e^{iu} + q e^{-iu} with p = (1 + a)/2 and
    q = (1 - a)/2, so c_n = C(N, n) p^(N-n) q^n (real for real a).

    For |a| > 1 the coefficients alternate in sign and reach (|a|/2)^N
    C(N, N/2), so floating-point sums of them cancel catastrophically.
    ``exact=True`` returns :class:`fractions.Fraction` values computed from
    the binary value of ``a``; their sum is exactly 1.
    """
    N = params.N
    fa = Fraction(params.a)
    p, q = (1 + fa) / 2, (1 - fa) / 2
    terms = [(Fraction(N - 2 * n, N), math.comb(N, n) * p ** (N - n) * q**n) for n in range(N + 1)]
    if exact:
        return terms
    # correctly rounded from the exact values
    return [(float(k), complex(float(c))) for k, c in terms]


def product_irradiance(params: ProductFunctionParams, x) -> np.ndarray:
    """|f(x)|^2 = [cos^2(x/N) + a^2 sin^2(x/N)]^N."""
    x = np.asarray(x, dtype=float)
    return (np.cos(x / params.N) ** 2 + params.a**2 * np.sin(x / params.N) ** 2) ** params.N


# --------------------------------------------------------------------------
# forced zeros


@dataclass(frozen=True)
class ForcedZeroDesign:
    omega: float
    n: int = 6
    m: int = 6
    zeros: Sequence[tuple[float, float]] = ()

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        for name in ("n", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer")
        object.__setattr__(self, "zeros", tuple((float(a), float(b)) for a, b in self.zeros))

    def base(self, x, y) -> np.ndarray:
        """Inverse transform of the cosine-power spectrum at points (x, y)."""
        return cosine_power_profile(x, self.omega, self.n) * cosine_power_profile(y, self.omega, self.m)

    def zero_factor(self, x, y) -> np.ndarray:
        out = np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        for xj, yj in self.zeros:
            out = out * (x - xj) * (y - yj)
        return out

    def evaluate(self, x, y) -> np.ndarray:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return self.base(x, y) * self.zero_factor(x, y)


def cosine_power_profile(x, omega: float, n: int) -> np.ndarray:
    """(2 pi)^-1/2 * integral over |k| <= omega/2 of cos(pi k/omega)^n e^{ikx} dk.

    Closed form from the binomial expansion of cos^n into exponentials.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    for r in range(n + 1):
        beta = x + np.pi * (n - 2 * r) / omega
        # integral of e^{i beta k} over |k| <= omega/2
        out += math.comb(n, r) * omega * sinc(beta * omega / 2)
    return out / (2.0**n * math.sqrt(2 * np.pi))


def forced_zero_field(design: ForcedZeroDesign, grid: Grid2D) -> SampledField:
    """g(x, y) = f(x, y) * prod_j (x - x_j)(y - y_j) sampled on ``grid``.

    f is evaluated from its closed form, so the zero lines are exact and
    :meth:`ForcedZeroDesign.evaluate` gives g off-grid as well.
    """
    xs, ys = grid.x, grid.y
    for xj, yj in design.zeros:
        if not (xs[0] <= xj <= xs[-1] and ys[0] <= yj <= ys[-1]):
            raise ValueError(f"zero ({xj}, {yj}) lies outside the grid")
    X, Y = grid.mesh()
    meta = {"constructor": "forced-zeros", "omega": design.omega, "n": design.n, "m": design.m,
            "zeros": [list(z) for z in design.zeros]}
    band = BandDescriptor(design.omega / 2, "rectangular")  # per axis
    return SampledField(grid, design.evaluate(X, Y), band, meta)


# --------------------------------------------------------------------------
# canvas functions


@dataclass(frozen=True)
class CanvasDesign:
    omega: float
    m: int
    poly_coeffs: Sequence[complex] = (1.0,)
    allow_non_integrable: bool = False

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("canvas order m must be a positive integer")
        coeffs = tuple(complex(c) for c in self.poly_coeffs)
        if not coeffs:
            raise ValueError("poly_coeffs must not be empty")
        object.__setattr__(self, "poly_coeffs", coeffs)
        n = len(coeffs)
        if self.m <= n + 1 and not self.allow_non_integrable:
            raise ValueError(
                f"canvas order m={self.m} with a {n}-term polynomial does not give a square-integrable "
                f"function; need m > n + 1 = {n + 1} (set allow_non_integrable to override)"
            )

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        poly = np.polynomial.polynomial.polyval(x, np.asarray(self.poly_coeffs))
        return poly * canvas(x, self.omega, self.m)


def canvas(x, omega: float, m: int) -> np.ndarray:
    """m-th order canvas function sinc(omega x / m)^m, band limit omega."""
    return sinc(omega * np.asarray(x, dtype=float) / m) ** m


def canvas_function(design: CanvasDesign, grid: Grid1D) -> SampledField:
    meta = {"constructor": "canvas", "omega": design.omega, "m": design.m}
    return SampledField(grid, design.evaluate(grid.x), BandDescriptor(design.omega), meta)


def canvas_fit(
    target: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    degree: int,
    omega: float,
    m: int | None = None,
    n_points: int | None = None,
) -> CanvasDesign:
    """Least-squares polynomial so that poly * canvas matches ``target`` on ``interval``.

    The polynomial has ``degree + 1`` terms; ``m`` defaults to the smallest
    order that keeps the product square integrable.
    """
    x1, x2 = interval
    if not x1 < x2:
        raise ValueError("interval must satisfy x1 < x2")
    n = degree + 1
    m = n + 2 if m is None else m
    n_points = n_points or max(20 * n, 200)
    x = np.linspace(x1, x2, n_points)
    y = np.asarray(target(x), dtype=complex) / canvas(x, omega, m)
    # fit in the centred, scaled variable then expand to monomials in x
    c, h = (x1 + x2) / 2, (x2 - x1) / 2
    t = (x - c) / h
    V = np.polynomial.chebyshev.chebvander(t, degree)
    coef_t, *_ = np.linalg.lstsq(V, y, rcond=None)
    pt = np.polynomial.Chebyshev(coef_t).convert(kind=np.polynomial.Polynomial)
    # substitute t = (x - c)/h
    px = pt(np.polynomial.Polynomial([-c / h, 1 / h]))
    coeffs = np.zeros(n, dtype=complex)
    coeffs[: len(px.coef)] = px.coef
    return CanvasDesign(omega, m, tuple(coeffs))


# --------------------------------------------------------------------------
# Taylor matching


@dataclass(frozen=True)
class TaylorMatchDesign:
    N: int
    a: complex
    k: np.ndarray = dc_field(repr=False)
    X: np.ndarray = dc_field(repr=False)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, self.k)) @ self.X

    def derivative_at_zero(self, order: int) -> complex:
        return complex(np.sum(self.X * (1j * self.k) ** order))


def taylor_match_coeffs(N: int, a: complex) -> TaylorMatchDesign:
    """X_j(N, a) = prod_{i != j} (k_i - a) / (k_i - k_j), k_j = 1 - 2j/N.

    These are the Lagrange basis polynomials on the nodes k_j evaluated at a,
    so sum_j X_j k_j^p = a^p for p = 0..N. A complex ``a`` targets
    exp(i a x) with growth (a = -i b gives exp(b x)).
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    k = 1 - 2 * np.arange(N + 1) / N
    X = np.empty(N + 1, dtype=complex)
    for j in range(N + 1):
        others = np.delete(k, j)
        X[j] = np.prod((others - a) / (others - k[j]))
    return TaylorMatchDesign(N, a, k, X)


def taylor_match_field(design: TaylorMatchDesign, grid: Grid1D) -> SampledField:
    meta = {"constructor": "taylor", "N": design.N, "a": repr(design.a)}
    return SampledField(grid, design.evaluate(grid.x), BandDescriptor(1.0), meta)
