import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from superwave.direct import (
    CanvasDesign,
    ForcedZeroDesign,
    ProductFunctionParams,
    canvas_fit,
    canvas_function,
    cosine_power_profile,
    forced_zero_field,
    product_fourier_coeffs,
    product_function,
    product_irradiance,
    taylor_match_coeffs,
    taylor_match_field,
)
from superwave.field import Grid1D, Grid2D, measured_bandlimit, series_coefficients
from superwave.local import local_map, local_wavenumber


def _period_grid(N, n=4096):
    return Grid1D.span(-N * np.pi, N * np.pi, n)


# product function


@pytest.mark.parametrize("N,a", [(1, 0.0), (5, 2.0), (20, 6.0), (7, -3.5)])
def test_product_at_origin_is_one(N, a):
    f = product_function(ProductFunctionParams(N, a), Grid1D.centered(64, 0.1))
    assert f.values[32] == 1


def test_product_coeffs_n1_is_cosine():
    (k0, c0), (k1, c1) = product_fourier_coeffs(ProductFunctionParams(1, 0.0))
    assert (k0, k1) == (1.0, -1.0)
    assert c0 == pytest.approx(0.5) and c1 == pytest.approx(0.5)


@pytest.mark.parametrize("N", [4, 10, 20])
def test_product_coeffs_sum_and_closed_form(N):
    a = 6.0
    params = ProductFunctionParams(N, a)
    exact = product_fourier_coeffs(params, exact=True)
    assert sum(c for _, c in exact) == 1
    # the closed form evaluated independently in floating point
    p, q = (1 + a) / 2, (1 - a) / 2
    for n, (k, c) in enumerate(product_fourier_coeffs(params)):
        assert k == pytest.approx(1 - 2 * n / N)
        ref = comb(N, n, exact=True) * p ** (N - n) * q ** n
        assert abs(c - ref) <= 1e-14 * abs(ref)
        assert c == complex(float(exact[n][1]))


def test_float_coefficient_sum_is_ill_conditioned():
    # the exact sum is 1, but the terms are ~1e14 with alternating signs
    coeffs = product_fourier_coeffs(ProductFunctionParams(20, 6.0))
    scale = sum(abs(c) for _, c in coeffs)
    assert scale > 1e14
    assert abs(sum(c for _, c in coeffs) - 1) < 1e-15 * scale


@pytest.mark.parametrize("N", [4, 10, 20])
def test_product_dft_matches_coefficients(N):
    params = ProductFunctionParams(N, 6.0)
    f = product_function(params, _period_grid(N))
    k, c = series_coefficients(f)
    closed = np.array([cn for _, cn in product_fourier_coeffs(params)])
    idx = [int(np.argmin(np.abs(k - kn))) for kn, _ in product_fourier_coeffs(params)]
    np.testing.assert_allclose(k[idx], [kn for kn, _ in product_fourier_coeffs(params)], atol=1e-12)
    dft = c[idx]
    # relative to the coefficient vector
    assert np.max(np.abs(dft - closed)) <= 1e-9 * np.max(np.abs(closed))
    if N <= 10:
        # per coefficient where the dynamic range allows it
        np.testing.assert_allclose(dft, closed, rtol=1e-9)
    others = np.delete(c, idx)
    assert np.max(np.abs(others)) <= 1e-9 * np.max(np.abs(closed))


def test_complex_weight_variant_is_a_different_function():
    # weights (1 +/- i a)/2 also sum to one but expand cos(u) - a sin(u), not f
    N, a = 6, 2.0
    x = np.linspace(-3, 3, 7)
    p, q = (1 + 1j * a) / 2, (1 - 1j * a) / 2
    alt = sum(comb(N, n, exact=True) * p ** (N - n) * q ** n * np.exp(1j * (1 - 2 * n / N) * x) for n in range(N + 1))
    np.testing.assert_allclose(alt, (np.cos(x / N) - a * np.sin(x / N)) ** N, rtol=1e-12, atol=1e-12)
    f = product_function(ProductFunctionParams(N, a), Grid1D(7, 1.0, -3.0)).values
    assert np.max(np.abs(alt - f)) > 1


@pytest.mark.parametrize("N,a", [(10, 2.0), (20, 6.0)])
def test_product_series_resums_to_samples(N, a):
    params = ProductFunctionParams(N, a)
    g = Grid1D.span(-8, 8, 1001)
    direct = product_function(params, g).values
    coeffs = product_fourier_coeffs(params)
    series = sum(c * np.exp(1j * k * g.x) for k, c in coeffs)
    err = np.max(np.abs(series - direct))
    total = sum(abs(c) for _, c in coeffs)
    if total < 1e6 * np.max(np.abs(direct)):
        assert err < 1e-10 * np.max(np.abs(direct))
    else:
        # cancelling terms of size sum|c_n|: only rounding at that scale is achievable
        assert err < 1e-14 * total


def test_product_irradiance_closed_form():
    params = ProductFunctionParams(20, 6.0)
    g = Grid1D.span(-10, 10, 2001)
    np.testing.assert_allclose(np.abs(product_function(params, g).values) ** 2,
                               product_irradiance(params, g.x), rtol=1e-10)


def test_product_bandlimit():
    f = product_function(ProductFunctionParams(20, 6.0), _period_grid(20))
    assert measured_bandlimit(f) <= 1 + f.grid.dk


def test_product_overflow_guard():
    f = product_function(ProductFunctionParams(400, 50.0), Grid1D.span(-400 * np.pi / 2, 400 * np.pi / 2, 512))
    assert f.meta.get("representation") == "log-scaled"
    assert np.all(np.isfinite(f.values))
    assert np.max(np.abs(f.values)) == pytest.approx(1.0)


def test_product_rejects_bad_params():
    with pytest.raises(ValueError):
        ProductFunctionParams(0, 1.0)
    with pytest.raises(ValueError):
        ProductFunctionParams(3, np.inf)


# forced zeros


def test_cosine_power_profile_matches_quadrature():
    from scipy.integrate import quad

    omega, n, x = 1.3, 4, 2.7
    re = quad(lambda k: np.cos(np.pi * k / omega) ** n * np.cos(k * x), -omega / 2, omega / 2)[0]
    assert cosine_power_profile(x, omega, n) == pytest.approx(re / np.sqrt(2 * np.pi), rel=1e-10)


def test_forced_zero_lines_vanish():
    d = ForcedZeroDesign(1.0, 12, 12, [(0.5, -0.5), (-1.0, 1.5)])
    g = Grid2D.centered(256, 0.5)
    peak = np.abs(forced_zero_field(d, g).values).max()
    for xj, yj in d.zeros:
        assert np.max(np.abs(d.evaluate(np.full_like(g.y, xj), g.y))) < 1e-12 * peak
        assert np.max(np.abs(d.evaluate(g.x, np.full_like(g.x, yj)))) < 1e-12 * peak


def test_forced_zero_empty_list_is_base():
    d = ForcedZeroDesign(1.0, 6, 6)
    g = Grid2D.centered(64, 0.5)
    X, Y = g.mesh()
    np.testing.assert_array_equal(forced_zero_field(d, g).values, d.base(X, Y))


def test_forced_zero_fig9_profile():
    # zeros at -x0, 0, x0 with x0 = 1/omega sit inside the central lobe of f
    omega = 1.0
    x0 = 1 / omega
    d = ForcedZeroDesign(omega, 6, 6, [(-x0, -x0), (0.0, 0.0), (x0, x0)])
    x = np.linspace(-3, 3, 6001)
    y = np.full_like(x, 0.5)
    base = d.base(x, y)
    assert np.all(base > 0)  # still inside the main lobe
    g = d.evaluate(x, y)
    s = np.signbit(g)
    crossings = x[np.nonzero(s[1:] != s[:-1])[0]]
    np.testing.assert_allclose(crossings, [-x0, 0.0, x0], atol=2e-3)


def test_forced_zero_rejects_outside():
    with pytest.raises(ValueError):
        forced_zero_field(ForcedZeroDesign(1.0, 4, 4, [(1000.0, 0.0)]), Grid2D.centered(32, 0.5))


def test_forced_zero_bandlimit_per_axis():
    omega = 1.0
    d = ForcedZeroDesign(omega, 12, 12, [(0.5, -0.5)])
    g = Grid2D.centered(256, 0.5 / omega)
    f = forced_zero_field(d, g)
    for axis, dk in ((0, g.dkx), (1, g.dky)):
        assert measured_bandlimit(f, 1e-9, axis) <= omega / 2 + dk


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_more_zeros_never_widen_band(seed):
    r = np.random.default_rng(seed)
    g = Grid2D.centered(256, 0.5)
    zeros = [tuple(z) for z in r.uniform(-4, 4, size=(3, 2))]
    prev = None
    for j in range(len(zeros) + 1):
        f = forced_zero_field(ForcedZeroDesign(1.0, 12, 12, zeros[:j]), g)
        K = measured_bandlimit(f, 1e-9, 0)
        if prev is not None:
            assert K <= prev + g.dkx or K <= 0.5 + g.dkx
        prev = K


# canvas


@pytest.mark.parametrize("m", [1, 3, 6])
def test_canvas_constant_poly(m):
    g = Grid1D.centered(101, 0.3)
    f = canvas_function(CanvasDesign(2.0, m, allow_non_integrable=True), g)
    assert f.values[50] == 1
    np.testing.assert_allclose(f.values, np.sinc(2.0 * g.x / m / np.pi) ** m)


def test_canvas_value_at_origin_is_a0():
    d = CanvasDesign(1.0, 6, [0.3 - 0.2j, 1.0, 2.0])
    assert d.evaluate(0.0) == pytest.approx(0.3 - 0.2j)


def test_canvas_square_integrability_guard():
    with pytest.raises(ValueError, match="square-integrable"):
        CanvasDesign(1.0, 3, [1.0, 2.0])
    CanvasDesign(1.0, 3, [1.0, 2.0], allow_non_integrable=True)


def test_canvas_fit_superoscillates():
    d = canvas_fit(lambda x: np.exp(4j * x), (-1, 1), 12, 1.0)
    g = Grid1D.span(-40, 40, 8192)
    f = canvas_function(d, g)
    # the side lobes dwarf the fitted window, so validity is judged far below the default
    m = local_map(f, 1.0, "fd4", threshold=1e-15)
    inside = np.abs(g.x) < 0.9
    assert np.all(m.valid[inside])
    assert np.all(m.k_local[inside] > 1)
    np.testing.assert_allclose(m.k_local[inside], 4, atol=0.05)
    assert measured_bandlimit(f, 1e-9) <= 1 + g.dk


# Taylor matching


def test_taylor_degenerate_unit_vector():
    for N in (3, 8, 16):
        for m in range(N + 1):
            d = taylor_match_coeffs(N, 1 - 2 * m / N)
            expected = np.zeros(N + 1)
            expected[m] = 1
            assert np.array_equal(d.X, expected)


def test_taylor_n4_a2_against_vandermonde():
    d = taylor_match_coeffs(4, 2.0)
    assert abs(d.X.sum() - 1) < 1e-10
    assert abs(np.sum(d.X * d.k) - 2) < 1e-10
    V = np.vander(d.k, increasing=True).T
    X = np.linalg.solve(V, 2.0 ** np.arange(5))
    np.testing.assert_allclose(d.X, X, atol=1e-10)


@pytest.mark.parametrize("N", [1, 4, 8, 12, 16])
@pytest.mark.parametrize("a", [1.5, -1.5, 0.3, 2.0])
def test_taylor_moments(N, a):
    d = taylor_match_coeffs(N, a)
    for p in range(N + 1):
        assert abs(d.derivative_at_zero(p) - (1j * a) ** p) <= 1e-6 * abs(a) ** p


def test_taylor_local_wavenumber_at_origin():
    d = taylor_match_coeffs(12, 3.0)
    g = Grid1D.span(-12 * np.pi, 12 * np.pi, 8192)  # whole period of the k_j = 1 - 2j/12 comb
    m = local_wavenumber(taylor_match_field(d, g), "spectral", threshold=1e-12)
    assert abs(m.k_local[g.index_of(0.0)] - 3) < 1e-4
    assert measured_bandlimit(taylor_match_field(d, g)) <= 1 + g.dk
