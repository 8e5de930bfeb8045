import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superwave.direct import ProductFunctionParams, product_function, taylor_match_coeffs, taylor_match_field
from superwave.field import Grid1D, Grid2D, SampledField
from superwave.local import (
    crossing_wavenumber,
    derivative,
    local_growth,
    local_map,
    local_wavenumber,
    super_regions,
    supergrowth_strength,
)

FINE = Grid1D.span(-5, 5, 4096)


def _interior(n, margin=20):
    s = np.zeros(n, bool)
    s[margin:-margin] = True
    return s


def test_pure_exponential_wavenumber():
    g = Grid1D.span(0, 2 * np.pi, 256)
    m = local_wavenumber(SampledField(g, np.exp(3j * g.x)))
    assert m.method == "spectral"
    np.testing.assert_allclose(m.k_local, 3.0, atol=1e-8)


def test_product_function_at_origin():
    m = local_map(product_function(ProductFunctionParams(20, 6.0), FINE), 1.0, "fd4")
    i = FINE.index_of(0.0)
    assert abs(m.k_local[i] - 6) < 1e-6
    assert abs(m.kappa_local[i]) < 1e-6


def test_gaussian_wavenumber_and_growth():
    f = SampledField(FINE, np.exp(-FINE.x ** 2 / 2))
    kmap = local_wavenumber(f, "fd4")
    gmap = local_growth(f, "fd4")
    ok = kmap.valid & _interior(FINE.size)
    assert np.all(kmap.k_local[ok] == 0)
    np.testing.assert_allclose(gmap.kappa_local[ok], -FINE.x[ok], atol=1e-6)


def test_exponential_growth_interior():
    f = SampledField(FINE, np.exp(2 * FINE.x))
    m = local_growth(f, "fd4")
    ok = m.valid & _interior(FINE.size)
    assert ok.sum() > FINE.size / 2
    np.testing.assert_allclose(m.kappa_local[ok], 2.0, atol=1e-6)


def test_gamma_of_gaussian_irradiance():
    g = Grid1D.span(-4, 4, 2048)
    I = SampledField(g, np.exp(-g.x ** 2))
    m = supergrowth_strength(I, 4.0, method="fd4")
    ok = m.valid & _interior(g.size)
    np.testing.assert_allclose(m.gamma[ok], np.abs(-2 * g.x[ok]) / 4, atol=1e-6)
    above = (m.gamma > 1) & ok
    assert np.all(np.abs(g.x[above]) > 2 - 1e-9)
    assert np.all(m.gamma[ok & (np.abs(g.x) > 2.01)] > 1)


def test_gamma_constant_irradiance_zero():
    g = Grid1D(64, 1.0)
    m = supergrowth_strength(SampledField(g, np.full(64, 3.0)), 1.0)
    assert np.all(m.gamma == 0)


def test_gamma_rejects_negative_irradiance():
    g = Grid1D(8, 1.0)
    with pytest.raises(ValueError):
        supergrowth_strength(SampledField(g, -np.ones(8)), 1.0, irradiance=True)


def test_engineered_supergrowth_vs_control():
    # e^{b x} mimicked by a unit-band comb: irradiance grows at 2b against an irradiance band of 2
    g = Grid1D.span(-3, 3, 2048)
    near0 = np.abs(g.x) < 0.2
    designed = taylor_match_field(taylor_match_coeffs(12, -1.5j), g)
    control = taylor_match_field(taylor_match_coeffs(12, -0.5j), g)
    gd = supergrowth_strength(designed, 2.0, method="fd4").gamma[near0]
    gc = supergrowth_strength(control, 2.0, method="fd4").gamma[near0]
    assert np.all(gd > 1)
    assert np.all(gc <= 1)


def test_zero_field_all_invalid_with_warning():
    with pytest.warns(RuntimeWarning):
        m = local_map(SampledField(Grid1D(16, 1.0), np.zeros(16)))
    assert not m.valid.any()


def test_super_regions_pure_tone_at_limit():
    g = Grid1D.span(0, 2 * np.pi, 128)
    rep = super_regions(local_map(SampledField(g, np.exp(1j * g.x)), 1.0), 1.0)
    assert rep.superoscillating_fraction == 0


def test_super_regions_product_function():
    m = local_map(product_function(ProductFunctionParams(20, 6.0), FINE), 1.0, "fd4")
    rep = super_regions(m, 1.0)
    assert rep.superoscillating_fraction > 0
    assert any(r.lower[0] <= 0 <= r.upper[0] for r in rep.superoscillating_regions)
    # regions are disjoint
    spans = sorted((r.lower[0], r.upper[0]) for r in rep.superoscillating_regions)
    assert all(a[1] < b[0] for a, b in zip(spans, spans[1:]))


def test_super_regions_requires_valid_samples():
    with pytest.warns(RuntimeWarning):
        m = local_map(SampledField(Grid1D(8, 1.0), np.zeros(8)), 1.0)
    with pytest.raises(ValueError):
        super_regions(m, 1.0)


def _bandlimited(seed, n=512):
    r = np.random.default_rng(seed)
    g = Grid1D.span(0, 2 * np.pi, n)
    ks = np.arange(-4, 5)
    c = r.normal(size=ks.size) + 1j * r.normal(size=ks.size)
    c[ks == 0] += 8  # keep the field nowhere zero
    return SampledField(g, np.exp(1j * np.outer(g.x, ks)) @ c)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_log_derivative_matches_central_difference_oracle(seed):
    f = _bandlimited(seed)
    m = local_map(f, method="spectral")
    v = f.values
    h = f.grid.spacing
    # independent oracle: periodic central differences of ln f via the derivative of f
    d = (np.roll(v, -1) - np.roll(v, 1)) / (2 * h)
    d4 = (-np.roll(v, -2) + 8 * np.roll(v, -1) - 8 * np.roll(v, 1) + np.roll(v, 2)) / (12 * h)
    ref = d4 / v
    assert np.max(np.abs(d - d4)) < 1e-2 * np.max(np.abs(v))  # sanity of the oracle itself
    got = m.kappa_local + 1j * m.k_local
    assert np.max(np.abs(got - ref)[m.valid]) < 1e-6 * np.max(np.abs(ref)) + 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.floats(1e-3, 1e3), c=st.integers(-5, 5))
def test_symmetries(seed, scale, c):
    f = _bandlimited(seed)
    base = local_map(f, 1.0, "spectral")
    scaled = local_map(f.replace(values=f.values * scale), 1.0, "spectral")
    assert np.array_equal(scaled.valid, base.valid)
    np.testing.assert_allclose(scaled.k_local, base.k_local, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(scaled.kappa_local, base.kappa_local, rtol=1e-12, atol=1e-12)
    shifted = local_map(f.replace(values=f.values * np.exp(1j * c * f.grid.x)), 1.0, "spectral")
    np.testing.assert_allclose(shifted.k_local, base.k_local + c, atol=1e-8)
    np.testing.assert_allclose(shifted.kappa_local, base.kappa_local, atol=1e-8)
    conj = local_map(f.replace(values=np.conj(f.values)), 1.0, "spectral")
    np.testing.assert_allclose(conj.k_local, -base.k_local, atol=1e-10)
    np.testing.assert_allclose(conj.kappa_local, base.kappa_local, atol=1e-10)


def test_two_dimensional_gradient_magnitude():
    g = Grid2D(64, 64, 2 * np.pi / 64, 2 * np.pi / 64)
    X, Y = g.mesh()
    m = local_map(SampledField(g, np.exp(1j * (3 * X + 4 * Y))), 1.0)
    np.testing.assert_allclose(m.k_local, 5.0, atol=1e-8)
    np.testing.assert_allclose(m.k_vector[0], 3.0, atol=1e-8)
    np.testing.assert_allclose(m.k_vector[1], 4.0, atol=1e-8)


def test_derivative_methods_agree():
    f = _bandlimited(7)
    a = derivative(f, method="spectral")
    b = derivative(f, method="fd4")
    inner = _interior(f.grid.size, 2)
    assert np.max(np.abs(a - b)[inner]) < 1e-5 * np.max(np.abs(a))
    with pytest.raises(ValueError):
        derivative(f, method="nope")


def test_crossing_wavenumber_of_cosine():
    g = Grid1D.span(-10, 10, 4001)
    k = crossing_wavenumber(SampledField(g, np.cos(2.5 * g.x)))
    ok = np.isfinite(k)
    np.testing.assert_allclose(k[ok], 2.5, rtol=1e-4)
