import math

import numpy as np
import pytest
from scipy import integrate

from superwave.field import BandDescriptor, Grid2D, measured_bandlimit
from superwave.speckle import (
    SpeckleModel,
    generate_speckle,
    joint_cdf,
    joint_pdf_theory,
    k2_of,
    marginal_cdf,
    marginal_pdf,
    measure_fractions,
    speckle_ensemble,
    speckle_realization,
    superoscillatory_fraction_theory,
)

KMAX = np.pi / 4
RING = BandDescriptor(KMAX, "annular")
DISK = BandDescriptor(KMAX, "disk")


def test_single_plane_wave():
    m = SpeckleModel(RING, n_plane_waves=1, mean_intensity=2.0, seed=5)
    r = speckle_realization(m, Grid2D.centered(64, 1.0))
    assert np.allclose(r.field.intensity, 2.0, rtol=1e-12)
    lx, ly = r.log_gradient()
    g = np.hypot(lx.imag, ly.imag)
    assert np.allclose(g, KMAX, rtol=1e-12)
    assert np.allclose(lx.real, 0, atol=1e-12) and np.allclose(ly.real, 0, atol=1e-12)


def test_gradients_match_finite_differences():
    m = SpeckleModel(DISK, n_plane_waves=32, seed=2)
    dx = 0.01
    r = speckle_realization(m, Grid2D.centered(64, dx))
    psi = np.asarray(r.field.values)
    fd_x = (psi[:, 2:] - psi[:, :-2]) / (2 * dx)
    fd_y = (psi[2:, :] - psi[:-2, :]) / (2 * dx)
    scale = np.abs(r.grad_x).max()
    assert np.max(np.abs(fd_x - r.grad_x[:, 1:-1])) < 1e-4 * scale
    assert np.max(np.abs(fd_y - r.grad_y[1:-1, :])) < 1e-4 * scale


def test_ensemble_mean_intensity():
    m = SpeckleModel(DISK, n_plane_waves=64, mean_intensity=3.0, seed=11)
    grid = Grid2D.centered(16, 1.0)
    # one sample per realization at the origin: independent exponential draws
    vals = np.array([r.field.intensity[8, 8] for r in speckle_ensemble(m, grid, 200)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - 3.0) < 3 * se


@pytest.mark.parametrize("band", [RING, DISK, BandDescriptor(KMAX, "annular", k_min=KMAX / 2)])
def test_wavevectors_lie_in_support(band):
    r = speckle_realization(SpeckleModel(band, seed=3), Grid2D.centered(32, 1.0))
    k = np.hypot(*r.wavevectors.T)
    lo = band.k_min if band.shape == "annular" else 0.0
    assert np.all(k <= band.k_max * (1 + 1e-15)) and np.all(k >= lo * (1 - 1e-15))


def test_tapered_realization_is_bandlimited():
    # a finite window of a non-periodic field leaks; a Gaussian taper confines the
    # leakage to q with exp(-q^2 s^2) < floor
    grid = Grid2D.centered(128, 1.0)
    f = generate_speckle(SpeckleModel(DISK, seed=1), grid)
    X, Y = grid.mesh()
    s = grid.nx * grid.dx / 10
    tapered = f.replace(values=f.values * np.exp(-(X**2 + Y**2) / (2 * s * s)))
    spread = math.sqrt(math.log(1e9)) / s
    assert measured_bandlimit(tapered, 1e-9) <= KMAX + spread + grid.dkx


def test_disk_samples_uniform_by_area():
    m = SpeckleModel(DISK, n_plane_waves=4096, seed=9)
    k = np.hypot(*speckle_realization(m, Grid2D.centered(8, 1.0)).wavevectors.T)
    # area-uniform: (k / kmax)^2 is uniform on [0, 1]
    from scipy.stats import kstest

    assert kstest((k / KMAX) ** 2, "uniform").pvalue > 1e-3


def test_under_resolved_grid_rejected():
    with pytest.raises(ValueError, match="under-resolves"):
        generate_speckle(SpeckleModel(DISK), Grid2D.centered(16, 4.0))


def test_model_validation():
    with pytest.raises(ValueError):
        SpeckleModel(BandDescriptor(1.0))
    with pytest.raises(ValueError):
        SpeckleModel(DISK, n_plane_waves=0)
    with pytest.raises(ValueError):
        SpeckleModel(DISK, mean_intensity=0)
    with pytest.raises(ValueError):
        SpeckleModel(DISK, seed=-1)


def test_deterministic_and_order_independent():
    m = SpeckleModel(RING, seed=42)
    grid = Grid2D.centered(32, 1.0)
    a = [r.field.values for r in speckle_ensemble(m, grid, 4)]
    b = [r.field.values for r in speckle_ensemble(m, grid, 4, workers=3)]
    c = generate_speckle(m, grid, index=2).values
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert np.array_equal(a[2], c)
    assert not np.array_equal(a[0], a[1])


# --------------------------------------------------------------------------
# theory


def test_joint_pdf_normalised():
    val, err = integrate.dblquad(lambda g, I: joint_pdf_theory(I, g, 1.3, 0.4), 0, np.inf, 0, np.inf,
                                 epsabs=1e-10, epsrel=1e-10)
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("g", [0.1, 0.5, 1.0, 3.0])
def test_joint_marginalises(g):
    k2 = 0.4
    val, _ = integrate.quad(lambda I: joint_pdf_theory(I, g, 1.3, k2), 0, np.inf, epsabs=1e-13)
    assert val == pytest.approx(float(marginal_pdf(g, k2)), rel=1e-9)


def test_joint_pdf_vanishes_at_zero_gradient():
    assert np.all(joint_pdf_theory(np.linspace(0, 5, 11), 0.0, 1.0, 0.3) == 0)


def test_cdfs_consistent_with_densities():
    k2 = 0.25
    g = np.array([0.2, 0.7, 2.0])
    for gi, c in zip(g, marginal_cdf(g, k2)):
        assert c == pytest.approx(integrate.quad(lambda t: marginal_pdf(t, k2), 0, gi)[0], rel=1e-10)
    I, gg = 1.7, 0.9
    direct = integrate.dblquad(lambda t, s: joint_pdf_theory(s, t, 1.1, k2), 0, I, 0, gg, epsabs=1e-12)[0]
    assert float(joint_cdf(I, gg, 1.1, k2)) == pytest.approx(direct, rel=1e-8)
    assert float(joint_cdf(np.inf, np.inf, 1.1, k2)) == 1.0


def test_theory_fractions():
    assert superoscillatory_fraction_theory(RING) == pytest.approx(1 / 3, abs=1e-15)
    assert superoscillatory_fraction_theory(DISK) == pytest.approx(1 / 5, abs=1e-15)
    with pytest.raises(ValueError):
        superoscillatory_fraction_theory(BandDescriptor(1.0))


def test_annulus_limit_matches_monte_carlo_moment():
    rng = np.random.default_rng(0)
    prev = None
    for frac in (0.5, 0.9, 0.99, 0.999, 1.0):
        band = BandDescriptor(1.0, "annular", k_min=frac)
        # Monte Carlo oracle for k2 = <|k|^2>/4 with area-uniform radii
        r = np.sqrt(rng.uniform(frac**2, 1.0, 400_000))
        k2_mc = np.mean(r**2) / 4
        assert k2_of(band) == pytest.approx(k2_mc, rel=2e-3)
        f = superoscillatory_fraction_theory(band)
        if prev is not None:
            assert f > prev
        prev = f
    assert prev == pytest.approx(1 / 3, abs=1e-15)
    assert superoscillatory_fraction_theory(BandDescriptor(1.0, "annular", k_min=0.9999)) == pytest.approx(1 / 3, abs=1e-4)


# --------------------------------------------------------------------------
# measurement


@pytest.mark.parametrize("band, f", [(RING, 1 / 3), (DISK, 1 / 5)])
def test_measured_fraction_small_ensemble(band, f):
    st = measure_fractions(speckle_ensemble(SpeckleModel(band, seed=7), Grid2D.centered(256, 1.0), 6))
    assert abs(st.superoscillating_fraction - f) < 0.02
    assert 0 <= st.supergrowing_fraction <= 1
    assert st.superoscillating_halfwidth > 0
    assert st.joint_hist.sum() == pytest.approx(1.0) and st.g_hist.sum() == pytest.approx(1.0)
    assert st.marginal_tv() < 0.03


def test_fractions_invariant_under_intensity_rescaling():
    grid = Grid2D.centered(64, 1.0)
    base = measure_fractions(speckle_ensemble(SpeckleModel(DISK, seed=4), grid, 2))
    scaled = measure_fractions(speckle_ensemble(SpeckleModel(DISK, mean_intensity=37.0, seed=4), grid, 2))
    assert scaled.superoscillating_fraction == base.superoscillating_fraction
    assert scaled.supergrowing_fraction == base.supergrowing_fraction
    assert scaled.joint_tv() == pytest.approx(base.joint_tv(), abs=1e-12)


def test_null_threshold_sensitivity_is_small():
    reals = list(speckle_ensemble(SpeckleModel(DISK, seed=8), Grid2D.centered(128, 1.0), 3))
    fine = measure_fractions(reals, null_threshold=1e-6)
    coarse = measure_fractions(reals, null_threshold=1e-2)
    assert coarse.n_excluded >= fine.n_excluded
    assert abs(coarse.superoscillating_fraction - fine.superoscillating_fraction) < fine.superoscillating_halfwidth


def test_parallel_statistics_identical():
    m = SpeckleModel(RING, seed=13)
    grid = Grid2D.centered(64, 1.0)
    a = measure_fractions(speckle_ensemble(m, grid, 4))
    b = measure_fractions(speckle_ensemble(m, grid, 4, workers=2))
    assert a.as_dict() == b.as_dict()


def test_measure_needs_realizations():
    with pytest.raises(ValueError):
        measure_fractions([])
