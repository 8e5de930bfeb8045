import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superwave.comb import CombSpec
from superwave.recover import (
    NoiseModel,
    add_noise,
    apply_tooth_transfer,
    comb_record,
    noise_experiment,
    project_teeth,
    sinc_comb,
    spectral_filter_recover,
    superoscillation_amplitude,
)


def _comb(seed=0, K=7):
    rng = np.random.default_rng(seed)
    return CombSpec(K, -1.5, 3.0, rng.normal(size=K) + 1j * rng.normal(size=K))


def test_zero_noise_is_identity():
    s = np.linspace(0, 1, 50) * (1 + 1j)
    out, info = add_noise(s, NoiseModel(sigma=0.0))
    assert np.array_equal(out, s) and info["sigma"] == 0.0


def test_unit_noise_variance():
    out, info = add_noise(np.zeros(1_000_000), NoiseModel(sigma=1.0, seed=3))
    assert np.var(out) == pytest.approx(1.0, rel=5e-3)
    assert info["achieved_sigma"] == pytest.approx(1.0, rel=5e-3)


def test_db_level_relative_to_reference():
    a_so = 0.037
    m = NoiseModel(db=17.0)
    assert m.resolve_sigma(a_so) == pytest.approx(a_so * 10 ** (17 / 20), rel=1e-15)
    _, info = add_noise(np.zeros(200_000, complex), m, a_so)
    assert info["achieved_db"] == pytest.approx(17.0, abs=0.05)
    with pytest.raises(ValueError):
        m.resolve_sigma(None)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel()
    with pytest.raises(ValueError):
        NoiseModel(sigma=1.0, db=3.0)
    with pytest.raises(ValueError):
        NoiseModel(sigma=-1.0)


def test_noise_streams_are_independent_and_reproducible():
    m = NoiseModel(sigma=1.0, seed=9)
    a, _ = add_noise(np.zeros(100), m, stream=(0, 1))
    b, _ = add_noise(np.zeros(100), m, stream=(0, 1))
    c, _ = add_noise(np.zeros(100), m, stream=(0, 2))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("method", ["exact", "fft"])
def test_noiseless_reconstruction(method):
    comb = _comb()
    x, psi = comb_record(comb, 1, 1024)
    rep = spectral_filter_recover(psi, x, comb, truth=psi, method=method)
    assert np.max(np.abs(rep.reconstructed - psi)) < 1e-10
    assert np.max(np.abs(rep.amplitudes - comb.amplitudes)) < 1e-10
    assert rep.mse < 1e-20


def test_fft_and_exact_agree_on_noisy_record():
    comb = _comb(1)
    x, psi = comb_record(comb, 2, 512)
    noisy, _ = add_noise(psi, NoiseModel(sigma=2.0, seed=4))
    a, _ = project_teeth(noisy, x, comb.omegas, "exact")
    b, _ = project_teeth(noisy, x, comb.omegas, "fft")
    assert np.max(np.abs(a - b)) < 1e-12


def test_off_grid_teeth():
    comb = CombSpec(4, 0.3, 1.0, np.array([1, -1j, 0.5, 2.0]))
    x = np.linspace(0, 17.3, 900)
    psi = comb.evaluate(x)
    A, leak = project_teeth(psi, x, comb.omegas)
    assert leak > 1e-3
    assert np.max(np.abs(A - comb.amplitudes)) < 1e-10
    with pytest.raises(ValueError, match="bin"):
        project_teeth(psi, x, comb.omegas, "fft")


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_filter_is_idempotent(seed):
    comb = _comb(seed % 1000)
    x, psi = comb_record(comb, 1, 256)
    noisy, _ = add_noise(psi, NoiseModel(sigma=1.0, seed=seed))
    once = spectral_filter_recover(noisy, x, comb).reconstructed
    twice = spectral_filter_recover(once, x, comb).reconstructed
    assert np.max(np.abs(twice - once)) < 1e-12 * max(1.0, np.abs(once).max())


def test_coherent_and_spectral_averaging_match():
    comb = _comb(2)
    x, psi = comb_record(comb, 1, 256)
    m = NoiseModel(sigma=1.0, seed=5)
    R = np.stack([add_noise(psi, m, stream=(i,))[0] for i in range(5)])
    a = spectral_filter_recover(R, x, comb)
    b = spectral_filter_recover(R, x, comb, average="spectral")
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-13)
    assert a.n_averages == 5


def test_error_falls_as_one_over_averages():
    comb = _comb(3)
    x, psi = comb_record(comb, 1, 256)
    m = NoiseModel(sigma=1.0, seed=11)
    ns = [1, 2, 4, 8, 16, 32, 64]
    errs = []
    for n in ns:
        trials = []
        for t in range(60):
            R = np.stack([add_noise(psi, m, stream=(n, t, a))[0] for a in range(n)])
            trials.append(spectral_filter_recover(R, x, comb, truth=psi).mse)
        errs.append(np.mean(trials))
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.15)


def test_doubling_periods_halves_amplitude_variance():
    comb = _comb(4)
    m = NoiseModel(sigma=1.0, seed=21)
    var = []
    for periods in (1, 2):
        x, psi = comb_record(comb, periods, 256)
        A = np.array([project_teeth(add_noise(psi, m, stream=(periods, t))[0], x, comb.omegas, "fft")[0]
                      for t in range(200)])
        var.append(np.mean(np.abs(A - comb.amplitudes) ** 2))
    assert var[0] / var[1] == pytest.approx(2.0, rel=0.2)


def test_transfer_commutes_with_recovery(rng):
    comb = _comb(5)
    x, psi = comb_record(comb, 1, 256)
    noisy, _ = add_noise(psi, NoiseModel(sigma=0.7, seed=2))
    for _ in range(5):
        H = rng.normal(size=comb.K) + 1j * rng.normal(size=comb.K)
        lhs = spectral_filter_recover(apply_tooth_transfer(noisy, x, comb, H), x, comb).amplitudes
        rhs = H * spectral_filter_recover(noisy, x, comb).amplitudes
        assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.abs(rhs).max()


def test_record_needs_two_teeth_and_matching_lengths():
    with pytest.raises(ValueError):
        comb_record(CombSpec(1, 1.0, 1.0, np.ones(1)))
    comb = _comb()
    x, psi = comb_record(comb, 1, 64)
    with pytest.raises(ValueError):
        spectral_filter_recover(psi[:-1], x, comb)
    with pytest.raises(ValueError):
        spectral_filter_recover(psi, x, comb, average="median")


def test_superoscillation_amplitude_window():
    x = np.linspace(-2, 2, 401)
    psi = np.exp(-x**2) * (1 + 5 * (np.abs(x) > 1.5))
    assert superoscillation_amplitude(x, psi, (-1, 1)) == pytest.approx(1.0)


def test_sinc_experiment_small():
    comb, window = sinc_comb()
    res = noise_experiment(comb, window, n_trials=8, samples_per_period=16384, seed=1)
    assert res.sigma == pytest.approx(res.a_so * 10 ** (17 / 20))
    assert res.mse.shape == (8,)
    assert 1e-3 < res.median < 0.2
    again = noise_experiment(comb, window, n_trials=8, samples_per_period=16384, seed=1)
    assert np.array_equal(res.mse, again.mse)
