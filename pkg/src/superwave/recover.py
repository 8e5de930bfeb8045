"""Recovering a comb-built superoscillation from noisy records.

Because a comb signal lives on a handful of known frequencies, everything
else in a measured record can be discarded: project the record onto the
teeth, keep those amplitudes, rebuild. White noise spreads its power evenly
over all frequencies, so only a fraction K / n_samples of it survives, and
coherent averaging of n records cuts it further by 1/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .comb import CombSpec, comb_fit

__all__ = [
    "NoiseModel",
    "RecoveryReport",
    "ExperimentResult",
    "add_noise",
    "project_teeth",
    "comb_record",
    "apply_tooth_transfer",
    "spectral_filter_recover",
    "superoscillation_amplitude",
    "sinc_comb",
    "noise_experiment",
]


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise.

    Give either ``sigma`` (standard deviation per real component) or ``db``,
    an amplitude ratio 20 log10(sigma / reference) relative to a reference
    amplitude supplied when the noise is drawn.
    """

    sigma: float | None = None
    db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if (self.sigma is None) == (self.db is None):
            raise ValueError("give exactly one of sigma or db")
        if self.sigma is not None and not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    def resolve_sigma(self, reference: float | None = None) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        if reference is None or not reference > 0:
            raise ValueError("a positive reference amplitude is needed for a dB noise level")
        return float(reference * 10 ** (self.db / 20))

    def rng(self, *stream: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(s) for s in stream))
        return np.random.Generator(np.random.Philox(ss))


def add_noise(signal, model: NoiseModel, reference: float | None = None, stream=(0,)):
    """signal + noise, with independent real and imaginary parts for complex input.

    Returns (noisy, info) where info records sigma and the achieved amplitude
    ratio in dB (sample standard deviation over the reference, when given).
    """
    signal = np.asarray(signal)
    sigma = model.resolve_sigma(reference)
    if sigma == 0:
        return signal.copy(), {"sigma": 0.0, "achieved_db": -math.inf if reference else None}
    rng = model.rng(*stream)
    if np.iscomplexobj(signal):
        noise = sigma * (rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape))
        achieved = math.sqrt(np.mean(np.abs(noise) ** 2) / 2)
    else:
        noise = sigma * rng.standard_normal(signal.shape)
        achieved = float(np.std(noise))
    info = {"sigma": sigma, "achieved_sigma": achieved}
    if reference:
        info["achieved_db"] = 20 * math.log10(achieved / reference)
    return signal + noise, info


def project_teeth(record, x, omegas, method: str = "exact"):
    """Least-squares amplitudes of the teeth in ``record`` sampled at ``x``.

    ``"exact"`` forms inner products with exp(i omega_k x) and solves the
    small Gram system, so off-grid teeth are handled without bin leakage.
    ``"fft"`` reads FFT bins and requires each tooth on a bin of a uniform
    record. Returns (amplitudes, leakage), leakage being the largest
    normalised off-diagonal Gram entry (0 for orthogonal teeth).
    """
    record = np.asarray(record, dtype=complex)
    x = np.asarray(x, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    n = x.size
    if method == "fft":
        dx = x[1] - x[0]
        bins = omegas * n * dx / (2 * np.pi)
        idx = np.rint(bins).astype(int)
        if np.max(np.abs(bins - idx)) > 1e-9:
            raise ValueError("fft projection needs every tooth on an FFT bin; use method='exact'")
        spec = np.fft.fft(record)
        return spec[idx % n] / n * np.exp(-1j * omegas * x[0]), 0.0
    if method != "exact":
        raise ValueError("method must be 'exact' or 'fft'")
    E = np.exp(1j * np.multiply.outer(x, omegas))
    G = E.conj().T @ E / n
    off = G - np.diag(np.diag(G))
    leakage = float(np.max(np.abs(off))) if omegas.size > 1 else 0.0
    b = E.conj().T @ record / n
    if leakage < 1e-12:
        return b / np.real(np.diag(G)), leakage
    return np.linalg.lstsq(G, b, rcond=None)[0], leakage


def comb_record(comb: CombSpec, n_periods: int = 1, samples_per_period: int = 4096, x0: float | None = None):
    """Uniform record over whole comb periods; the window starts at -P/2 by default.

    The period is 2 pi / spacing with spacing = Omega / (K - 1). Returns (x, psi).
    """
    if comb.K < 2:
        raise ValueError("a record period needs at least two teeth")
    spacing = comb.Omega / (comb.K - 1)
    P = 2 * np.pi / spacing
    n = int(n_periods) * int(samples_per_period)
    x0 = -P / 2 if x0 is None else x0
    x = x0 + np.arange(n) * (P / samples_per_period)
    return x, comb.evaluate(x)


def apply_tooth_transfer(record, x, comb: CombSpec, H) -> np.ndarray:
    """Scale each tooth's content in ``record`` by H_k, leaving everything else untouched."""
    A, _ = project_teeth(record, x, comb.omegas)
    E = np.exp(1j * np.multiply.outer(np.asarray(x, float), comb.omegas))
    return np.asarray(record) + E @ ((np.asarray(H) - 1) * A)


@dataclass(frozen=True)
class RecoveryReport:
    reconstructed: np.ndarray = dc_field(repr=False)
    amplitudes: np.ndarray = dc_field(repr=False)
    mse: float | None = None
    n_averages: int = 1
    leakage: float = 0.0
    window: tuple | None = None

    def as_dict(self) -> dict:
        return {
            "mse": self.mse,
            "n_averages": self.n_averages,
            "leakage": self.leakage,
            "window": list(self.window) if self.window else None,
            "amplitudes_re": self.amplitudes.real.tolist(),
            "amplitudes_im": self.amplitudes.imag.tolist(),
        }


def spectral_filter_recover(
    records,
    x,
    comb: CombSpec,
    window: tuple[float, float] | None = None,
    truth=None,
    method: str = "exact",
    average: str = "coherent",
) -> RecoveryReport:
    """Rebuild the comb signal from one or more noisy records.

    ``records`` is one record or an array (n_averages, n_samples). Coherent
    averaging averages the records sample by sample before projecting;
    ``average="spectral"`` projects each record and averages the complex
    amplitudes instead (identical for the exact projection, kept for
    comparison). With ``truth`` (the noiseless signal on ``x``) the MSE over
    ``window`` normalised by the true signal power there is reported.
    """
    R = np.atleast_2d(np.asarray(records, dtype=complex))
    x = np.asarray(x, dtype=float)
    if R.shape[1] != x.size:
        raise ValueError("records and x differ in length")
    if average == "coherent":
        A, leak = project_teeth(R.mean(axis=0), x, comb.omegas, method)
    elif average == "spectral":
        parts = [project_teeth(r, x, comb.omegas, method) for r in R]
        A = np.mean([p[0] for p in parts], axis=0)
        leak = parts[0][1]
    else:
        raise ValueError("average must be 'coherent' or 'spectral'")
    rec = np.exp(1j * np.multiply.outer(x, comb.omegas)) @ A
    mse = None
    if truth is not None:
        truth = np.asarray(truth)
        sel = np.ones(x.shape, bool) if window is None else (x >= window[0]) & (x <= window[1])
        mse = float(np.mean(np.abs(rec[sel] - truth[sel]) ** 2) / np.mean(np.abs(truth[sel]) ** 2))
    return RecoveryReport(rec, A, mse, R.shape[0], leak, tuple(window) if window else None)


def superoscillation_amplitude(x, psi, window: tuple[float, float]) -> float:
    """Peak |psi| inside the window."""
    x = np.asarray(x)
    sel = (x >= window[0]) & (x <= window[1])
    return float(np.max(np.abs(np.asarray(psi)[sel])))


# --------------------------------------------------------------------------
# the sinc reconstruction experiment


def sinc_comb(K: int = 21, Omega: float = 1.0, bandwidth_ratio: float = 4.0, half_window: float | None = None,
              n_fit: int = 256) -> tuple[CombSpec, tuple[float, float]]:
    """Comb fitted to a sinc whose spectral width is ``bandwidth_ratio`` times the comb span.

    The comb is symmetric (omega_min = -Omega/2); the target sin(W x)/(W x)
    with W = bandwidth_ratio * Omega / 2 is fitted at ``n_fit`` points over
    |x| <= half_window (default: the main lobe and first side lobes, 2 pi / W).
    """
    W = bandwidth_ratio * Omega / 2
    hw = 2 * np.pi / W if half_window is None else half_window
    xf = np.linspace(-hw, hw, n_fit)
    comb = comb_fit(xf, np.sinc(W * xf / np.pi), K, -Omega / 2, Omega)
    return comb, (-hw, hw)


@dataclass(frozen=True)
class ExperimentResult:
    mse: np.ndarray
    sigma: float
    a_so: float
    samples_per_period: int
    n_averages: int

    @property
    def median(self) -> float:
        return float(np.median(self.mse))


def noise_experiment(
    comb: CombSpec,
    window: tuple[float, float],
    db: float = 17.0,
    n_averages: int = 10,
    n_trials: int = 100,
    samples_per_period: int = 65536,
    n_periods: int = 1,
    seed: int = 0,
    method: str = "fft",
) -> ExperimentResult:
    """Monte Carlo of noisy records and comb recovery; trial t, average a uses substream (t, a)."""
    x, psi = comb_record(comb, n_periods, samples_per_period)
    a_so = superoscillation_amplitude(x, psi, window)
    model = NoiseModel(db=db, seed=seed)
    out = np.empty(n_trials)
    for t in range(n_trials):
        records = np.stack([add_noise(psi, model, a_so, stream=(t, a))[0] for a in range(n_averages)])
        out[t] = spectral_filter_recover(records, x, comb, window, psi, method).mse
    return ExperimentResult(out, model.resolve_sigma(a_so), a_so, samples_per_period, n_averages)
