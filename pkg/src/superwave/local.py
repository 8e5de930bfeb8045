"""Local wavenumber, local growth rate and supergrowth strength.

For a field f the logarithmic derivative splits as

    d/dx ln f = kappa(x) + i k(x),

with k the local wavenumber (phase gradient) and kappa the local growth rate
(log-amplitude gradient). Samples where |f| falls below ``threshold * max|f|``
are flagged invalid: the log-derivative is singular at zeros.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .field import SampledField

__all__ = [
    "LocalMap",
    "Region",
    "SuperRegionReport",
    "derivative",
    "local_map",
    "local_wavenumber",
    "local_growth",
    "supergrowth_strength",
    "super_regions",
    "crossing_wavenumber",
]

DEFAULT_THRESHOLD = 1e-6
LIMIT_RTOL = 1e-9
# relative spectral power above half-Nyquist below which a record counts as
# spectrally resolved (no wrap-around discontinuity)
_RESOLVED_POWER = 1e-20


@dataclass(frozen=True)
class LocalMap:
    grid: object
    k_local: np.ndarray
    kappa_local: np.ndarray
    gamma: np.ndarray
    valid: np.ndarray
    reference_bandlimit: float | None = None
    k_vector: np.ndarray | None = None
    kappa_vector: np.ndarray | None = None
    method: str = "spectral"


@dataclass(frozen=True)
class Region:
    kind: str  # "superoscillating" or "supergrowing"
    lower: tuple
    upper: tuple
    n_samples: int


@dataclass(frozen=True)
class SuperRegionReport:
    superoscillating_fraction: float
    supergrowing_fraction: float
    superoscillating_regions: list
    supergrowing_regions: list
    reference_bandlimit: float
    n_valid: int


def _is_resolved(values: np.ndarray) -> bool:
    p = np.abs(np.fft.fftn(values)) ** 2
    total = p.sum()
    if total == 0:
        return True
    masks = []
    for ax, n in enumerate(values.shape):
        f = np.abs(np.fft.fftfreq(n))
        shape = [1] * values.ndim
        shape[ax] = n
        masks.append((f > 0.25).reshape(shape))
    high = np.zeros(values.shape, dtype=bool)
    for m in masks:
        high = high | m
    return p[high].sum() <= _RESOLVED_POWER * total


def _fd4(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    # second-order one-sided stencils at the two edges on each side
    edge = np.gradient(v[:5], h, axis=0, edge_order=2)
    out[:2] = edge[:2]
    edge = np.gradient(v[-5:], h, axis=0, edge_order=2)
    out[-2:] = edge[-2:]
    return np.moveaxis(out, 0, axis)


def _spectral(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    n = values.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, h)
    if n % 2 == 0:
        k[n // 2] = 0.0  # Nyquist bin has no well-defined derivative
    shape = [1] * values.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(values, axis=axis) * (1j * k).reshape(shape), axis=axis)


def derivative(field: SampledField, axis: int = 0, method: str = "auto") -> np.ndarray:
    """Derivative of the samples along ``axis`` (0 = x, 1 = y).

    ``method`` is ``"spectral"``, ``"fd4"`` (fourth-order central differences)
    or ``"auto"``, which picks spectral differentiation when the record is
    spectrally resolved and periodic-compatible, and fd4 otherwise.
    """
    method = _resolve_method(field.values, method)
    g = field.grid
    if g.ndim == 1:
        h, ax = g.spacing, 0
    else:
        h, ax = (g.dx, 1) if axis == 0 else (g.dy, 0)
    values = np.asarray(field.values)
    if method == "spectral":
        return _spectral(values, h, ax)
    return _fd4(values, h, ax)


def _resolve_method(values, method):
    if method not in ("auto", "spectral", "fd4"):
        raise ValueError(f"unknown derivative method {method!r}")
    if method == "auto":
        return "spectral" if _is_resolved(values) else "fd4"
    return method


def _valid_mask(amplitude: np.ndarray, threshold: float) -> np.ndarray:
    peak = amplitude.max() if amplitude.size else 0.0
    if peak == 0:
        warnings.warn("field is identically zero; every sample is invalid", RuntimeWarning, stacklevel=3)
        return np.zeros(amplitude.shape, dtype=bool)
    return amplitude >= threshold * peak


def local_map(
    field: SampledField,
    bandlimit: float | None = None,
    method: str = "auto",
    threshold: float = DEFAULT_THRESHOLD,
) -> LocalMap:
    """Local wavenumber, growth rate and (given a bandlimit) supergrowth strength.

    In 2D ``k_local`` is |grad chi| and ``kappa_local`` is |grad ln|f||; the
    signed components are kept in ``k_vector``/``kappa_vector``. ``gamma`` is
    |kappa| / bandlimit, i.e. the irradiance growth rate over the irradiance
    band limit 2 * bandlimit.
    """
    f = np.asarray(field.values)
    method = _resolve_method(f, method)
    valid = _valid_mask(np.abs(f), threshold)
    axes = (0,) if field.ndim == 1 else (0, 1)
    k_parts, kappa_parts = [], []
    with np.errstate(divide="ignore", invalid="ignore"):
        for axis in axes:
            logd = np.where(valid, derivative(field, axis, method) / np.where(valid, f, 1.0), complex(np.nan, np.nan))
            k_parts.append(logd.imag)
            kappa_parts.append(logd.real)
    if field.ndim == 1:
        k, kappa = k_parts[0], kappa_parts[0]
        kvec = kappavec = None
    else:
        kvec, kappavec = np.stack(k_parts), np.stack(kappa_parts)
        k, kappa = np.hypot(*kvec), np.hypot(*kappavec)
    gamma = np.abs(kappa) / bandlimit if bandlimit else np.full(f.shape, np.nan)
    return LocalMap(field.grid, k, kappa, gamma, valid, bandlimit, kvec, kappavec, method)


def local_wavenumber(field: SampledField, method: str = "auto", threshold: float = DEFAULT_THRESHOLD) -> LocalMap:
    """k(x) = Im d/dx ln f(x); in 2D the magnitude |grad chi|."""
    return local_map(field, None, method, threshold)


def local_growth(field: SampledField, method: str = "auto", threshold: float = DEFAULT_THRESHOLD) -> LocalMap:
    """kappa(x) = Re d/dx ln f(x); in 2D the magnitude |grad ln|f||."""
    return local_map(field, None, method, threshold)


def supergrowth_strength(
    field: SampledField,
    irradiance_bandlimit: float,
    irradiance: bool | None = None,
    method: str = "auto",
    threshold: float = DEFAULT_THRESHOLD,
) -> LocalMap:
    """Gamma = |d ln I / dx| / irradiance_bandlimit.

    ``irradiance_bandlimit`` is the band limit of the irradiance, twice that of
    the underlying field. The input is read as an irradiance when it is
    real-valued (``irradiance=None``) or when ``irradiance=True``; otherwise
    I = |f|^2 is formed first. The returned ``kappa_local`` is the irradiance
    growth rate and ``k_local`` the field wavenumber (NaN for irradiance input).
    """
    if not irradiance_bandlimit > 0:
        raise ValueError("irradiance_bandlimit must be positive")
    f = np.asarray(field.values)
    if irradiance is None:
        irradiance = not np.any(f.imag)
    if irradiance:
        I = f.real
        if np.any(I < 0):
            raise ValueError("irradiance has negative samples")
        k_map = None
    else:
        I = np.abs(f) ** 2
        k_map = local_map(field, None, method, threshold)
    ifield = SampledField(field.grid, I)
    m = local_map(ifield, None, method, threshold**2)
    # irradiance is real, so the full log-derivative sits in kappa
    gamma = np.abs(m.kappa_local) / irradiance_bandlimit
    k = k_map.k_local if k_map is not None else np.full(I.shape, np.nan)
    valid = m.valid if k_map is None else (m.valid & k_map.valid)
    return LocalMap(
        field.grid, k, m.kappa_local, gamma, valid, irradiance_bandlimit,
        None if k_map is None else k_map.k_vector, m.kappa_vector, m.method,
    )


def _regions(mask: np.ndarray, grid, kind: str) -> list[Region]:
    labels, n = ndimage.label(mask)
    out = []
    for sl, lab in zip(ndimage.find_objects(labels), range(1, n + 1)):
        count = int(np.sum(labels[sl] == lab))
        if grid.ndim == 1:
            x = grid.x
            out.append(Region(kind, (float(x[sl[0].start]),), (float(x[sl[0].stop - 1]),), count))
        else:
            x, y = grid.x, grid.y
            out.append(Region(
                kind,
                (float(x[sl[1].start]), float(y[sl[0].start])),
                (float(x[sl[1].stop - 1]), float(y[sl[0].stop - 1])),
                count,
            ))
    return out


def super_regions(m: LocalMap, bandlimit: float) -> SuperRegionReport:
    """Fractions and connected regions where |k| or Gamma exceed their limits.

    Supergrowth uses ``m.gamma > 1`` when Gamma is available, otherwise
    |kappa| > bandlimit.
    """
    valid = np.asarray(m.valid)
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("local map has no valid samples")
    # a tone exactly at the limit must not count as super through rounding
    edge = 1 + LIMIT_RTOL
    with np.errstate(invalid="ignore"):
        so = valid & (np.abs(m.k_local) > bandlimit * edge)
        if np.all(np.isnan(m.gamma[valid])):
            sg = valid & (np.abs(m.kappa_local) > bandlimit * edge)
        else:
            sg = valid & (m.gamma > edge)
    return SuperRegionReport(
        float(so.sum() / n_valid),
        float(sg.sum() / n_valid),
        _regions(so, m.grid, "superoscillating"),
        _regions(sg, m.grid, "supergrowing"),
        float(bandlimit),
        n_valid,
    )


def crossing_wavenumber(field: SampledField) -> np.ndarray:
    """Local wavenumber of a real 1D oscillation from its zero-crossing spacing.

    Between consecutive sign changes of the real part, separated by a distance
    d, the local wavenumber is pi / d. Samples outside the first and last
    crossing are NaN. Useful for real waveforms, whose phase gradient is zero
    away from nulls.
    """
    if field.ndim != 1:
        raise ValueError("crossing_wavenumber expects a 1D field")
    x = field.grid.x
    v = np.asarray(field.values).real
    s = np.signbit(v)
    idx = np.nonzero(s[1:] != s[:-1])[0]
    out = np.full(v.shape, np.nan)
    if idx.size < 2:
        return out
    # linear interpolation of each crossing position
    x0, x1, v0, v1 = x[idx], x[idx + 1], v[idx], v[idx + 1]
    xc = x0 - v0 * (x1 - x0) / (v1 - v0)
    for a, b, ia, ib in zip(xc[:-1], xc[1:], idx[:-1], idx[1:]):
        out[ia + 1 : ib + 1] = np.pi / (b - a)
    return out
