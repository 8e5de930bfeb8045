"""Uniform grids, sampled complex fields and their spectra.

Every other module passes :class:`SampledField` objects around. Spectra use a
symmetric continuous-transform normalisation,

    F(k) = dx / sqrt(2 pi) * sum_j f(x_j) exp(-i k x_j),

so that ``sum |F|^2 dk == sum |f|^2 dx`` holds for any grid (Parseval), and
bins sit at angular wavenumbers ``2 pi j / (n dx)`` in numpy FFT order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

__all__ = [
    "Grid1D",
    "Grid2D",
    "BandDescriptor",
    "SampledField",
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "measured_bandlimit",
    "series_coefficients",
]

BAND_SHAPES = ("rectangular", "disk", "annular")


@dataclass(frozen=True)
class Grid1D:
    n_samples: int
    spacing: float
    origin: float = 0.0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValueError(f"n_samples must be an integer >= 2, got {self.n_samples}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive and finite, got {self.spacing}")
        if not math.isfinite(self.origin):
            raise ValueError("origin must be finite")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", float(self.origin))

    @classmethod
    def centered(cls, n_samples: int, spacing: float) -> "Grid1D":
        """Grid whose sample ``n_samples // 2`` sits exactly at x = 0."""
        return cls(n_samples, spacing, -(n_samples // 2) * spacing)

    @classmethod
    def span(cls, start: float, stop: float, n_samples: int) -> "Grid1D":
        """``n_samples`` points covering the half-open interval [start, stop)."""
        return cls(n_samples, (stop - start) / n_samples, start)

    @property
    def ndim(self) -> int:
        return 1

    @property
    def shape(self) -> tuple[int]:
        return (self.n_samples,)

    @property
    def size(self) -> int:
        return self.n_samples

    @property
    def length(self) -> float:
        return self.n_samples * self.spacing

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_samples)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_samples, self.spacing)

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.length

    def index_of(self, x: float) -> int:
        """Index of the sample nearest to ``x``."""
        return int(np.clip(round((x - self.origin) / self.spacing), 0, self.n_samples - 1))


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    dx: float
    dy: float
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v}")
            object.__setattr__(self, name, int(v))
        for name in ("dx", "dy"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, float(v))
        for name in ("origin_x", "origin_y"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def centered(cls, nx: int, dx: float, ny: int | None = None, dy: float | None = None) -> "Grid2D":
        ny = nx if ny is None else ny
        dy = dx if dy is None else dy
        return cls(nx, ny, dx, dy, -(nx // 2) * dx, -(ny // 2) * dy)

    @property
    def ndim(self) -> int:
        return 2

    @property
    def shape(self) -> tuple[int, int]:
        # rows are y, columns are x
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        return self.origin_x + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin_y + self.dy * np.arange(self.ny)

    @property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nx, self.dx)

    @property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.ny, self.dy)

    @property
    def dkx(self) -> float:
        return 2 * np.pi / (self.nx * self.dx)

    @property
    def dky(self) -> float:
        return 2 * np.pi / (self.ny * self.dy)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y)

    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.kx, self.ky)


@dataclass(frozen=True)
class BandDescriptor:
    """Declared spectral support of a field.

    ``second_moment_k2`` is the k2 entering the speckle intensity/phase-gradient
    law: a quarter of the mean squared wavenumber |k|^2 over the support, with
    uniform power per unit area. This gives k2 = k_max^2/4 for a thin ring and
    k_max^2/8 for a uniform disk.
    """

    k_max: float
    shape: str = "rectangular"
    k_min: float | None = None

    def __post_init__(self):
        if not (self.k_max > 0 and math.isfinite(self.k_max)):
            raise ValueError(f"k_max must be positive, got {self.k_max}")
        if self.shape not in BAND_SHAPES:
            raise ValueError(f"shape must be one of {BAND_SHAPES}, got {self.shape!r}")
        if self.shape == "annular":
            k_min = self.k_max if self.k_min is None else float(self.k_min)
            if not 0 <= k_min <= self.k_max:
                raise ValueError("annular band requires 0 <= k_min <= k_max")
            object.__setattr__(self, "k_min", k_min)
        elif self.k_min is not None:
            raise ValueError("k_min is only meaningful for an annular band")

    @property
    def mean_k_squared(self) -> float:
        """<|k|^2> over a two-dimensional support, uniform per unit area."""
        if self.shape == "disk":
            return self.k_max**2 / 2
        if self.shape == "annular":
            return (self.k_max**2 + self.k_min**2) / 2
        return 2 * self.k_max**2 / 3

    @property
    def second_moment_k2(self) -> float:
        return self.mean_k_squared / 4


def _freeze(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.complex128, copy=True)
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class SampledField:
    """Complex samples of a scalar field on a uniform grid.

    ``meta`` carries provenance such as a ``log_scale`` offset: when present,
    the physical field equals ``values * exp(meta["log_scale"])``.
    """

    grid: Grid1D | Grid2D
    values: np.ndarray
    band: BandDescriptor | None = None
    meta: Mapping[str, Any] = dc_field(default_factory=dict)

    def __post_init__(self):
        values = _freeze(self.values)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"field has non-finite values, first at index {tuple(int(i) for i in bad)}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @property
    def ndim(self) -> int:
        return self.grid.ndim

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @property
    def power(self) -> float:
        """Integrated |f|^2 (sum times cell area)."""
        return float(np.sum(self.intensity) * _cell(self.grid))

    def replace(self, values=None, band=..., meta=None) -> "SampledField":
        return SampledField(
            self.grid,
            self.values if values is None else values,
            self.band if band is ... else band,
            self.meta if meta is None else meta,
        )


def _cell(grid) -> float:
    return grid.spacing if grid.ndim == 1 else grid.dx * grid.dy


def _cell_k(grid) -> float:
    return grid.dk if grid.ndim == 1 else grid.dkx * grid.dky


@dataclass(frozen=True)
class Spectrum:
    """Continuous-normalised spectrum of a field, bins in numpy FFT order."""

    grid: Grid1D | Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = _freeze(self.values)
        if values.shape != self.grid.shape:
            raise ValueError(f"spectrum shape {values.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> np.ndarray:
        if self.grid.ndim != 1:
            raise AttributeError("use kx/ky for a two-dimensional spectrum")
        return self.grid.k

    @property
    def dk(self) -> float:
        return _cell_k(self.grid)

    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return self.grid.kmesh()

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dk)


def _phase_and_scale(grid):
    if grid.ndim == 1:
        phase = np.exp(-1j * grid.k * grid.origin)
        scale = grid.spacing / math.sqrt(2 * np.pi)
    else:
        kx, ky = grid.kmesh()
        phase = np.exp(-1j * (kx * grid.origin_x + ky * grid.origin_y))
        scale = grid.dx * grid.dy / (2 * np.pi)
    return phase, scale


def forward_transform(field: SampledField) -> Spectrum:
    values = np.asarray(field.values)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot transform a field with non-finite values")
    phase, scale = _phase_and_scale(field.grid)
    return Spectrum(field.grid, scale * phase * np.fft.fftn(values))


def inverse_transform(spec: Spectrum, grid=None, band: BandDescriptor | None = None) -> SampledField:
    if grid is not None and grid != spec.grid:
        raise ValueError("spectrum grid does not match the requested real-space grid")
    values = np.asarray(spec.values)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot invert a spectrum with non-finite values")
    phase, scale = _phase_and_scale(spec.grid)
    return SampledField(spec.grid, np.fft.ifftn(values / (scale * phase)), band)


def measured_bandlimit(field: SampledField, floor: float = 1e-9, axis: int | None = None) -> float:
    """Smallest K such that the power at |k| > K is below ``floor`` times the total.

    For 2D fields ``axis=None`` uses the radial wavenumber; ``axis=0`` (x) or
    ``axis=1`` (y) uses the marginal along one axis. The result is always a
    bin wavenumber, so it is resolved to one spectral bin.
    """
    if not 0 < floor < 1:
        raise ValueError("floor must lie strictly between 0 and 1")
    if field.values.size == 0:
        raise ValueError("empty field")
    p = np.abs(np.fft.fftn(field.values)) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    grid = field.grid
    if grid.ndim == 1:
        kabs = np.abs(grid.k)
    else:
        kx, ky = grid.kmesh()
        kabs = {None: np.hypot(kx, ky), 0: np.abs(kx), 1: np.abs(ky)}[axis]
    kabs, p = kabs.ravel(), p.ravel()
    order = np.argsort(kabs, kind="stable")
    ks, ps = kabs[order], p[order]
    uniq, first = np.unique(ks, return_index=True)
    per_level = np.add.reduceat(ps, first)
    # outside[i]: power strictly above uniq[i]
    outside = np.concatenate([np.cumsum(per_level[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(outside < floor * total)[0]
    return float(uniq[ok[0]])


def series_coefficients(field: SampledField) -> tuple[np.ndarray, np.ndarray]:
    """Fourier-series coefficients of a 1D record spanning whole periods.

    Returns ``(k, c)`` with ``f(x) = sum c e^{i k x}`` on the sample points;
    the grid origin is accounted for.
    """
    grid = field.grid
    if grid.ndim != 1:
        raise ValueError("series_coefficients expects a 1D field")
    c = np.fft.fft(field.values) / grid.n_samples * np.exp(-1j * grid.k * grid.origin)
    return grid.k, c
