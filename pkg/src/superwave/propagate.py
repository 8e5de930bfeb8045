"""Scalar free-space propagation and quasiperiodic hole-array apertures.

Propagation uses the angular-spectrum method. The default kernel is the
paraxial (Fresnel) transfer phase exp(-i z (kx^2 + ky^2) / (2k)); the full
Helmholtz kernel exp(i z (kz - k)) is available for wide-angle fields. Both
omit the common carrier exp(i k z).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .field import Grid1D, Grid2D, SampledField

__all__ = [
    "PropagationSetup",
    "HoleArraySpec",
    "Hotspot",
    "HotspotReport",
    "InfeasiblePacking",
    "propagate_field",
    "spectral_leakage",
    "beam_width",
    "gaussian_beam",
    "gaussian_width_theory",
    "quasiperiodic_points",
    "quasiperiodic_mask",
    "find_hotspots",
    "carpet_scan",
]

# fraction of spectral power in the outer tenth of the band that triggers a warning
LEAKAGE_WARN = 0.01


@dataclass(frozen=True)
class PropagationSetup:
    """Wavelength, distance and input field (lengths in the grid's units)."""

    wavelength: float
    z: float
    field: SampledField
    pad: int = 2
    kernel: str = "paraxial"

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not math.isfinite(self.z):
            raise ValueError("z must be finite")
        if int(self.pad) != self.pad or self.pad < 1:
            raise ValueError("pad must be a positive integer")
        if self.kernel not in ("paraxial", "helmholtz"):
            raise ValueError(f"unknown kernel {self.kernel!r}")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength


def _padded(values: np.ndarray, pad: int) -> tuple[np.ndarray, tuple]:
    if pad == 1:
        return values, tuple(slice(None) for _ in values.shape)
    shape = tuple(n * pad for n in values.shape)
    out = np.zeros(shape, dtype=complex)
    sl = tuple(slice((s - n) // 2, (s - n) // 2 + n) for s, n in zip(shape, values.shape))
    out[sl] = values
    return out, sl


def _kgrids(shape, spacings):
    return [2 * np.pi * np.fft.fftfreq(n, d) for n, d in zip(shape, spacings)]


def _spacings(grid):
    # array axis order: (y, x) for 2D
    return (grid.spacing,) if grid.ndim == 1 else (grid.dy, grid.dx)


def spectral_leakage(field: SampledField) -> float:
    """Share of spectral power in the outer tenth of the band (per axis) below Nyquist."""
    v = np.asarray(field.values)
    p = np.abs(np.fft.fftn(v)) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    edge = np.zeros(v.shape, dtype=bool)
    for ax, n in enumerate(v.shape):
        f = np.abs(np.fft.fftfreq(n))
        shape = [1] * v.ndim
        shape[ax] = n
        edge |= (f > 0.45).reshape(shape)
    return float(p[edge].sum() / total)


def _transfer(setup: PropagationSetup, shape, spacings) -> np.ndarray:
    ks = _kgrids(shape, spacings)
    if len(ks) == 1:
        kperp2 = ks[0] ** 2
    else:
        kperp2 = ks[0][:, None] ** 2 + ks[1][None, :] ** 2
    k, z = setup.k, setup.z
    if setup.kernel == "paraxial":
        return np.exp(-1j * z * kperp2 / (2 * k))
    kz = np.sqrt((k * k - kperp2).astype(complex))  # imaginary for evanescent waves
    return np.exp(1j * z * (kz - k))


def propagate_field(setup: PropagationSetup) -> SampledField:
    """Field after free propagation over ``setup.z``, on the input grid.

    With ``pad > 1`` the field is zero padded to ``pad`` times its size before
    the transform and cropped afterwards, which suppresses wrap-around at the
    cost of losing whatever leaves the window. ``pad=1`` is exactly unitary
    (paraxial kernel).
    """
    field = setup.field
    leak = spectral_leakage(field)
    if leak > LEAKAGE_WARN:
        warnings.warn(f"field has {leak:.2%} of its power near the grid Nyquist limit; expect aliasing",
                      RuntimeWarning, stacklevel=2)
    if setup.z == 0:
        return field
    spacings = _spacings(field.grid)
    big, sl = _padded(np.asarray(field.values), setup.pad)
    H = _transfer(setup, big.shape, spacings)
    out = np.fft.ifftn(np.fft.fftn(big) * H)[sl]
    meta = dict(field.meta)
    meta.update({"propagated_z": float(setup.z), "wavelength": float(setup.wavelength), "kernel": setup.kernel})
    return SampledField(field.grid, out, field.band, meta)


# --------------------------------------------------------------------------
# Gaussian beam reference


def gaussian_beam(grid: Grid2D, w0: float) -> SampledField:
    """Waist-plane Gaussian exp(-r^2 / w0^2), centred on the origin."""
    X, Y = grid.mesh()
    return SampledField(grid, np.exp(-(X**2 + Y**2) / w0**2))


def gaussian_width_theory(w0: float, wavelength: float, z) -> np.ndarray:
    """w(z) = w0 sqrt(1 + (z / z_R)^2), z_R = pi w0^2 / lambda."""
    zr = np.pi * w0**2 / wavelength
    return w0 * np.sqrt(1 + (np.asarray(z, dtype=float) / zr) ** 2)


def beam_width(field: SampledField, axis: int = 0) -> float:
    """Second-moment (1/e^2 intensity) radius 2 sqrt(<(x - <x>)^2>) along ``axis``."""
    I = np.asarray(field.intensity)
    g = field.grid
    if g.ndim == 1:
        x, w = g.x, I
    else:
        x = g.x if axis == 0 else g.y
        w = I.sum(axis=0) if axis == 0 else I.sum(axis=1)
    m = np.sum(w * x) / w.sum()
    return float(2 * math.sqrt(np.sum(w * (x - m) ** 2) / w.sum()))


# --------------------------------------------------------------------------
# quasiperiodic hole arrays


class InfeasiblePacking(ValueError):
    def __init__(self, achieved: int, requested: int):
        super().__init__(f"could only place {achieved} holes, {requested} requested")
        self.achieved = achieved
        self.requested = requested


@dataclass(frozen=True)
class HoleArraySpec:
    symmetry: int = 10
    hole_diameter: float = 0.2
    min_separation: float = 1.2
    aperture_diameter: float = 25.0
    count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.symmetry) != self.symmetry or self.symmetry < 4 or self.symmetry % 2:
            raise ValueError("symmetry must be an even integer >= 4")
        if not 0 < self.hole_diameter < self.min_separation:
            raise ValueError("need 0 < hole_diameter < min_separation")
        if not self.aperture_diameter > 0:
            raise ValueError("aperture_diameter must be positive")
        if self.count is not None and self.count < 1:
            raise ValueError("count must be at least 1")


def _multigrid_vertices(n: int, radius: float, gamma: np.ndarray) -> np.ndarray:
    """Vertices (unit edge) of the de Bruijn rhombic tiling from n line families.

    Family j has normal e_j at angle pi j / n and lines x . e_j = k + gamma_j.
    Each intersection of two families maps to the four corners of a rhomb.
    """
    e = np.stack([np.cos(np.pi * np.arange(n) / n), np.sin(np.pi * np.arange(n) / n)], axis=1)
    # a vertex sits near (n / 2) x, so intersections within radius * 2 / n are enough
    r_x = 2 * radius / n + 2
    kr = np.arange(-math.ceil(r_x) - 1, math.ceil(r_x) + 2)
    verts = []
    for r in range(n):
        for s in range(r + 1, n):
            Minv = np.linalg.inv(np.stack([e[r], e[s]]))
            Kr, Ks = np.meshgrid(kr, kr, indexing="ij")
            rhs = np.stack([Kr.ravel() + gamma[r], Ks.ravel() + gamma[s]], axis=1)
            x = rhs @ Minv.T
            keep = np.hypot(x[:, 0], x[:, 1]) <= r_x
            x, Kr_, Ks_ = x[keep], Kr.ravel()[keep], Ks.ravel()[keep]
            K = np.ceil(x @ e.T - gamma)  # (m, n)
            for dr in (0, 1):
                for ds in (0, 1):
                    Kc = K.copy()
                    Kc[:, r] = Kr_ + dr
                    Kc[:, s] = Ks_ + ds
                    verts.append(Kc @ e)
    v = np.concatenate(verts)
    v = np.unique(np.round(v, 9), axis=0)
    return v[np.hypot(v[:, 0], v[:, 1]) <= radius]


def quasiperiodic_points(spec: HoleArraySpec) -> np.ndarray:
    """Hole centres: a 2n-fold multigrid vertex set scaled to the separation and thinned.

    Thinning visits points in a seeded random order and keeps a point only if
    it is at least ``min_separation`` from every point already kept. With a
    hole count the ``count`` points nearest the centre are kept.
    """
    n = spec.symmetry // 2
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed)))
    # generic offsets (no triple intersections) summing to zero
    gamma = rng.uniform(0, 1, n)
    gamma -= gamma.mean()
    a = spec.min_separation  # rhomb edge
    R = spec.aperture_diameter / 2 - spec.hole_diameter / 2
    pts = _multigrid_vertices(n, R / a, gamma) * a
    order = rng.permutation(len(pts))
    kept = np.zeros(len(pts), dtype=bool)
    tree = cKDTree(pts)
    blocked = np.zeros(len(pts), dtype=bool)
    for i in order:
        if blocked[i]:
            continue
        kept[i] = True
        for j in tree.query_ball_point(pts[i], spec.min_separation * (1 - 1e-12)):
            if j != i:
                blocked[j] = True
    pts = pts[kept]
    pts = pts[np.lexsort((pts[:, 0], np.hypot(pts[:, 0], pts[:, 1])))]
    if spec.count is not None:
        if len(pts) < spec.count:
            raise InfeasiblePacking(len(pts), spec.count)
        pts = pts[: spec.count]
    return pts


def quasiperiodic_mask(spec: HoleArraySpec, grid: Grid2D, centres: np.ndarray | None = None) -> SampledField:
    """Binary transmission: 1 inside the holes, 0 elsewhere."""
    if spec.hole_diameter < 6 * max(grid.dx, grid.dy):
        raise ValueError(
            f"grid spacing {max(grid.dx, grid.dy):.4g} resolves the {spec.hole_diameter:.4g} hole with fewer than 6 samples"
        )
    pts = quasiperiodic_points(spec) if centres is None else np.asarray(centres, dtype=float)
    xs, ys = grid.x, grid.y
    if pts.size and (pts[:, 0].min() - spec.hole_diameter / 2 < xs[0] or pts[:, 0].max() + spec.hole_diameter / 2 > xs[-1]
                     or pts[:, 1].min() - spec.hole_diameter / 2 < ys[0] or pts[:, 1].max() + spec.hole_diameter / 2 > ys[-1]):
        raise ValueError("aperture does not fit inside the grid")
    mask = np.zeros(grid.shape)
    r = spec.hole_diameter / 2
    hx = int(math.ceil(r / grid.dx)) + 1
    hy = int(math.ceil(r / grid.dy)) + 1
    for cx, cy in pts:
        ix = int(round((cx - xs[0]) / grid.dx))
        iy = int(round((cy - ys[0]) / grid.dy))
        sx = slice(max(ix - hx, 0), min(ix + hx + 1, grid.nx))
        sy = slice(max(iy - hy, 0), min(iy + hy + 1, grid.ny))
        dx = xs[sx][None, :] - cx
        dy = ys[sy][:, None] - cy
        mask[sy, sx] = np.where(dx * dx + dy * dy <= r * r, 1.0, mask[sy, sx])
    meta = {"mask": "quasiperiodic", "symmetry": spec.symmetry, "n_holes": int(len(pts)),
            "hole_diameter": spec.hole_diameter, "min_separation": spec.min_separation}
    return SampledField(grid, mask, None, meta)


# --------------------------------------------------------------------------
# hot spots


@dataclass(frozen=True)
class Hotspot:
    x: float
    y: float
    peak: float
    fwhm: float
    sub_diffraction: bool


@dataclass(frozen=True)
class HotspotReport:
    spots: list
    diffraction_limit: float
    wavelength: float
    NA: float
    z: float | None = None

    @property
    def n_sub_diffraction(self) -> int:
        return sum(s.sub_diffraction for s in self.spots)

    def smallest(self) -> Hotspot | None:
        return min(self.spots, key=lambda s: s.fwhm) if self.spots else None

    def as_dict(self) -> dict:
        return {
            "wavelength": self.wavelength, "NA": self.NA, "z": self.z,
            "diffraction_limit": self.diffraction_limit,
            "spots": [s.__dict__ for s in self.spots],
        }


def _radial_fwhm(I: np.ndarray, iy: int, ix: int, dx: float, dy: float, n_dirs: int = 16) -> float:
    peak = I[iy, ix]
    half = peak / 2
    step = 0.25
    max_r = max(I.shape) / 2
    radii = []
    for theta in np.arange(n_dirs) * 2 * np.pi / n_dirs:
        r = np.arange(0, max_r, step)
        cols = ix + r * np.cos(theta)
        rows = iy + r * np.sin(theta)
        inside = (cols >= 0) & (cols <= I.shape[1] - 1) & (rows >= 0) & (rows <= I.shape[0] - 1)
        prof = ndimage.map_coordinates(I, [rows[inside], cols[inside]], order=1)
        below = np.nonzero(prof < half)[0]
        if below.size == 0:
            return math.nan
        j = below[0]
        # linear interpolation of the crossing, converted to physical length
        frac = (prof[j - 1] - half) / (prof[j - 1] - prof[j])
        rr = r[j - 1] + frac * step
        radii.append(rr * math.hypot(dx * math.cos(theta), dy * math.sin(theta)))
    return 2 * float(np.mean(radii))


def find_hotspots(
    irradiance: SampledField,
    threshold: float,
    wavelength: float,
    NA: float = 1.0,
    min_distance: int = 3,
    max_spots: int = 200,
) -> HotspotReport:
    """Local maxima above ``threshold * max`` with FWHM from radial half-max crossings.

    Spots narrower than lambda / (2 NA) are flagged sub-diffraction.
    """
    I = np.asarray(irradiance.values)
    if np.any(I.imag != 0):
        raise ValueError("irradiance must be real")
    I = I.real
    if np.any(I < 0):
        raise ValueError("irradiance must be nonnegative")
    g = irradiance.grid
    limit = wavelength / (2 * NA)
    if I.max() <= 0 or np.ptp(I) <= 1e-12 * I.max():
        return HotspotReport([], limit, wavelength, NA)
    peak_filter = ndimage.maximum_filter(I, size=2 * min_distance + 1, mode="constant")
    cand = np.argwhere((I == peak_filter) & (I >= threshold * I.max()))
    cand = cand[np.argsort(-I[cand[:, 0], cand[:, 1]], kind="stable")][:max_spots]
    spots = []
    for iy, ix in cand:
        w = _radial_fwhm(I, iy, ix, g.dx, g.dy)
        if not math.isfinite(w) or w <= 0:
            continue
        spots.append(Hotspot(float(g.x[ix]), float(g.y[iy]), float(I[iy, ix]), w, w < limit))
    return HotspotReport(spots, limit, wavelength, NA, irradiance.meta.get("propagated_z"))


def carpet_scan(mask: SampledField, wavelength: float, zs, threshold: float = 0.5, NA: float = 1.0,
                kernel: str = "helmholtz", pad: int = 2) -> list[HotspotReport]:
    """Propagate a mask to each z and report hot spots at every plane."""
    reports = []
    for z in zs:
        out = propagate_field(PropagationSetup(wavelength, float(z), mask, pad, kernel))
        I = SampledField(out.grid, out.intensity, None, {"propagated_z": float(z)})
        reports.append(find_hotspots(I, threshold, wavelength, NA))
    return reports
