"""Phase-only holograms that carry amplitude and phase in their first order.

A target A exp(i chi) (A normalised to [0, 1]) is written as a blazed grating
whose local modulation depth M sets the first-order amplitude:

    hologram(x, y) = M * Mod(Phi + 2 pi x / pitch, 2 pi),
    first order    = -sinc(pi M - pi) * exp(i (Phi + pi M)).

Inverting, M = 1 + sinc^-1(A) / pi on the branch [-pi, 0]. With the default
convention Phi = chi + pi - pi M (mod 2 pi) the first order equals the target
exactly; the ``"literal"`` convention Phi = chi - pi M reproduces it up to an
overall sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .field import Grid2D, SampledField, measured_bandlimit

__all__ = [
    "TargetField",
    "HologramPlan",
    "inverse_sinc",
    "encode_hologram",
    "first_order_field",
    "render_grating",
    "quantize_8bit",
    "dequantize_8bit",
    "write_pgm",
    "read_pgm",
    "simulate_first_order",
    "laguerre_gauss",
    "radial_profile",
    "winding_number",
]

KINDS = ("blazed", "binary", "sinusoidal")
TWO_PI = 2 * np.pi


def _sinc(u):
    return np.sinc(np.asarray(u) / np.pi)


@dataclass(frozen=True)
class TargetField:
    """Normalised amplitude (max 1) and phase on a 2D grid; ``scale`` restores the original amplitude."""

    grid: Grid2D
    amplitude: np.ndarray = dc_field(repr=False)
    phase: np.ndarray = dc_field(repr=False)
    scale: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.amplitude, dtype=float)
        chi = np.asarray(self.phase, dtype=float)
        if A.shape != self.grid.shape or chi.shape != self.grid.shape:
            raise ValueError("amplitude and phase must match the grid shape")
        if np.any(A < 0) or np.any(A > 1 + 1e-12):
            raise ValueError("amplitude must lie in [0, 1]; use TargetField.from_field to normalise")
        object.__setattr__(self, "amplitude", np.clip(A, 0, 1))
        object.__setattr__(self, "phase", chi)

    @classmethod
    def from_field(cls, field: SampledField) -> "TargetField":
        v = np.asarray(field.values)
        amp = np.abs(v)
        scale = float(amp.max())
        if scale == 0:
            raise ValueError("target field is identically zero")
        return cls(field.grid, amp / scale, np.angle(v), scale)

    def as_field(self) -> SampledField:
        return SampledField(self.grid, self.amplitude * np.exp(1j * self.phase), None, {"scale": self.scale})


@dataclass(frozen=True)
class HologramPlan:
    grid: Grid2D
    M: np.ndarray = dc_field(repr=False)
    Phi: np.ndarray = dc_field(repr=False)
    pitch: float = 8.0
    kind: str = "blazed"
    convention: str = "exact"
    scale: float = 1.0

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.shape != self.grid.shape or np.shape(self.Phi) != self.grid.shape:
            raise ValueError("M and Phi must match the grid shape")
        if np.any(M < 0) or np.any(M > 1):
            raise ValueError("modulation M must lie in [0, 1]")
        if self.kind not in KINDS:
            raise ValueError(f"grating kind must be one of {KINDS}")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Phi", np.mod(np.asarray(self.Phi, dtype=float), TWO_PI))


def inverse_sinc(a, tol: float = 1e-12) -> np.ndarray:
    """u in [-pi, 0] with sin(u)/u = a, by bisection on the monotone branch.

    Vectorised: every element is bisected simultaneously until the bracket is
    narrower than ``tol``.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("inverse_sinc needs values in [0, 1]")
    lo = np.full(a.shape, -np.pi)
    hi = np.zeros(a.shape)
    # sinc increases from 0 at -pi to 1 at 0
    for _ in range(int(math.ceil(math.log2(np.pi / tol))) + 1):
        mid = 0.5 * (lo + hi)
        below = _sinc(mid) < a
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    u = 0.5 * (lo + hi)
    u = np.where(a >= 1, 0.0, u)
    return np.where(a <= 0, -np.pi, u)


def encode_hologram(target: TargetField, pitch: float, kind: str = "blazed", convention: str = "exact") -> HologramPlan:
    """M = 1 + sinc^-1(A)/pi and Phi from the phase convention (see module docstring)."""
    if convention not in ("exact", "literal"):
        raise ValueError("convention must be 'exact' or 'literal'")
    M = 1 + inverse_sinc(target.amplitude) / np.pi
    M = np.clip(M, 0.0, 1.0)
    Phi = target.phase - np.pi * M + (np.pi if convention == "exact" else 0.0)
    return HologramPlan(target.grid, M, Phi, float(pitch), kind, convention, target.scale)


def first_order_field(plan: HologramPlan) -> SampledField:
    """Closed-form first diffraction order -sinc(pi M - pi) exp(i (Phi + pi M)) of a blazed plan."""
    if plan.kind != "blazed":
        raise ValueError(f"closed-form first order is only available for blazed gratings, not {plan.kind!r}")
    M = plan.M
    values = -_sinc(np.pi * M - np.pi) * np.exp(1j * (plan.Phi + np.pi * M))
    return SampledField(plan.grid, values, None, {"hologram": "first-order closed form", "scale": plan.scale})


def _grating(kind: str, M, Phi, x, pitch):
    theta = Phi + TWO_PI * x / pitch
    if kind == "blazed":
        return M * np.mod(theta, TWO_PI)
    if kind == "binary":
        s = np.where(np.sin(theta) >= 0, 1.0, -1.0)
        return M * np.pi * (1 + s)
    return M * np.pi * (1 + np.sin(theta)) / 2


def render_grating(plan: HologramPlan, quantize: bool = False) -> np.ndarray:
    """Phase map on the plan's pixel grid.

    blazed: M Mod(Phi + 2 pi x / pitch, 2 pi); binary: M pi (1 + Sign(sin(...)));
    sinusoidal: M pi (1 + sin(...)) / 2. With ``quantize`` the map is passed
    through the 8-bit quantizer and back.
    """
    g = plan.grid
    if g.dx > plan.pitch / 4:
        raise ValueError(f"pixel pitch {g.dx} under-resolves grating pitch {plan.pitch}; need dx <= pitch / 4")
    X, _ = g.mesh()
    out = _grating(plan.kind, plan.M, plan.Phi, X, plan.pitch)
    return dequantize_8bit(quantize_8bit(out)) if quantize else out


def quantize_8bit(phase: np.ndarray) -> np.ndarray:
    """Levels 0..255 spanning [0, 2 pi] linearly (identity gamma)."""
    phase = np.asarray(phase, dtype=float)
    if np.any(phase < 0) or np.any(phase > TWO_PI + 1e-12):
        raise ValueError("phase map must lie in [0, 2 pi]")
    return np.clip(np.rint(phase / TWO_PI * 255), 0, 255).astype(np.uint8)


def dequantize_8bit(levels: np.ndarray) -> np.ndarray:
    return np.asarray(levels, dtype=float) * (TWO_PI / 255)


def write_pgm(levels: np.ndarray, path) -> Path:
    """Binary (P5) 8-bit grayscale image, first row at the top."""
    levels = np.asarray(levels)
    if levels.dtype != np.uint8 or levels.ndim != 2:
        raise ValueError("PGM export expects a 2D uint8 array")
    path = Path(path)
    h, w = levels.shape
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(levels).tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5" or int(parts[3]) != 255:
        raise ValueError("not an 8-bit binary PGM")
    w, h = int(parts[1]), int(parts[2])
    body = parts[4]
    if len(body) != w * h:
        raise ValueError(f"PGM payload has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def _order_check(plan: HologramPlan, floor: float = 1e-4):
    # the first order sits at kx = 2 pi / pitch; the window reaches half way to the zeroth order
    target = first_order_field(plan) if plan.kind == "blazed" else None
    if target is None:
        return
    K = measured_bandlimit(target, floor=floor, axis=0)
    half = np.pi / plan.pitch
    if K > half:
        raise ValueError(
            f"diffraction orders overlap: target x-bandwidth {K:.4g} exceeds pi / pitch = {half:.4g}; "
            f"use pitch < {np.pi / K:.4g}"
        )


def simulate_first_order(plan: HologramPlan, oversample: int = 16, quantize: bool = False,
                         illumination: np.ndarray | None = None, check_orders: bool = True) -> SampledField:
    """First order extracted from the far field of exp(i hologram).

    Each pixel row is rendered at ``oversample`` points per pixel along x so
    the wrap of the sawtooth is resolved (M and Phi are held per pixel). The
    spectrum is windowed to |kx - 2 pi/pitch| <= pi/pitch, |ky| <= pi/pitch,
    shifted to baseband and sampled back at the pixel centres. ``quantize``
    applies the 8-bit quantizer to the rendered phase.
    """
    if int(oversample) != oversample or oversample < 1:
        raise ValueError("oversample must be a positive integer")
    if check_orders:
        _order_check(plan)
    g = plan.grid
    s = int(oversample)
    if g.dx > plan.pitch / 4:
        raise ValueError(f"pixel pitch {g.dx} under-resolves grating pitch {plan.pitch}; need dx <= pitch / 4")
    # sub-pixel positions centred on each pixel centre
    offsets = (np.arange(s) - (s - 1) / 2) * (g.dx / s)
    xf = (g.x[:, None] + offsets[None, :]).ravel()
    M = np.repeat(plan.M, s, axis=1)
    Phi = np.repeat(plan.Phi, s, axis=1)
    psi = _grating(plan.kind, M, Phi, xf[None, :], plan.pitch)
    if quantize:
        psi = dequantize_8bit(quantize_8bit(psi))
    u = np.exp(1j * psi)
    if illumination is not None:
        u = u * np.repeat(np.asarray(illumination), s, axis=1)
    U = np.fft.fft2(u)
    kx = TWO_PI * np.fft.fftfreq(u.shape[1], g.dx / s)
    ky = TWO_PI * np.fft.fftfreq(u.shape[0], g.dy)
    kc = TWO_PI / plan.pitch
    half = np.pi / plan.pitch
    window = (np.abs(ky)[:, None] <= half) & (np.abs(kx - kc)[None, :] <= half)
    first = np.fft.ifft2(U * window)
    # demodulate the carrier and keep the pixel-centre samples
    first = first * np.exp(-1j * kc * xf)[None, :]
    values = first[:, (s - 1) // 2 :: s] if s % 2 else 0.5 * (first[:, s // 2 - 1 :: s] + first[:, s // 2 :: s])
    return SampledField(g, values, None, {"hologram": "simulated first order", "oversample": s, "scale": plan.scale})


# --------------------------------------------------------------------------
# test targets and diagnostics


def laguerre_gauss(grid: Grid2D, p: int, m: int, w: float) -> SampledField:
    """LG_p^m(r, phi) ~ (sqrt2 r/w)^|m| L_p^|m|(2 r^2/w^2) exp(-r^2/w^2) exp(i m phi)."""
    from scipy.special import eval_genlaguerre

    X, Y = grid.mesh()
    r2 = X**2 + Y**2
    rho = np.sqrt(2 * r2) / w
    v = rho ** abs(m) * eval_genlaguerre(p, abs(m), 2 * r2 / w**2) * np.exp(-r2 / w**2) * np.exp(1j * m * np.arctan2(Y, X))
    return SampledField(grid, v, None, {"target": "laguerre-gauss", "p": p, "m": m, "w": w})


def radial_profile(values: np.ndarray, grid: Grid2D, center=(0.0, 0.0), n_bins: int | None = None):
    """Azimuthal mean of ``values`` in radial bins of one grid step; returns (r, profile)."""
    X, Y = grid.mesh()
    r = np.hypot(X - center[0], Y - center[1])
    step = min(grid.dx, grid.dy)
    n_bins = n_bins or int(r.max() / step)
    idx = np.minimum((r / step).astype(int), n_bins - 1)
    sums = np.bincount(idx.ravel(), weights=np.asarray(values, float).ravel(), minlength=n_bins)
    counts = np.bincount(idx.ravel(), minlength=n_bins)
    with np.errstate(invalid="ignore"):
        prof = sums / counts
    return (np.arange(n_bins) + 0.5) * step, prof


def winding_number(field: SampledField, radius: float, center=(0.0, 0.0), n: int = 720) -> int:
    """Net phase winding of the field around a circle, in units of 2 pi."""
    from scipy.ndimage import map_coordinates

    g = field.grid
    t = np.linspace(0, TWO_PI, n, endpoint=False)
    cols = (center[0] + radius * np.cos(t) - g.x[0]) / g.dx
    rows = (center[1] + radius * np.sin(t) - g.y[0]) / g.dy
    v = np.asarray(field.values)
    samp = map_coordinates(v.real, [rows, cols], order=1) + 1j * map_coordinates(v.imag, [rows, cols], order=1)
    dphi = np.angle(np.roll(samp, -1) / samp)
    return int(round(dphi.sum() / TWO_PI))
