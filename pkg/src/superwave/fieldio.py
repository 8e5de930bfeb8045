"""Reading and writing sampled fields.

Binary layout (little endian, 64-byte header)::

    0   4s   magic b"SWF1"
    4   u32  ndim (1 or 2)
    8   u32  dims[2]      nx, ny (ny == 1 for 1D)
    16  f64  spacing[2]   dx, dy
    32  f64  origin[2]    x0, y0
    48  16x  reserved, zero
    64  ...  (re, im) f64 pairs, row-major (y slow, x fast)

CSV files carry a header row; 1D uses ``x,re,im`` and 2D ``x,y,re,im``.
Numbers are written with 17 significant digits so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .field import Grid1D, Grid2D, SampledField

MAGIC = b"SWF1"
HEADER = struct.Struct("<4sI2I2d2d16x")
assert HEADER.size == 64


class FieldFormatError(ValueError):
    """Malformed field file."""


def _fmt(v: float) -> str:
    return format(v, ".17g")


def _infer_format(path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in ("csv", "binary"):
            raise ValueError(f"unknown field format {fmt!r}; expected 'csv' or 'binary'")
        return fmt
    return "csv" if str(path).lower().endswith(".csv") else "binary"


def write_field(field: SampledField, path, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "binary":
        path.write_bytes(encode_binary(field))
    else:
        path.write_text(encode_csv(field))
    return path


def read_field(path, fmt: str | None = None) -> SampledField:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "binary":
        return decode_binary(path.read_bytes())
    return decode_csv(path.read_text())


def encode_binary(field: SampledField) -> bytes:
    g = field.grid
    if g.ndim == 1:
        head = HEADER.pack(MAGIC, 1, g.n_samples, 1, g.spacing, 0.0, g.origin, 0.0)
    else:
        head = HEADER.pack(MAGIC, 2, g.nx, g.ny, g.dx, g.dy, g.origin_x, g.origin_y)
    body = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    return head + body


def decode_binary(data: bytes) -> SampledField:
    if len(data) < HEADER.size:
        raise FieldFormatError(f"file too short for header: {len(data)} bytes, need {HEADER.size}")
    magic, ndim, nx, ny, dx, dy, x0, y0 = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r} at offset 0, expected {MAGIC!r}")
    if ndim not in (1, 2):
        raise FieldFormatError(f"bad ndim {ndim} at offset 4")
    if ndim == 1 and ny != 1:
        raise FieldFormatError(f"1D field must have dims[1] == 1, got {ny} at offset 12")
    expected = HEADER.size + 16 * nx * ny
    if len(data) != expected:
        raise FieldFormatError(
            f"payload size mismatch: header declares {nx}x{ny} samples ({expected} bytes), file has {len(data)}"
        )
    values = np.frombuffer(data, dtype="<c16", offset=HEADER.size)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.isfinite(values)))
        raise FieldFormatError(f"non-finite sample {bad} at byte offset {HEADER.size + 16 * bad}")
    try:
        if ndim == 1:
            grid = Grid1D(nx, dx, x0)
        else:
            grid = Grid2D(nx, ny, dx, dy, x0, y0)
            values = values.reshape(ny, nx)
    except ValueError as exc:
        raise FieldFormatError(f"invalid grid in header: {exc}") from exc
    return SampledField(grid, values)


def encode_csv(field: SampledField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    g = field.grid
    if g.ndim == 1:
        w.writerow(["x", "re", "im"])
        for x, v in zip(g.x, field.values):
            w.writerow([_fmt(x), _fmt(v.real), _fmt(v.imag)])
    else:
        w.writerow(["x", "y", "re", "im"])
        xs, ys = g.x, g.y
        for iy in range(g.ny):
            for ix in range(g.nx):
                v = field.values[iy, ix]
                w.writerow([_fmt(xs[ix]), _fmt(ys[iy]), _fmt(v.real), _fmt(v.imag)])
    return buf.getvalue()


def _uniform_axis(coords: np.ndarray, name: str) -> tuple[float, float]:
    if coords.size < 2:
        raise FieldFormatError(f"column {name!r} needs at least 2 distinct values")
    d = np.diff(coords)
    step = (coords[-1] - coords[0]) / (coords.size - 1)
    if step <= 0 or np.max(np.abs(d - step)) > 1e-9 * max(abs(step), np.max(np.abs(coords))):
        raise FieldFormatError(f"column {name!r} is not uniformly spaced")
    return float(coords[0]), float(step)


def decode_csv(text: str) -> SampledField:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FieldFormatError("empty CSV, expected a header row")
    header = [h.strip() for h in rows[0]]
    two_d = "y" in header
    needed = ["x", "y", "re", "im"] if two_d else ["x", "re", "im"]
    for col in needed:
        if col not in header:
            raise FieldFormatError(f"missing column {col!r} in header (line 1)")
    idx = [header.index(c) for c in needed]
    data = np.empty((len(rows) - 1, len(needed)))
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FieldFormatError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        for j, i in enumerate(idx):
            try:
                v = float(row[i])
            except ValueError:
                raise FieldFormatError(f"line {lineno}: column {needed[j]!r} is not a number: {row[i]!r}") from None
            if not np.isfinite(v):
                raise FieldFormatError(f"line {lineno}: column {needed[j]!r} is not finite")
            data[lineno - 2, j] = v
    values = data[:, -2] + 1j * data[:, -1]
    if not two_d:
        x0, dx = _uniform_axis(data[:, 0], "x")
        return SampledField(Grid1D(len(values), dx, x0), values)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != len(values):
        raise FieldFormatError(f"shape mismatch: {xs.size} x values * {ys.size} y values != {len(values)} rows")
    x0, dx = _uniform_axis(xs, "x")
    y0, dy = _uniform_axis(ys, "y")
    ix = np.rint((data[:, 0] - x0) / dx).astype(int)
    iy = np.rint((data[:, 1] - y0) / dy).astype(int)
    grid_values = np.full((ys.size, xs.size), np.nan + 0j)
    grid_values[iy, ix] = values
    if np.isnan(grid_values.real).any():
        raise FieldFormatError("shape mismatch: some (x, y) grid points are missing")
    return SampledField(Grid2D(xs.size, ys.size, dx, dy, x0, y0), grid_values)
