import numpy as np
import pytest

from superwave.field import Grid1D, Grid2D, SampledField
from superwave.fieldio import HEADER, FieldFormatError, decode_binary, encode_binary, read_field, write_field


def _field2d(rng):
    g = Grid2D(32, 32, 0.1, 0.2, -1.6, 3.0)
    return SampledField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))


def test_binary_round_trip_bit_identical(tmp_path, rng):
    f = _field2d(rng)
    p = write_field(f, tmp_path / "f.swf")
    g = read_field(p)
    assert g.grid == f.grid
    assert np.array_equal(g.values, f.values)
    assert p.read_bytes() == encode_binary(g)


def test_binary_header_layout(rng):
    data = encode_binary(_field2d(rng))
    assert HEADER.size == 64
    assert data[:4] == b"SWF1"
    assert len(data) == 64 + 32 * 32 * 16


def test_csv_round_trip_1d(tmp_path, rng):
    g = Grid1D(50, 0.1, -2.5)
    f = SampledField(g, rng.normal(size=50) + 1j * rng.normal(size=50))
    back = read_field(write_field(f, tmp_path / "f.csv"))
    np.testing.assert_allclose(back.values, f.values, rtol=1e-15, atol=0)
    assert back.grid.n_samples == 50
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x,re,im"


def test_csv_round_trip_2d(tmp_path, rng):
    f = _field2d(rng)
    back = read_field(write_field(f, tmp_path / "f.csv"))
    np.testing.assert_allclose(back.values, f.values, rtol=1e-15, atol=0)


def test_csv_missing_column_named(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,re\n0,1\n1,2\n")
    with pytest.raises(FieldFormatError, match="'im'"):
        read_field(p)


def test_csv_nonfinite_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,re,im\n0,1,0\n1,nan,0\n")
    with pytest.raises(FieldFormatError, match="line 3"):
        read_field(p)


def test_binary_bad_magic_and_truncation(rng):
    data = encode_binary(_field2d(rng))
    with pytest.raises(FieldFormatError):
        decode_binary(b"XXXX" + data[4:])
    with pytest.raises(FieldFormatError):
        decode_binary(data[:-8])


def test_binary_nonfinite_rejected(rng):
    data = bytearray(encode_binary(_field2d(rng)))
    data[64:72] = np.array([np.inf]).tobytes()
    with pytest.raises(FieldFormatError):
        decode_binary(bytes(data))
