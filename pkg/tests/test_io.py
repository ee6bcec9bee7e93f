import numpy as np
import pytest

from epochdd.io import read_columns, write_columns


def test_round_trip_is_byte_identical(tmp_path):
    rng = np.random.default_rng(0)
    cols = {
        "t": np.arange(5),
        "x": rng.standard_normal(5) * 1e-300,
        "y": np.array([0.1, -0.0, np.nan, 1e308, 3.0]),
    }
    first = write_columns(tmp_path / "a.csv", cols)
    back = read_columns(first)
    second = write_columns(tmp_path / "b.csv", back)
    assert first.read_bytes() == second.read_bytes()
    assert np.array_equal(back["x"], cols["x"])
    assert back["t"].dtype == np.int64


def test_floats_keep_all_bits(tmp_path):
    values = np.nextafter(1.0, 2.0) + np.arange(3) * np.finfo(float).eps
    back = read_columns(write_columns(tmp_path / "f.csv", {"v": values}))
    assert back["v"].tobytes() == values.tobytes()


def test_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_columns(tmp_path / "x.csv", {"a": [1, 2], "b": [1.0]})


def test_creates_parent_directories(tmp_path):
    path = write_columns(tmp_path / "deep" / "dir" / "x.csv", {"a": [1]})
    assert path.read_text() == "a\n1\n"
