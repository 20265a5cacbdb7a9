"""File-format round trips and header conformance."""

import math
import os
import struct

import numpy as np
import pytest

from hdrcal.errors import ConfigError
from hdrcal.formats import (
    atomic_write_bytes,
    csv_bytes,
    fmt_num,
    hdrf_bytes,
    kv_get_bool,
    kv_get_float,
    kv_get_floats,
    kv_text,
    parse_kv_text,
    pgm16_bytes,
    pgm8_bytes,
    read_csv,
    read_hdrf,
    read_pgm,
    write_csv,
    write_hdrf,
    write_pgm8,
    write_pgm16,
)


class TestPgm:
    def test_round_trip_16(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 65536, size=(7, 11), dtype=np.uint16)
        path = tmp_path / "a.pgm"
        write_pgm16(path, img)
        back = read_pgm(path)
        assert back.dtype == np.uint16
        assert np.array_equal(back, img)

    def test_round_trip_8(self, tmp_path):
        img = np.arange(12, dtype=np.uint8).reshape(3, 4)
        path = tmp_path / "b.pgm"
        write_pgm8(path, img)
        back = read_pgm(path)
        assert back.dtype == np.uint8
        assert np.array_equal(back, img)

    def test_header_layout(self):
        img = np.array([[1, 2], [3, 4]], dtype=np.uint16)
        blob = pgm16_bytes(img)
        assert blob.startswith(b"P5\n2 2\n65535\n")

    def test_msb_first(self):
        # 0x0102 must serialize as the bytes 0x01 0x02
        img = np.array([[0x0102]], dtype=np.uint16)
        blob = pgm16_bytes(img)
        assert blob.endswith(b"\x01\x02")

    def test_pgm8_maxval(self):
        blob = pgm8_bytes(np.zeros((1, 1), dtype=np.uint8))
        assert b"\n255\n" in blob

    def test_read_with_comments(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5 # magic\n# a comment\n2 1\n65535\n\x00\x01\x00\x02")
        img = read_pgm(path)
        assert np.array_equal(img, [[1, 2]])

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P6\n1 1\n255\n\x00")
        with pytest.raises(ConfigError):
            read_pgm(path)

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n\x00\x01")
        with pytest.raises(ConfigError):
            read_pgm(path)


class TestHdrf:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        values = rng.random((5, 9)).astype(np.float64) * 1e6
        path = tmp_path / "r.hdrf"
        write_hdrf(path, values)
        back = read_hdrf(path)
        assert back.shape == (5, 9)
        assert np.allclose(back, values.astype(np.float32), rtol=0, atol=0)

    def test_header_and_byte_order(self):
        blob = hdrf_bytes(np.array([[1.0]], dtype=np.float64))
        assert blob.startswith(b"HDRF 1 1\n")
        (value,) = struct.unpack("<f", blob[len(b"HDRF 1 1\n"):])
        assert value == 1.0

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "x.hdrf"
        path.write_bytes(b"HDRX 1 1\n\x00\x00\x80?")
        with pytest.raises(ConfigError):
            read_hdrf(path)


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ("a", "b"), [(1, 2.5), (3, 0.1)], comments=("hello",))
        comments, header, rows = read_csv(path)
        assert comments == ["hello"]
        assert header == ["a", "b"]
        assert [[float(c) for c in r] for r in rows] == [[1, 2.5], [3, 0.1]]

    def test_canonical_floats(self):
        blob = csv_bytes(("x",), [(0.1,), (1.0,), (2,)])
        assert blob == b"x\n0.1\n1.0\n2\n"

    def test_empty_raises(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("# only a comment\n")
        with pytest.raises(ConfigError):
            read_csv(path)


class TestKv:
    def test_round_trip(self):
        text = kv_text({"a": 1.5, "b": "hi", "c": True, "d": (1.0, 2.0)},
                       comments=("top",))
        kv = parse_kv_text(text)
        assert kv_get_float(kv, "a") == 1.5
        assert kv["b"] == "hi"
        assert kv_get_bool(kv, "c", False) is True
        assert kv_get_floats(kv, "d") == (1.0, 2.0)

    def test_comments_and_blanks_skipped(self):
        kv = parse_kv_text("# c\n\n x = 1 \n")
        assert kv == {"x": "1"}

    def test_missing_equals_raises(self):
        with pytest.raises(ConfigError):
            parse_kv_text("novalue\n")

    def test_bad_float_raises(self):
        with pytest.raises(ConfigError):
            kv_get_float({"x": "abc"}, "x")

    def test_missing_key_raises(self):
        with pytest.raises(ConfigError):
            kv_get_float({}, "x")

    def test_default_used(self):
        assert kv_get_bool({}, "flag", False) is False


class TestFmtNum:
    def test_integers_bare(self):
        assert fmt_num(3) == "3"
        assert fmt_num(np.int64(-2)) == "-2"

    def test_integral_floats_keep_point(self):
        assert fmt_num(2.0) == "2.0"

    def test_repr_round_trip(self):
        for x in (0.1, 1e-9, 123456.789, 3.703e-3):
            assert float(fmt_num(x)) == x

    def test_nonfinite_survive(self):
        # clamped patches legitimately report inf errors in CSV reports
        assert fmt_num(math.inf) == "inf"
        assert fmt_num(-math.inf) == "-inf"
        assert math.isnan(float(fmt_num(math.nan)))

    def test_huge_integral_float_stays_exact(self):
        assert float(fmt_num(1e300)) == 1e300


class TestAtomicWrite:
    def test_no_temp_left_behind(self, tmp_path):
        path = tmp_path / "out.bin"
        atomic_write_bytes(path, b"data")
        assert path.read_bytes() == b"data"
        assert os.listdir(tmp_path) == ["out.bin"]

    def test_overwrites(self, tmp_path):
        path = tmp_path / "out.bin"
        atomic_write_bytes(path, b"one")
        atomic_write_bytes(path, b"two")
        assert path.read_bytes() == b"two"
