"""FEMB container: layout, round trips, rejection of malformed files."""

import struct

import numpy as np
import pytest

from vlm_extractor.femb import HEADER, FormatError, read_femb, write_femb


def rand(rows, dim, seed=0):
    return np.random.default_rng(seed).standard_normal((rows, dim)).astype(np.float32)


def test_round_trip_bit_exact(tmp_path):
    values = rand(7, 5)
    path = tmp_path / "x.femb"
    write_femb(values, path)
    back = read_femb(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, values)


def test_header_layout(tmp_path):
    values = rand(3, 4)
    path = tmp_path / "x.femb"
    write_femb(values, path)
    raw = path.read_bytes()
    magic, version, dtype, reserved, rows, dim = HEADER.unpack(raw[:HEADER.size])
    assert (magic, version, dtype, reserved) == (b"FEMB", 1, 1, 0)
    assert (rows, dim) == (3, 4)
    assert len(raw) == HEADER.size + 3 * 4 * 4
    assert raw[HEADER.size:HEADER.size + 4] == struct.pack("<f", values[0, 0])


def test_row_major_payload(tmp_path):
    values = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "x.femb"
    write_femb(values, path)
    payload = np.frombuffer(path.read_bytes()[HEADER.size:], dtype="<f4")
    assert np.array_equal(payload, np.arange(6, dtype=np.float32))


def test_write_deterministic(tmp_path):
    values = rand(4, 4)
    a, b = tmp_path / "a.femb", tmp_path / "b.femb"
    write_femb(values, a)
    write_femb(values, b)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("byte_offset,patch,message", [
    (0, b"XEMB", "bad magic"),
    (4, b"\x02\x00", "unsupported version"),
    (6, b"\x07", "unsupported dtype"),
    (7, b"\x01", "reserved"),
])
def test_malformed_header_rejected(tmp_path, byte_offset, patch, message):
    path = tmp_path / "x.femb"
    write_femb(rand(2, 2), path)
    raw = bytearray(path.read_bytes())
    raw[byte_offset:byte_offset + len(patch)] = patch
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match=message):
        read_femb(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "x.femb"
    write_femb(rand(2, 2), path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError, match="payload"):
        read_femb(path)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "x.femb"
    write_femb(rand(2, 2), path)
    path.write_bytes(path.read_bytes() + b"!")
    with pytest.raises(FormatError, match="payload"):
        read_femb(path)


def test_non_2d_rejected(tmp_path):
    with pytest.raises(FormatError, match="2-D"):
        write_femb(np.zeros(3, dtype=np.float32), tmp_path / "x.femb")


def test_empty_rejected(tmp_path):
    with pytest.raises(FormatError, match="non-empty"):
        write_femb(np.zeros((0, 4), dtype=np.float32), tmp_path / "x.femb")
