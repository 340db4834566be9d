"""Reader/writer for the FEMB embedding interchange format.

Layout, all little-endian: magic ``FEMB``, version u16 (1), dtype u8
(1 = float32), one reserved zero byte, row count u64, dim u32, then the
rows as packed float32 in row-major order. Files round-trip bit-exactly;
anything that does not match raises FormatError.
"""

import struct

import numpy as np

from .errors import ExtractorError

HEADER = struct.Struct("<4sHBBQI")
MAGIC = b"FEMB"
VERSION = 1
DTYPE_FLOAT32 = 1


class FormatError(ExtractorError):
    pass


def write_femb(values: np.ndarray, path) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise FormatError(f"embeddings must be 2-D, got shape {values.shape}")
    if values.shape[0] == 0 or values.shape[1] == 0:
        raise FormatError(f"embeddings must be non-empty, got shape {values.shape}")
    out = np.ascontiguousarray(values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, DTYPE_FLOAT32, 0, out.shape[0], out.shape[1]))
        fh.write(out.tobytes())


def read_femb(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, dtype, reserved, rows, dim = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if dtype != DTYPE_FLOAT32:
            raise FormatError(f"{path}: unsupported dtype code {dtype}")
        if reserved != 0:
            raise FormatError(f"{path}: reserved byte is {reserved}, expected 0")
        payload = fh.read(rows * dim * 4 + 1)
    if len(payload) != rows * dim * 4:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {rows * dim * 4}")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
