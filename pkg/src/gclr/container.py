"""Low-level helpers for the binary container files (datasets, checkpoints).

Layout shared by both file kinds: a 4-byte magic, a little-endian u32
version, a format-specific payload, and a trailing CRC32 (u32) of the
payload bytes. Everything is little-endian.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import DataFormatError, DataIntegrityError

VERSION = 1


def pack_u32(v: int) -> bytes:
    return struct.pack("<I", v)


def pack_u64(v: int) -> bytes:
    return struct.pack("<Q", v)


def pack_f64(v: float) -> bytes:
    return struct.pack("<d", v)


def pack_f64_array(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def pack_u32_array(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<u4").tobytes()


def pack_blob(b: bytes) -> bytes:
    return pack_u64(len(b)) + b


class Reader:
    """Sequential reader with truncation checks."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataFormatError(
                f"{self.path}: truncated (needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)})"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def u32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<u4").astype(np.int64)

    def blob(self) -> bytes:
        return self.take(self.u64())


def write_file(path, magic: bytes, payload: bytes) -> None:
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(pack_u32(VERSION))
        fh.write(payload)
        fh.write(pack_u32(crc))


def read_file(path, magic: bytes) -> Reader:
    """Open a container, verify magic/version/CRC, and return a payload reader."""
    with open(path, "rb") as fh:
        data = fh.read()
    head_len = len(magic) + 4
    if len(data) < head_len + 4:
        raise DataFormatError(f"{path}: too short to be a valid container")
    if data[: len(magic)] != magic:
        raise DataFormatError(
            f"{path}: bad magic {data[:len(magic)]!r}, expected {magic!r}"
        )
    version = struct.unpack("<I", data[len(magic) : head_len])[0]
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    payload = data[head_len:-4]
    stored = struct.unpack("<I", data[-4:])[0]
    actual = zlib.crc32(payload) & 0xFFFFFFFF
    if stored != actual:
        raise DataIntegrityError(
            f"{path}: CRC mismatch (stored {stored:#010x}, computed {actual:#010x})"
        )
    return Reader(payload, str(path))
