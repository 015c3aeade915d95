"""Binary tensor archive.

Layout: magic ``ALCH1``, then one record per tensor until EOF::

    u64 name_length | name (utf-8) | u64 rank | rank x u64 dims | float64 data (row-major)

All integers and floats are little-endian.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ArchiveFormatError

MAGIC = b"ALCH1"
_U64 = struct.Struct("<Q")


def write_archive(path, tensors: dict) -> None:
    chunks = [MAGIC]
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
        raw = name.encode("utf-8")
        chunks.append(_U64.pack(len(raw)))
        chunks.append(raw)
        chunks.append(_U64.pack(arr.ndim))
        chunks.extend(_U64.pack(d) for d in arr.shape)
        chunks.append(arr.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


def read_archive(path) -> dict:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ArchiveFormatError(f"{path}: bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    pos = len(MAGIC)
    out = {}

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise ArchiveFormatError(f"{path}: truncated archive at byte {pos}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    while pos < len(data):
        (name_len,) = _U64.unpack(take(8))
        name = take(name_len).decode("utf-8")
        (rank,) = _U64.unpack(take(8))
        dims = tuple(_U64.unpack(take(8))[0] for _ in range(rank))
        count = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(take(8 * count), dtype="<f8").reshape(dims).astype(np.float64)
        out[name] = arr
    return out
