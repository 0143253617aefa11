"""Bit-exact binary snapshots of simulation fields.

Layout (little-endian throughout):

    bytes 0-3    magic "FINS"
    u32          format version (currently 1)
    u32          n, grid points per axis
    f64          box length L
    f64          time t
    f64          dissipation exponent alpha
    u32          field count
    per field:   16-byte zero-padded ASCII name, then n*n f64 row-major

Writing the same data twice produces identical bytes, and a read/write
round trip is the identity.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import SnapshotFormatError

MAGIC = b"FINS"
VERSION = 1
_HEADER = struct.Struct("<4sIIddd I".replace(" ", ""))
_NAME_BYTES = 16


@dataclass
class Snapshot:
    n: int
    box_length: float
    t: float
    alpha: float
    fields: dict     # name -> (n, n) float array, insertion-ordered


def write_snapshot(path, snap: Snapshot) -> None:
    names = list(snap.fields)
    blob = bytearray()
    blob += _HEADER.pack(MAGIC, VERSION, snap.n, snap.box_length, snap.t,
                         snap.alpha, len(names))
    for name in names:
        raw = name.encode("ascii")
        if len(raw) > _NAME_BYTES:
            raise SnapshotFormatError(f"field name too long: {name!r}")
        blob += raw.ljust(_NAME_BYTES, b"\0")
        arr = np.ascontiguousarray(snap.fields[name], dtype="<f8")
        if arr.shape != (snap.n, snap.n):
            raise SnapshotFormatError(
                f"field {name!r} has shape {arr.shape}, expected square")
        blob += arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, version, n, box_length, t, alpha, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}")
    offset = _HEADER.size
    field_bytes = 8 * n * n
    fields = {}
    for _ in range(count):
        if offset + _NAME_BYTES + field_bytes > len(data):
            raise SnapshotFormatError("truncated field block")
        raw = data[offset:offset + _NAME_BYTES]
        try:
            name = raw.rstrip(b"\0").decode("ascii")
        except UnicodeDecodeError as exc:
            raise SnapshotFormatError(f"bad field name bytes {raw!r}") from exc
        offset += _NAME_BYTES
        arr = np.frombuffer(data[offset:offset + field_bytes],
                            dtype="<f8").reshape(n, n).copy()
        offset += field_bytes
        fields[name] = arr
    if offset != len(data):
        raise SnapshotFormatError(f"{len(data) - offset} trailing bytes")
    return Snapshot(n, box_length, t, alpha, fields)
