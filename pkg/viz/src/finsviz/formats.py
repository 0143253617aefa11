"""Strict readers for the simulator's run artifacts.

Everything here parses by the documented layouts and nothing else: binary
snapshots (magic "FINS"), the diagnostics CSV ledger, per-marker contour
tables, and the run summary.  Errors always name the offending byte offset
or line so a corrupt artifact is diagnosable from the message alone.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np


class FormatError(ValueError):
    """Input does not follow the documented artifact layout."""


MAGIC = b"FINS"
VERSION = 1
_HEADER = struct.Struct("<4sIIdddI")
_NAME_BYTES = 16


@dataclass
class Snapshot:
    n: int
    box_length: float
    t: float
    alpha: float
    fields: dict


def read_snapshot(path) -> Snapshot:
    """Parse one binary snapshot, validating every structural element."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError(
            f"{path}: truncated header (need {_HEADER.size} bytes, "
            f"have {len(data)})")
    magic, version, n, box_length, t, alpha, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    if n == 0 or n > 1 << 16:
        raise FormatError(f"{path}: implausible grid size {n} at byte 8")
    offset = _HEADER.size
    per_field = _NAME_BYTES + 8 * n * n
    fields = {}
    for index in range(count):
        if offset + per_field > len(data):
            raise FormatError(
                f"{path}: field {index} truncated at byte {offset}")
        raw = data[offset:offset + _NAME_BYTES]
        try:
            name = raw.rstrip(b"\0").decode("ascii")
        except UnicodeDecodeError:
            raise FormatError(
                f"{path}: undecodable field name at byte {offset}") from None
        arr = np.frombuffer(data, dtype="<f8", count=n * n,
                            offset=offset + _NAME_BYTES).reshape(n, n)
        fields[name] = arr.copy()
        offset += per_field
    if offset != len(data):
        raise FormatError(
            f"{path}: {len(data) - offset} trailing bytes at byte {offset}")
    return Snapshot(n, box_length, t, alpha, fields)


def read_diagnostics(path):
    """Diagnostics ledger: '#'-prefixed column notes, then a CSV table.

    Returns (column names, list of row dicts with float values; the
    `warnings` column stays a string).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = [(i + 1, ln) for i, ln in enumerate(lines)
            if ln and not ln.startswith("#")]
    if not body:
        raise FormatError(f"{path}: no CSV table found")
    header_line, header_text = body[0]
    header = next(csv.reader([header_text]))
    if "t" not in header:
        raise FormatError(f"{path}: line {header_line}: header lacks 't'")
    rows = []
    for lineno, text in body[1:]:
        cells = next(csv.reader([text]))
        if len(cells) != len(header):
            raise FormatError(
                f"{path}: line {lineno}: expected {len(header)} cells, "
                f"got {len(cells)}")
        row = {}
        for key, cell in zip(header, cells):
            if key == "warnings":
                row[key] = cell
                continue
            try:
                row[key] = float(cell)
            except ValueError:
                raise FormatError(
                    f"{path}: line {lineno}: column {key!r} is not a "
                    f"number: {cell!r}") from None
        rows.append(row)
    return header, rows


def read_contour(path):
    """Per-marker contour table with columns s, x1, x2, theta, kappa."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty contour file") from None
        if header != ["s", "x1", "x2", "theta", "kappa"]:
            raise FormatError(f"{path}: line 1: unexpected header {header}")
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != 5:
                raise FormatError(f"{path}: line {lineno}: expected 5 cells")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise FormatError(
                    f"{path}: line {lineno}: non-numeric cell") from None
    if not rows:
        raise FormatError(f"{path}: contour has no markers")
    return np.asarray(rows)


def read_summary(path):
    """Run summary: 'key: value' lines; constants and trends become floats."""
    constants = {}
    trends = {}
    scalars = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("constant[") and "=" in line:
                name = line[len("constant["):line.index("]")]
                try:
                    constants[name] = float(line.split("=", 1)[1])
                except ValueError:
                    raise FormatError(
                        f"{path}: line {lineno}: bad constant value") from None
            elif line.startswith("trend[") and "slope" in line:
                name = line[len("trend["):line.index("]")]
                try:
                    trends[name] = float(line.rsplit("slope", 1)[1])
                except ValueError:
                    raise FormatError(
                        f"{path}: line {lineno}: bad trend value") from None
            elif ":" in line:
                key, _, val = line.partition(":")
                scalars[key.strip()] = val.strip()
    if not constants and not trends:
        raise FormatError(f"{path}: no constants or trends found")
    return constants, trends, scalars
