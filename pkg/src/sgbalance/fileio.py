"""Deterministic binary field snapshots and the diagnostics CSV.

Field file layout (all integers little-endian):

    bytes 0-3   magic "OBFL"
    u32         version (= 1)
    u32         name length, then that many bytes of UTF-8 name
    u32         rank (2 or 3)
    rank * u32  dims: (nx, ny) or (nx, ny, nlevels)
    payload     dims-product float64 little-endian, x fastest, then y,
                then the axis level

Round-trips are bit-exact: the payload is the raw IEEE-754 image of the
array.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FieldFormatError

MAGIC = b"OBFL"
VERSION = 1

CSV_HEADER = "t,H,rel_dH,q_int,q2_int,min_margin,balance_iters,balance_residual"


def write_field(path, name: str, values: np.ndarray) -> None:
    """Write a 2D or 3D float64 field; x must be the leading array axis."""
    values = np.asarray(values, dtype="<f8")
    if values.ndim not in (2, 3):
        raise FieldFormatError(f"can only store rank 2 or 3 fields, got rank {values.ndim}")
    name_bytes = name.encode("utf-8")
    header = MAGIC + struct.pack("<II", VERSION, len(name_bytes)) + name_bytes
    header += struct.pack("<I", values.ndim)
    header += struct.pack(f"<{values.ndim}I", *values.shape)
    # payload with x varying fastest: reverse the axis order
    payload = np.ascontiguousarray(values.transpose(range(values.ndim - 1, -1, -1)))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_field(path):
    """Read a field file; returns (name, values) with the natural (x, y[, level]) axes."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise FieldFormatError(f"{path}: not a field file (bad magic)")
    version, name_len = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    off = 12
    try:
        name = raw[off:off + name_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise FieldFormatError(f"{path}: undecodable field name") from e
    off += name_len
    if off + 4 > len(raw):
        raise FieldFormatError(f"{path}: truncated header")
    (rank,) = struct.unpack_from("<I", raw, off)
    off += 4
    if rank not in (2, 3):
        raise FieldFormatError(f"{path}: rank must be 2 or 3, got {rank}")
    if off + 4 * rank > len(raw):
        raise FieldFormatError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{rank}I", raw, off)
    off += 4 * rank
    count = int(np.prod(dims))
    expected = off + 8 * count
    if len(raw) != expected:
        raise FieldFormatError(
            f"{path}: payload length {len(raw) - off} does not match dims {dims}")
    flat = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
    values = flat.reshape(tuple(reversed(dims))).transpose(range(rank - 1, -1, -1))
    return name, np.ascontiguousarray(values)


def format_float(x: float) -> str:
    """17 significant digits, enough for doubles to round-trip."""
    return f"{x:.17g}"


def csv_row(report, rel_dh: float) -> str:
    cells = [
        format_float(report.time),
        format_float(report.H),
        format_float(rel_dh),
        format_float(report.q_integral),
        format_float(report.q2_integral),
        format_float(report.min_ellipticity_margin),
        str(report.balance_iterations),
        format_float(report.balance_residual),
    ]
    return ",".join(cells)
