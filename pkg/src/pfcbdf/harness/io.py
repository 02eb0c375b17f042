"""Diagnostics CSV and binary field snapshots.

Snapshot layout (little endian): magic ``PFC1``, u32 nx, u32 ny, f64 lx,
f64 ly, f64 time, then nx*ny f64 values in row-major order.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PFC1"
_HEADER = struct.Struct("<4sIIddd")
CSV_COLUMNS = ("step", "time", "energy", "modified_energy", "volume", "dissipation_rate", "fp_iters")


class SnapshotFormatError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, rows, columns=CSV_COLUMNS) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                row = tuple(row)
                if len(row) != len(columns):
                    raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[list[str], list[list[float]]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read CSV {path}: {exc}") from exc
    header, body = rows[0], rows[1:]
    return header, [[float(x) for x in r] for r in body]


def write_snapshot(path, field: np.ndarray, t: float, lx: float, ly: float) -> Path:
    path = Path(path)
    field = np.ascontiguousarray(field, dtype="<f8")
    if field.ndim != 2:
        raise ValueError("snapshot field must be two-dimensional")
    nx, ny = field.shape
    try:
        with path.open("wb") as fh:
            fh.write(_HEADER.pack(MAGIC, nx, ny, float(lx), float(ly), float(t)))
            fh.write(field.tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def read_snapshot(path) -> tuple[np.ndarray, float, float, float]:
    """Returns (field, time, lx, ly)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read snapshot {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, nx, ny, lx, ly, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * nx * ny
    if len(data) != expected:
        raise SnapshotFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    field = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(nx, ny).copy()
    return field, t, lx, ly
