"""Reading and writing embedding files.

EMB1 layout (all little-endian): 4-byte magic ``b"EMB1"``, uint32 version
(=1), uint32 n, uint32 d, then n*d float32 values in row-major order. Clouds
may also be read from headerless CSV, one point per row.
"""

from __future__ import annotations

import csv
import os
import struct

import numpy as np

from .exceptions import InputValidationError
from .pointcloud import check_cloud, l2_normalize

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_emb(path, points) -> None:
    points = check_cloud(points)
    n, d = points.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d))
        fh.write(points.astype("<f4").tobytes(order="C"))


def read_emb(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise InputValidationError(f"{path}: truncated EMB1 header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InputValidationError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise InputValidationError(f"{path}: unsupported EMB1 version {version}")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise InputValidationError(f"{path}: expected {expected} bytes for {n}x{d}, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size, count=n * d)
    return check_cloud(data.reshape(n, d).astype(np.float64), name=str(path))


def read_csv_cloud(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputValidationError(f"{path}: empty CSV")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise InputValidationError(f"{path}: {exc}") from None
    return check_cloud(data, name=str(path))


def load_cloud(path, l2: bool = False) -> np.ndarray:
    """Read an EMB1 file (sniffed by magic) or a headerless CSV."""
    if not os.path.exists(path):
        raise InputValidationError(f"{path}: no such file")
    with open(path, "rb") as fh:
        head = fh.read(4)
    cloud = read_emb(path) if head == MAGIC else read_csv_cloud(path)
    return l2_normalize(cloud) if l2 else cloud


def format_float(x: float) -> str:
    if np.isposinf(x):
        return "inf"
    return repr(float(x))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
