"""Binary snapshot format shared by the solver and the diagnostics pipeline.

Layout (all little-endian):

    bytes 0..7    magic "ZSPARSE1"
    u32           n, samples per axis
    f64           L, box side length
    f64           nu, viscosity of the run
    f64           t, snapshot time
    3 * n^3 f64   velocity components u1, u2, u3, each in C-order (i, j, k)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import Grid, VectorField

MAGIC = b"ZSPARSE1"
_HEADER = struct.Struct("<Iddd")


class SnapshotFormatError(Exception):
    """Raised for bad magic, truncation, or inconsistent snapshot payloads."""


@dataclass(frozen=True)
class Snapshot:
    velocity: VectorField
    nu: float
    t: float


def write_snapshot(path: str | Path, velocity: VectorField, nu: float, t: float) -> Path:
    path = Path(path)
    n = velocity.grid.n
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(n, velocity.grid.L, float(nu), float(t)))
        for c in range(3):
            fh.write(np.ascontiguousarray(velocity.data[c], dtype="<f8").tobytes())
    return path


def read_snapshot(path: str | Path) -> Snapshot:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[: len(MAGIC)] != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {raw[:8]!r}, expected {MAGIC!r}")
    n, L, nu, t = _HEADER.unpack_from(raw, len(MAGIC))
    expected = len(MAGIC) + _HEADER.size + 3 * n**3 * 8
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{path}: payload size mismatch for n={n}: expected {expected} bytes, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=len(MAGIC) + _HEADER.size)
    comps = data.reshape(3, n, n, n)
    grid = Grid(n, L)
    try:
        velocity = VectorField(grid, comps)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: {exc}") from exc
    return Snapshot(velocity=velocity, nu=nu, t=t)
