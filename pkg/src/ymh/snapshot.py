"""Binary snapshots and atomic file writes.

Layout (little-endian, no padding)::

    offset  type     field
    0       4s       magic "YMH1"
    4       u32      version (1)
    8       u32      n
    12      f64      L
    20      u32      fiber kind (0 sphere, 1 plane)
    24      f64      central element c
    32      f64      time
    40      f64[]    A1, A2, then phi coordinate planes, each n*n row-major

The payload length is therefore ``8 * n * n * (2 + d)`` with d = 3 (sphere)
or 2 (plane); any other file length is rejected.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .fiber import PLANE, SPHERE, FiberModel
from .fields import FlowState
from .grid import GridSpec

MAGIC = b"YMH1"
VERSION = 1
_HEADER = struct.Struct("<4sIIdIdd")
_KINDS = (SPHERE, PLANE)


class BadSnapshot(ValueError):
    pass


def atomic_write(path: str | Path, data: bytes | str):
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode(state: FlowState) -> bytes:
    g = state.grid
    header = _HEADER.pack(
        MAGIC, VERSION, g.n, g.length, _KINDS.index(state.fiber.kind), state.fiber.c, state.time
    )
    planes = [state.a[0], state.a[1]] + [state.phi[..., k] for k in range(state.phi.shape[-1])]
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in planes)
    return header + body


def decode(data: bytes) -> FlowState:
    if len(data) < _HEADER.size:
        raise BadSnapshot(f"file too short for a header ({len(data)} bytes)")
    magic, version, n, length, kind, c, time = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadSnapshot(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadSnapshot(f"unsupported snapshot version {version} (expected {VERSION})")
    if kind >= len(_KINDS):
        raise BadSnapshot(f"unknown fiber code {kind}")
    fiber = FiberModel(_KINDS[kind], c)
    d = fiber.ambient_dim
    expected = _HEADER.size + 8 * n * n * (2 + d)
    if len(data) != expected:
        raise BadSnapshot(f"length {len(data)} does not match header ({expected} bytes)")
    try:
        grid = GridSpec(n, length)
    except ValueError as exc:
        raise BadSnapshot(str(exc)) from None
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    planes = flat.reshape(2 + d, n, n)
    a = planes[:2].copy()
    phi = np.ascontiguousarray(np.moveaxis(planes[2:], 0, -1))
    return FlowState(grid, fiber, a, phi, time)


def write_snapshot(path: str | Path, state: FlowState):
    atomic_write(path, encode(state))


def read_snapshot(path: str | Path) -> FlowState:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise BadSnapshot(f"cannot read {path}: {exc.strerror}") from None
    return decode(data)
