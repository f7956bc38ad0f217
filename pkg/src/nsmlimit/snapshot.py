"""Binary field snapshots.

Layout::

    NSMLIMIT-SNAPSHOT 1\\n
    <one line of JSON: d, n, fields, components, eps, time, system, dtype, order>\\n
    <raw little-endian complex128 blocks>

Blocks appear field by field and component by component (x, y, z), each a
full n^d lattice in row-major (C) order with fftfreq index ordering.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .spectral import VectorField, build_grid
from .systems import LimitState, PlasmaState, SpeciesState

MAGIC = b"NSMLIMIT-SNAPSHOT 1\n"
DTYPE = "<c16"

_KINDS = {
    ("u", "j", "E", "B"): (PlasmaState, "eqnsm"),
    ("u_plus", "u_minus", "E", "B"): (SpeciesState, "species"),
    ("u", "E", "B"): (LimitState, "nsmo"),
}


class SnapshotError(ValueError):
    pass


def write_snapshot(path, state, eps: Optional[float] = None) -> dict:
    names = tuple(state.names)
    if names not in _KINDS:
        raise SnapshotError(f"unsupported field set {names}")
    grid = state.grid
    header = {
        "d": grid.d,
        "n": grid.n,
        "fields": list(names),
        "components": 3,
        "eps": eps,
        "time": float(state.t),
        "system": _KINDS[names][1],
        "dtype": DTYPE,
        "order": "C",
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for f in state.fields():
            fh.write(np.ascontiguousarray(f.coeffs, dtype=DTYPE).tobytes(order="C"))
    return header


def read_header(path) -> tuple[dict, int]:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != MAGIC:
            raise SnapshotError(f"{path}: not a snapshot file")
        line = fh.readline()
        try:
            header = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"{path}: malformed header ({exc})") from None
        return header, fh.tell()


def read_snapshot(path):
    """Return (header, state)."""
    header, offset = read_header(path)
    names = tuple(header["fields"])
    if names not in _KINDS:
        raise SnapshotError(f"{path}: unsupported field set {names}")
    if header.get("dtype") != DTYPE or header.get("components") != 3:
        raise SnapshotError(f"{path}: unsupported layout")
    grid = build_grid(header["d"], header["n"])
    raw = Path(path).read_bytes()[offset:]
    count = len(names) * 3 * grid.size
    data = np.frombuffer(raw, dtype=DTYPE)
    if data.size != count:
        raise SnapshotError(f"{path}: expected {count} coefficients, found {data.size}")
    arr = data.astype(np.complex128).reshape((len(names), 3) + grid.shape)
    cls = _KINDS[names][0]
    fields = [VectorField(grid, arr[i].copy()) for i in range(len(names))]
    return header, cls(*fields, t=header["time"])
