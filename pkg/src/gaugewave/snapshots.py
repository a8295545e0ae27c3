"""Self-describing field snapshot files.

Layout: an ASCII header (magic line ``gaugewave-field 1`` and ``key=value``
lines for the grid, field name, and reality flag), one blank line, then the
coefficient payload as little-endian float64 (re, im) pairs in row-major
lattice order.  The header carries the normalization tag ``D2``, which names
the coefficient convention used throughout this package (forward transform
scaled by ``1/n^dim``, so coefficients are the amplitudes of ``exp(i k.x)``).
"""
from __future__ import annotations

import numpy as np

from .spectral import Grid, SpectralField

MAGIC = "gaugewave-field 1"
NORMALIZATION_TAG = "D2"


def write_field(path, field: SpectralField, name: str) -> None:
    """Write one field to ``path`` in the snapshot container format."""
    if not name or any(ch in name for ch in "\n\r="):
        raise ValueError(f"invalid field name {name!r}")
    g = field.grid
    header = (
        f"{MAGIC}\n"
        f"dim={g.dim}\n"
        f"n={g.n}\n"
        f"box_length={g.box_length!r}\n"
        f"field={name}\n"
        f"reality={'real' if field.real else 'complex'}\n"
        f"normalization={NORMALIZATION_TAG}\n"
        "\n"
    )
    payload = np.ascontiguousarray(field.coeffs, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes())


def read_field(path) -> tuple:
    """Read a snapshot; returns ``(field, name)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise ValueError(f"{path}: missing header terminator")
    lines = blob[:sep].decode("ascii", errors="replace").splitlines()
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"{path}: not a field snapshot (bad magic line)")
    meta = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise ValueError(f"{path}: malformed header line {ln!r}")
        key, _, val = ln.partition("=")
        meta[key] = val
    for key in ("dim", "n", "box_length", "field", "reality", "normalization"):
        if key not in meta:
            raise ValueError(f"{path}: header missing {key}")
    if meta["normalization"] != NORMALIZATION_TAG:
        raise ValueError(f"{path}: unsupported normalization {meta['normalization']!r}")
    if meta["reality"] not in ("real", "complex"):
        raise ValueError(f"{path}: bad reality flag {meta['reality']!r}")
    grid = Grid(int(meta["dim"]), int(meta["n"]), float(meta["box_length"]))
    count = grid.n ** grid.dim
    raw = blob[sep + 2 :]
    expect = count * 16
    if len(raw) != expect:
        raise ValueError(f"{path}: payload holds {len(raw)} bytes, expected {expect}")
    coeffs = np.frombuffer(raw, dtype="<c16").reshape(grid.shape).astype(complex)
    field = SpectralField.from_coeffs(grid, coeffs, real=(meta["reality"] == "real"))
    return field, meta["field"]
