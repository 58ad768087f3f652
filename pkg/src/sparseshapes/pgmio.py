"""PGM image I/O and CSV export for grid fields.

PGM rasters follow image conventions (row 0 is the top of the image, y
decreasing), while field arrays are indexed ``values[i, j]`` with j
increasing along +y.  The converters below handle the flip.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .geometry import Grid, RegionMask, ScalarField

__all__ = [
    "write_pgm",
    "read_pgm",
    "field_to_pgm",
    "field_from_pgm",
    "mask_to_pgm",
    "mask_from_pgm",
    "field_to_csv",
]


def write_pgm(path, raster: np.ndarray, maxval: int = 65535) -> None:
    """Write a (height, width) array of gray codes as binary PGM (P5)."""
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    arr = np.asarray(raster)
    if arr.ndim != 2:
        raise ValueError("raster must be 2-D")
    if arr.min() < 0 or arr.max() > maxval:
        raise ValueError("raster codes out of range for maxval")
    height, width = arr.shape
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(arr.astype(dtype).tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read an 8- or 16-bit PGM (P2 or P5); returns (raster, maxval)."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file")
    binary = data[:2] == b"P5"
    # header tokens may be interleaved with '#' comments
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        m = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\d+)").match(data, pos)
        if m is None:
            raise ValueError(f"{path}: malformed PGM header")
        tokens.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = tokens
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad maxval {maxval}")
    if binary:
        pos += 1  # single whitespace byte after maxval
        dtype = ">u2" if maxval > 255 else "u1"
        count = width * height
        raster = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        raster = np.array(data[pos:].split(), dtype=np.uint16)
        if raster.size != width * height:
            raise ValueError(f"{path}: P2 sample count mismatch")
    if raster.size != width * height:
        raise ValueError(f"{path}: truncated PGM payload")
    return raster.reshape(height, width).astype(np.int64), maxval


def _values_to_raster(values: np.ndarray) -> np.ndarray:
    # values[i, j] with j up -> raster row 0 at the top
    return values.T[::-1]


def _raster_to_values(raster: np.ndarray) -> np.ndarray:
    return raster[::-1].T


def field_to_pgm(field: ScalarField, path) -> None:
    """Export a field as 16-bit PGM, affinely scaled to use the full range.

    The affine map is recorded in a ``<path>.scale`` sidecar so values can
    be recovered exactly up to quantization.
    """
    vmin = float(field.values.min())
    vmax = float(field.values.max())
    span = vmax - vmin
    if span == 0.0:
        codes = np.zeros_like(field.values, dtype=np.int64)
    else:
        codes = np.rint((field.values - vmin) / span * 65535).astype(np.int64)
    write_pgm(path, _values_to_raster(codes), maxval=65535)
    with open(f"{path}.scale", "w", encoding="ascii") as fh:
        fh.write(f"vmin {vmin!r}\nvmax {vmax!r}\n")


def field_from_pgm(path, grid: Grid) -> ScalarField:
    """Load a PGM written by :func:`field_to_pgm` back onto a grid."""
    raster, _ = read_pgm(path)
    scale = {}
    with open(f"{path}.scale", "r", encoding="ascii") as fh:
        for line in fh:
            key, val = line.split()
            scale[key] = float(val)
    vmin, vmax = scale["vmin"], scale["vmax"]
    values = vmin + _raster_to_values(raster) / 65535.0 * (vmax - vmin)
    return ScalarField(grid, values)


def mask_to_pgm(mask: RegionMask, path) -> None:
    write_pgm(path, _values_to_raster(mask.values.astype(np.int64) * 255), maxval=255)


def mask_from_pgm(path, grid: Grid) -> RegionMask:
    raster, _ = read_pgm(path)
    return RegionMask(grid, _raster_to_values(raster) > 0)


def field_to_csv(field: ScalarField, path) -> None:
    """Write field samples as CSV rows ``i,j,value``."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "value"])
        vals = field.values
        for i in range(field.grid.nx):
            for j in range(field.grid.ny):
                writer.writerow([i, j, repr(float(vals[i, j]))])
