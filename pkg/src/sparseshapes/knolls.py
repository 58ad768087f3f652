"""Knoll dictionaries and composite level-set fields.

A knoll is a compactly supported bump built from a shape's signed distance
rho: clip rho + c at zero, then normalize the peak to one.  A dictionary of
knolls spans composite level-set fields

    phi(x, alpha) = -c + sum_i alpha_i psi_i(x)

whose positive support encodes a composed region: adding knolls unions
shapes, while a strongly negative weight carves one shape out of another.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import (
    Grid,
    RegionMask,
    ScalarField,
    Shape,
    mask_from_positive_support,
    shape_from_record,
    shape_to_record,
    signed_distance,
)

__all__ = [
    "Knoll",
    "ShapeDictionary",
    "make_knoll",
    "make_dictionary",
    "assemble_level_set",
    "shape_of",
    "heaviside_eps",
    "delta_eps",
    "save_dictionary",
    "load_dictionary",
]

_DICT_FORMAT_VERSION = 1


def heaviside_eps(x, eps: float = 0.05):
    """Smoothed unit step: 0 below -eps, 1 above +eps, sine blend between."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    arr = np.asarray(x, dtype=float)
    core = 0.5 + arr / (2 * eps) + np.sin(np.pi * arr / eps) / (2 * np.pi)
    # sin(pi) roundoff can push the blend a hair outside [0, 1] at the seams
    core = np.clip(core, 0.0, 1.0)
    out = np.where(arr > eps, 1.0, np.where(arr < -eps, 0.0, core))
    return float(out) if np.isscalar(x) else out


def delta_eps(x, eps: float = 0.05):
    """Derivative of :func:`heaviside_eps`; vanishes outside [-eps, eps]."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    arr = np.asarray(x, dtype=float)
    core = (1.0 + np.cos(np.pi * arr / eps)) / (2 * eps)
    out = np.where(np.abs(arr) <= eps, core, 0.0)
    return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class Knoll:
    """Normalized clipped-distance bump with its generating shape.

    peak is the pre-normalization maximum max(rho) + c; using it as the
    coefficient reproduces the source shape exactly at the zero level.
    """

    shape: Shape
    field: ScalarField
    support: RegionMask
    peak: float
    label: str = ""

    def __post_init__(self) -> None:
        vals = self.field.values
        if vals.min() < 0 or not np.isclose(vals.max(), 1.0, rtol=0, atol=1e-12):
            raise ValueError("knoll field must be nonnegative with peak 1")
        if not np.array_equal(vals > 0, self.support.values):
            raise ValueError("knoll support must be the positive set of its field")
        if self.peak <= 0:
            raise ValueError("knoll peak must be positive")


def make_knoll(shape: Shape, grid: Grid, c: float, label: str = "") -> Knoll:
    """Build the knoll (rho + c)+ / max(rho + c) for a shape on a grid.

    c > 0 lifts the clip slightly outside the shape, so the bump's support
    is the c-dilation of the shape and a weight near max(rho) + c
    reproduces the shape itself at the zero level of the composite field.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    rho = signed_distance(shape, grid).values
    raw = np.maximum(rho + c, 0.0)
    peak = raw.max()
    if peak <= 0.0:
        raise ValueError("empty knoll: shape support does not reach the grid")
    vals = raw / peak
    return Knoll(
        shape=shape,
        field=ScalarField(grid, vals),
        support=RegionMask(grid, vals > 0),
        peak=float(peak),
        label=label,
    )


@dataclass(frozen=True)
class ShapeDictionary:
    """Ordered knoll collection on a common grid with a common lift c."""

    grid: Grid
    knolls: tuple[Knoll, ...]
    c: float

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError("c must be positive")
        if len(self.knolls) == 0:
            raise ValueError("dictionary has no knolls")
        object.__setattr__(self, "knolls", tuple(self.knolls))
        for k in self.knolls:
            if k.field.grid != self.grid:
                raise ValueError("knoll grid does not match dictionary grid")

    def __len__(self) -> int:
        return len(self.knolls)

    @property
    def labels(self) -> list[str]:
        return [k.label for k in self.knolls]

    @cached_property
    def field_matrix(self) -> np.ndarray:
        """Knoll fields stacked as an (n, nx*ny) matrix."""
        mat = np.stack([k.field.values.ravel() for k in self.knolls])
        mat.setflags(write=False)
        return mat

    def check_coefficients(self, alpha: np.ndarray) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (len(self),):
            raise ValueError(
                f"coefficient vector has length {alpha.size}, expected {len(self)}"
            )
        if not np.isfinite(alpha).all():
            raise ValueError("coefficients must be finite")
        return alpha


def make_dictionary(
    shapes, grid: Grid, c: float, labels=None
) -> ShapeDictionary:
    """Knolls for a shape sequence, in order."""
    shapes = list(shapes)
    if labels is None:
        labels = [""] * len(shapes)
    if len(labels) != len(shapes):
        raise ValueError("labels and shapes differ in length")
    knolls = tuple(
        make_knoll(s, grid, c, label=lab) for s, lab in zip(shapes, labels)
    )
    return ShapeDictionary(grid=grid, knolls=knolls, c=c)


def assemble_level_set(dictionary: ShapeDictionary, alpha) -> ScalarField:
    """Composite field -c + sum_i alpha_i psi_i on the dictionary grid."""
    alpha = dictionary.check_coefficients(alpha)
    flat = alpha @ dictionary.field_matrix - dictionary.c
    return ScalarField(dictionary.grid, flat.reshape(dictionary.grid.shape))


def shape_of(dictionary: ShapeDictionary, alpha) -> RegionMask:
    """Region encoded by a coefficient vector: positive support of phi."""
    return mask_from_positive_support(assemble_level_set(dictionary, alpha))


# ---------------------------------------------------------------------------
# dictionary files


def save_dictionary(dictionary: ShapeDictionary, path) -> None:
    """Write the generating data (grid, c, shape records) as versioned text."""
    g = dictionary.grid
    lines = [
        f"version {_DICT_FORMAT_VERSION}",
        f"grid {g.nx} {g.ny} {g.x_min!r} {g.x_max!r} {g.y_min!r} {g.y_max!r}",
        f"c {dictionary.c!r}",
        f"count {len(dictionary)}",
    ]
    for k in dictionary.knolls:
        if "\t" in k.label or "\n" in k.label:
            raise ValueError("knoll labels may not contain tabs or newlines")
        lines.append(f"shape {shape_to_record(k.shape)}\t{k.label}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dictionary(path) -> ShapeDictionary:
    """Rebuild a dictionary saved by :func:`save_dictionary`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: missing dictionary version header") from exc
    if version != _DICT_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported dictionary version {version}")
    header = {}
    shape_lines = []
    for ln in lines[1:]:
        key = ln.split(None, 1)[0]
        if key == "shape":
            shape_lines.append(ln)
        else:
            header[key] = ln.split(None, 1)[1]
    try:
        g = header["grid"].split()
        grid = Grid(int(g[0]), int(g[1]), *(float(v) for v in g[2:6]))
        c = float(header["c"])
        count = int(header["count"])
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed dictionary header") from exc
    if count != len(shape_lines):
        raise ValueError(
            f"{path}: header count {count} != {len(shape_lines)} shape records"
        )
    shapes = []
    labels = []
    for ln in shape_lines:
        body = ln[len("shape "):]
        record, _, label = body.partition("\t")
        shapes.append(shape_from_record(record))
        labels.append(label)
    return make_dictionary(shapes, grid, c, labels=labels)
