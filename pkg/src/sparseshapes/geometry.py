"""Pixel grids, shape primitives, and signed distance fields.

Conventions used throughout the package:

* grids sample pixel centers, so sample (i, j) sits at
  ``(x_min + (i + 0.5) dx, y_min + (j + 0.5) dy)``;
* field arrays are indexed ``values[i, j]`` with i along x and j along y;
* signed distances are positive inside a shape, zero on its boundary and
  negative outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "RegionMask",
    "Shape",
    "Circle",
    "Ellipse",
    "Rectangle",
    "Triangle",
    "Polygon",
    "rasterize",
    "signed_distance",
    "dissimilarity",
    "mask_from_positive_support",
    "shape_to_record",
    "shape_from_record",
]

# Detecting "exactly on the boundary" in floating point needs a slack that is
# negligible against any pixel size we ever use.
_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform pixel grid over an axis-aligned rectangle."""

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 samples per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid extents must have positive size")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @cached_property
    def x_centers(self) -> np.ndarray:
        x = self.x_min + (np.arange(self.nx) + 0.5) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def y_centers(self) -> np.ndarray:
        y = self.y_min + (np.arange(self.ny) + 0.5) * self.dy
        y.setflags(write=False)
        return y

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinate arrays of shape (nx, ny)."""
        return np.meshgrid(self.x_centers, self.y_centers, indexing="ij")


def _frozen_array(values, shape: tuple[int, int], dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, order="C")
    if arr.shape != shape:
        raise ValueError(f"values shape {arr.shape} does not match grid {shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Real-valued samples on a grid.  Values are finite and immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values, self.grid.shape, float)
        if not np.isfinite(arr).all():
            raise ValueError("scalar field values must be finite")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class RegionMask:
    """Boolean pixel set on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _frozen_array(self.values, self.grid.shape, bool)
        )

    @property
    def area(self) -> float:
        """Covered area, pixel count times pixel area."""
        return float(np.count_nonzero(self.values)) * self.grid.pixel_area


# ---------------------------------------------------------------------------
# shape primitives


class Shape:
    """Base class for closed planar shapes.

    Subclasses provide point membership (``contains``) and an exact signed
    distance to the boundary (``signed_distance_at``), both vectorized over
    coordinate arrays.
    """

    kind: str = ""

    def contains(self, xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def signed_distance_at(self, xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[float]:
        raise NotImplementedError


def _rotate_into(xx, yy, cx, cy, angle):
    # map world coordinates into the shape frame (inverse rotation)
    px = xx - cx
    py = yy - cy
    if angle == 0.0:
        return px, py
    ca = math.cos(angle)
    sa = math.sin(angle)
    return ca * px + sa * py, -sa * px + ca * py


@dataclass(frozen=True)
class Circle(Shape):
    cx: float
    cy: float
    r: float

    kind = "circle"

    def __post_init__(self) -> None:
        if not (np.isfinite([self.cx, self.cy, self.r]).all() and self.r > 0):
            raise ValueError("circle needs finite center and radius > 0")

    def contains(self, xx, yy):
        return (xx - self.cx) ** 2 + (yy - self.cy) ** 2 <= self.r**2

    def signed_distance_at(self, xx, yy):
        return self.r - np.hypot(xx - self.cx, yy - self.cy)

    def params(self):
        return [self.cx, self.cy, self.r]


def _ellipse_distance_quadrant(y0: np.ndarray, y1: np.ndarray, e0: float, e1: float):
    """Distance from first-quadrant points to the ellipse (x/e0)^2+(y/e1)^2=1.

    Requires e0 >= e1.  Robust bisection on the ellipse's radial equation;
    120 halvings take the bracket below double precision.
    """
    d = np.empty_like(y0)

    on_axis = y1 == 0.0
    generic = ~on_axis

    if np.any(on_axis):
        ya = y0[on_axis]
        crit = (e0 * e0 - e1 * e1) / e0 if e0 > e1 else 0.0
        inner = ya < crit
        x0 = np.where(inner, e0 * e0 * ya / (e0 * e0 - e1 * e1) if e0 > e1 else 0.0, e0)
        da = np.empty_like(ya)
        if np.any(inner):
            xi = x0[inner]
            yi = e1 * np.sqrt(np.maximum(1.0 - (xi / e0) ** 2, 0.0))
            da[inner] = np.hypot(xi - ya[inner], yi)
        da[~inner] = np.abs(ya[~inner] - e0)
        d[on_axis] = da

    if np.any(generic):
        p0 = y0[generic]
        p1 = y1[generic]
        z0 = e0 * p0
        z1 = e1 * p1
        # F(t) = (z0/(t+e0^2))^2 + (z1/(t+e1^2))^2 - 1, strictly decreasing on
        # (-e1^2, inf) with a single root; the bracket below always spans it.
        lo = -e1 * e1 + z1
        hi = -e1 * e1 + np.hypot(z0, z1)
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            f = (z0 / (mid + e0 * e0)) ** 2 + (z1 / (mid + e1 * e1)) ** 2 - 1.0
            take_lo = f > 0.0
            lo = np.where(take_lo, mid, lo)
            hi = np.where(take_lo, hi, mid)
        t = 0.5 * (lo + hi)
        qx = e0 * e0 * p0 / (t + e0 * e0)
        qy = e1 * e1 * p1 / (t + e1 * e1)
        d[generic] = np.hypot(qx - p0, qy - p1)

    return d


@dataclass(frozen=True)
class Ellipse(Shape):
    cx: float
    cy: float
    rx: float
    ry: float
    angle: float = 0.0

    kind = "ellipse"

    def __post_init__(self) -> None:
        vals = [self.cx, self.cy, self.rx, self.ry, self.angle]
        if not (np.isfinite(vals).all() and self.rx > 0 and self.ry > 0):
            raise ValueError("ellipse needs finite parameters and positive radii")

    def contains(self, xx, yy):
        px, py = _rotate_into(xx, yy, self.cx, self.cy, self.angle)
        return (px / self.rx) ** 2 + (py / self.ry) ** 2 <= 1.0

    def signed_distance_at(self, xx, yy):
        px, py = _rotate_into(xx, yy, self.cx, self.cy, self.angle)
        ax, ay = np.abs(px), np.abs(py)
        if self.rx >= self.ry:
            d = _ellipse_distance_quadrant(ax, ay, self.rx, self.ry)
        else:
            d = _ellipse_distance_quadrant(ay, ax, self.ry, self.rx)
        inside = (px / self.rx) ** 2 + (py / self.ry) ** 2 <= 1.0
        return np.where(inside, d, -d)

    def params(self):
        return [self.cx, self.cy, self.rx, self.ry, self.angle]


@dataclass(frozen=True)
class Rectangle(Shape):
    """Rectangle given by center, half-extents and an optional rotation."""

    cx: float
    cy: float
    hx: float
    hy: float
    angle: float = 0.0

    kind = "rect"

    def __post_init__(self) -> None:
        vals = [self.cx, self.cy, self.hx, self.hy, self.angle]
        if not (np.isfinite(vals).all() and self.hx > 0 and self.hy > 0):
            raise ValueError("rectangle needs finite parameters and positive extents")

    def contains(self, xx, yy):
        px, py = _rotate_into(xx, yy, self.cx, self.cy, self.angle)
        return (np.abs(px) <= self.hx) & (np.abs(py) <= self.hy)

    def signed_distance_at(self, xx, yy):
        px, py = _rotate_into(xx, yy, self.cx, self.cy, self.angle)
        qx = np.abs(px) - self.hx
        qy = np.abs(py) - self.hy
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return -(outside + inside)

    def params(self):
        return [self.cx, self.cy, self.hx, self.hy, self.angle]


def _polygon_validate(verts: np.ndarray) -> None:
    n = len(verts)
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    if not np.isfinite(verts).all():
        raise ValueError("polygon vertices must be finite")
    scale = float(np.abs(verts).max()) + 1.0
    for i in range(n):
        if np.allclose(verts[i], verts[(i + 1) % n], atol=1e-12 * scale, rtol=0):
            raise ValueError("polygon has repeated consecutive vertices")
    # shoelace area; collinear rings collapse to zero
    x = verts[:, 0]
    y = verts[:, 1]
    area2 = float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if abs(area2) <= 1e-12 * scale * scale:
        raise ValueError("polygon is degenerate (zero area)")
    _polygon_check_simple(verts, scale)


def _segments_properly_intersect(p, q, r, s) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    o1 = orient(p, q, r)
    o2 = orient(p, q, s)
    o3 = orient(r, s, p)
    o4 = orient(r, s, q)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def _polygon_check_simple(verts: np.ndarray, scale: float) -> None:
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = verts[j], verts[(j + 1) % n]
            if _segments_properly_intersect(a, b, c, d):
                raise ValueError("polygon boundary self-intersects")


def _polygon_contains(verts: np.ndarray, xx, yy):
    inside = np.zeros(np.shape(xx), dtype=bool)
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        crosses = (y1 > yy) != (y2 > yy)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (yy - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (xx < x_at)
    # even-odd parity leaves boundary points ambiguous; force them inside
    return inside | (_polygon_edge_distance(verts, xx, yy) <= _BOUNDARY_TOL)


def _polygon_edge_distance(verts: np.ndarray, xx, yy):
    d2 = np.full(np.shape(xx), np.inf)
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        ee = ex * ex + ey * ey
        t = np.clip(((xx - x1) * ex + (yy - y1) * ey) / ee, 0.0, 1.0)
        ddx = xx - (x1 + t * ex)
        ddy = yy - (y1 + t * ey)
        d2 = np.minimum(d2, ddx * ddx + ddy * ddy)
    return np.sqrt(d2)


def _polygon_signed_distance(verts: np.ndarray, xx, yy):
    d = _polygon_edge_distance(verts, xx, yy)
    inside = _polygon_contains(verts, xx, yy)
    return np.where(inside, d, -d)


@dataclass(frozen=True)
class Triangle(Shape):
    x1: float
    y1: float
    x2: float
    y2: float
    x3: float
    y3: float

    kind = "triangle"

    def __post_init__(self) -> None:
        _polygon_validate(self._verts)

    @property
    def _verts(self) -> np.ndarray:
        return np.array(
            [[self.x1, self.y1], [self.x2, self.y2], [self.x3, self.y3]], dtype=float
        )

    def contains(self, xx, yy):
        return _polygon_contains(self._verts, xx, yy)

    def signed_distance_at(self, xx, yy):
        return _polygon_signed_distance(self._verts, xx, yy)

    def params(self):
        return [self.x1, self.y1, self.x2, self.y2, self.x3, self.y3]


@dataclass(frozen=True)
class Polygon(Shape):
    """Simple closed polygon; vertices as a flat (x, y, x, y, ...) tuple."""

    coords: tuple[float, ...]

    kind = "polygon"

    def __post_init__(self) -> None:
        if len(self.coords) % 2 != 0:
            raise ValueError("polygon coordinates must come in (x, y) pairs")
        object.__setattr__(self, "coords", tuple(float(v) for v in self.coords))
        _polygon_validate(self._verts)

    @classmethod
    def from_vertices(cls, vertices) -> "Polygon":
        flat = tuple(float(v) for xy in vertices for v in xy)
        return cls(flat)

    @property
    def _verts(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float).reshape(-1, 2)

    def contains(self, xx, yy):
        return _polygon_contains(self._verts, xx, yy)

    def signed_distance_at(self, xx, yy):
        return _polygon_signed_distance(self._verts, xx, yy)

    def params(self):
        return list(self.coords)


# ---------------------------------------------------------------------------
# grid operations


def rasterize(shape: Shape, grid: Grid) -> RegionMask:
    """Mask of pixel centers inside the shape or on its boundary."""
    xx, yy = grid.mesh()
    return RegionMask(grid, shape.contains(xx, yy))


def signed_distance(shape: Shape, grid: Grid) -> ScalarField:
    """Exact signed distance to the shape boundary, positive inside."""
    xx, yy = grid.mesh()
    return ScalarField(grid, shape.signed_distance_at(xx, yy))


def mask_from_positive_support(field: ScalarField) -> RegionMask:
    """Pixels where the field is strictly positive."""
    return RegionMask(field.grid, field.values > 0.0)


def dissimilarity(a: RegionMask, b: RegionMask) -> float:
    """Symmetric-difference area between two masks on the same grid."""
    if a.grid != b.grid:
        raise ValueError("masks live on different grids")
    return float(np.count_nonzero(a.values ^ b.values)) * a.grid.pixel_area


# ---------------------------------------------------------------------------
# text records

_SHAPE_KINDS = {
    "circle": (Circle, 3),
    "ellipse": (Ellipse, 5),
    "rect": (Rectangle, 5),
    "triangle": (Triangle, 6),
}


def shape_to_record(shape: Shape) -> str:
    """Serialize a shape as ``kind p1 p2 ...`` with round-trip-exact floats."""
    parts = [shape.kind] + [repr(float(p)) for p in shape.params()]
    return " ".join(parts)


def shape_from_record(record: str) -> Shape:
    """Parse a record produced by :func:`shape_to_record`."""
    parts = record.split()
    if not parts:
        raise ValueError("empty shape record")
    kind = parts[0]
    try:
        params = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed shape record {record!r}") from exc
    if kind == "polygon":
        return Polygon(tuple(params))
    if kind not in _SHAPE_KINDS:
        raise ValueError(f"unknown shape kind {kind!r}")
    cls, n_req = _SHAPE_KINDS[kind]
    if kind in ("ellipse", "rect") and len(params) == n_req - 1:
        params.append(0.0)  # rotation is optional in records
    if len(params) != n_req:
        raise ValueError(f"shape record {record!r} has wrong parameter count")
    return cls(*params)
