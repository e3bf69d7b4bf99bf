"""Uniform grids, pixel domains with slits, shape rasterization and domain sequences.

Index conventions (used throughout the package, arrays are indexed ``[i, j]``
with ``i`` along x):

    cells            (nx,   ny)     centre  (x0 + (i+1/2) h, y0 + (j+1/2) h)
    vertices         (nx+1, ny+1)   point   (x0 + i h,       y0 + j h)
    vertical faces   (nx+1, ny)     u-node  (x0 + i h,       y0 + (j+1/2) h)
    horizontal faces (nx,   ny+1)   v-node  (x0 + (i+1/2) h, y0 + j h)

Vertical face ``(i, j)`` separates cells ``(i-1, j)`` and ``(i, j)``; horizontal
face ``(i, j)`` separates cells ``(i, j-1)`` and ``(i, j)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class BcMode(enum.Enum):
    """How slit faces are treated.

    ``WEAK`` sees a slit as a wall (trace zero on both sides, no flux through it);
    ``PSEUDO`` is blind to slits, so the operators equal those of the slit-free mask.
    """

    WEAK = "weak"
    PSEUDO = "pseudo"


class Policy(enum.Enum):
    CENTER = "center"
    INNER = "inner"
    OUTER = "outer"


class Direction(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


@dataclass(frozen=True)
class Grid:
    origin: tuple[float, float]
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"cell counts must be >= 1, got {self.nx}x{self.ny}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def unit_square(cls, n: int) -> "Grid":
        return cls((0.0, 0.0), 1.0 / n, n, n)

    @property
    def shape_cells(self):
        return (self.nx, self.ny)

    @property
    def shape_vertices(self):
        return (self.nx + 1, self.ny + 1)

    @property
    def shape_u(self):
        return (self.nx + 1, self.ny)

    @property
    def shape_v(self):
        return (self.nx, self.ny + 1)

    def refine(self) -> "Grid":
        return Grid(self.origin, self.h / 2, 2 * self.nx, 2 * self.ny)

    def is_refinement_of(self, coarse: "Grid") -> bool:
        return (
            self.nx == 2 * coarse.nx
            and self.ny == 2 * coarse.ny
            and math.isclose(self.h * 2, coarse.h, rel_tol=1e-12)
            and np.allclose(self.origin, coarse.origin, rtol=0, atol=1e-12 * coarse.h)
        )

    def axes(self, kind: str):
        """1-D node coordinates (xs, ys) for ``kind`` in cell/vertex/u/v."""
        x0, y0 = self.origin
        h = self.h
        xc = x0 + (np.arange(self.nx) + 0.5) * h
        yc = y0 + (np.arange(self.ny) + 0.5) * h
        xv = x0 + np.arange(self.nx + 1) * h
        yv = y0 + np.arange(self.ny + 1) * h
        return {"cell": (xc, yc), "vertex": (xv, yv), "u": (xv, yc), "v": (xc, yv)}[kind]

    def mesh(self, kind: str):
        xs, ys = self.axes(kind)
        return np.meshgrid(xs, ys, indexing="ij")

    @property
    def bounds(self):
        x0, y0 = self.origin
        return (x0, y0, x0 + self.nx * self.h, y0 + self.ny * self.h)


def _frozen(a, dtype=bool):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DomainMask:
    """A pixel domain: a set of cells plus slit faces acting as internal walls.

    ``slit_u`` marks vertical faces, ``slit_v`` horizontal faces. Every slit face
    must be interior to the cell set.
    """

    grid: Grid
    cells: np.ndarray
    slit_u: np.ndarray = None
    slit_v: np.ndarray = None

    def __post_init__(self):
        g = self.grid
        cells = _frozen(self.cells)
        if cells.shape != g.shape_cells:
            raise ValueError(f"cell array shape {cells.shape} != {g.shape_cells}")
        su = np.zeros(g.shape_u, bool) if self.slit_u is None else self.slit_u
        sv = np.zeros(g.shape_v, bool) if self.slit_v is None else self.slit_v
        su, sv = _frozen(su), _frozen(sv)
        if su.shape != g.shape_u or sv.shape != g.shape_v:
            raise ValueError("slit array shapes do not match the grid")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "slit_u", su)
        object.__setattr__(self, "slit_v", sv)
        if np.any(su & ~interior_u(cells)) or np.any(sv & ~interior_v(cells)):
            raise ValueError("slit faces must have both incident cells in the domain")

    def __eq__(self, other):
        if not isinstance(other, DomainMask):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.slit_u, other.slit_u)
            and np.array_equal(self.slit_v, other.slit_v)
        )

    __hash__ = None

    @classmethod
    def full(cls, grid: Grid) -> "DomainMask":
        return cls(grid, np.ones(grid.shape_cells, bool))

    @property
    def n_cells(self) -> int:
        return int(self.cells.sum())

    @property
    def has_slits(self) -> bool:
        return bool(self.slit_u.any() or self.slit_v.any())

    @property
    def area(self) -> float:
        return self.n_cells * self.grid.h**2

    def without_slits(self) -> "DomainMask":
        return DomainMask(self.grid, self.cells)

    def with_slits(self, slit_u=None, slit_v=None) -> "DomainMask":
        return DomainMask(self.grid, self.cells, slit_u, slit_v)

    def issubset(self, other: "DomainMask") -> bool:
        return self.grid == other.grid and not np.any(self.cells & ~other.cells)

    def refine(self) -> "DomainMask":
        """Same set on the factor-2 refined grid; each slit face becomes two."""
        cells = np.repeat(np.repeat(self.cells, 2, axis=0), 2, axis=1)
        su = np.zeros((2 * self.grid.nx + 1, 2 * self.grid.ny), bool)
        su[::2, :] = np.repeat(self.slit_u, 2, axis=1)
        sv = np.zeros((2 * self.grid.nx, 2 * self.grid.ny + 1), bool)
        sv[:, ::2] = np.repeat(self.slit_v, 2, axis=0)
        return DomainMask(self.grid.refine(), cells, su, sv)

    # Active degree-of-freedom sets -----------------------------------------

    def active_u(self, mode: BcMode) -> np.ndarray:
        a = interior_u(self.cells)
        if mode is BcMode.WEAK:
            a &= ~self.slit_u
        return a

    def active_v(self, mode: BcMode) -> np.ndarray:
        a = interior_v(self.cells)
        if mode is BcMode.WEAK:
            a &= ~self.slit_v
        return a

    def slit_vertices(self) -> np.ndarray:
        """Vertices lying on a slit, endpoints included."""
        sv = np.zeros(self.grid.shape_vertices, bool)
        sv[:, :-1] |= self.slit_u
        sv[:, 1:] |= self.slit_u
        sv[:-1, :] |= self.slit_v
        sv[1:, :] |= self.slit_v
        return sv

    def active_vertices(self, mode: BcMode) -> np.ndarray:
        c = self.cells
        a = np.zeros(self.grid.shape_vertices, bool)
        a[1:-1, 1:-1] = c[:-1, :-1] & c[1:, :-1] & c[:-1, 1:] & c[1:, 1:]
        if mode is BcMode.WEAK:
            a &= ~self.slit_vertices()
        return a


def interior_u(cells: np.ndarray) -> np.ndarray:
    a = np.zeros((cells.shape[0] + 1, cells.shape[1]), bool)
    a[1:-1, :] = cells[:-1, :] & cells[1:, :]
    return a


def interior_v(cells: np.ndarray) -> np.ndarray:
    a = np.zeros((cells.shape[0], cells.shape[1] + 1), bool)
    a[:, 1:-1] = cells[:, :-1] & cells[:, 1:]
    return a


# Shapes ----------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def contains(self, x, y):
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 < self.radius**2

    def square_inside(self, x0, y0, x1, y1):
        # closed square inside the closed disk iff its farthest corner is
        cx, cy = self.center
        dx = np.maximum(np.abs(x0 - cx), np.abs(x1 - cx))
        dy = np.maximum(np.abs(y0 - cy), np.abs(y1 - cy))
        return dx**2 + dy**2 <= self.radius**2

    def square_meets(self, x0, y0, x1, y1):
        cx, cy = self.center
        dx = np.clip(cx, x0, x1) - cx
        dy = np.clip(cy, y0, y1) - cy
        return dx**2 + dy**2 <= self.radius**2


@dataclass(frozen=True)
class Rect:
    corner: tuple[float, float]
    width: float
    height: float

    def bbox(self):
        x, y = self.corner
        return (x, y, x + self.width, y + self.height)

    def contains(self, x, y):
        a, b, c, d = self.bbox()
        return (x > a) & (x < c) & (y > b) & (y < d)

    def square_inside(self, x0, y0, x1, y1):
        a, b, c, d = self.bbox()
        tol = 1e-12 * max(self.width, self.height)
        return (x0 >= a - tol) & (x1 <= c + tol) & (y0 >= b - tol) & (y1 <= d + tol)

    def square_meets(self, x0, y0, x1, y1):
        a, b, c, d = self.bbox()
        tol = 1e-12 * max(self.width, self.height)
        return (x1 >= a - tol) & (x0 <= c + tol) & (y1 >= b - tol) & (y0 <= d + tol)


@dataclass(frozen=True)
class SlitSquare:
    """An axis-aligned square minus a grid-aligned segment.

    With ``half_thickness == 0`` the segment becomes slit faces; otherwise the
    segment thickened by ``half_thickness`` on both sides is removed.
    """

    corner: tuple[float, float]
    size: float
    start: tuple[float, float]
    end: tuple[float, float]
    half_thickness: float = 0.0

    def __post_init__(self):
        if self.start[0] != self.end[0] and self.start[1] != self.end[1]:
            raise ValueError("slit segment must be horizontal or vertical")
        if self.half_thickness < 0:
            raise ValueError("slit half-thickness must be >= 0")

    @property
    def square(self) -> Rect:
        return Rect(self.corner, self.size, self.size)

    @property
    def horizontal(self) -> bool:
        return self.start[1] == self.end[1]

    def band(self) -> Rect:
        (xa, ya), (xb, yb) = self.start, self.end
        t = self.half_thickness
        if self.horizontal:
            return Rect((min(xa, xb), ya - t), abs(xb - xa), 2 * t)
        return Rect((xa - t, min(ya, yb)), 2 * t, abs(yb - ya))

    def bbox(self):
        return self.square.bbox()

    def contains(self, x, y):
        inside = self.square.contains(x, y)
        if self.half_thickness > 0:
            b = self.band()
            a0, b0, a1, b1 = b.bbox()
            inside &= ~((x >= a0) & (x <= a1) & (y >= b0) & (y <= b1))
        return inside

    def square_inside(self, x0, y0, x1, y1):
        ok = self.square.square_inside(x0, y0, x1, y1)
        if self.half_thickness > 0:
            ok &= ~_open_overlap(self.band(), x0, y0, x1, y1)
        return ok

    def square_meets(self, x0, y0, x1, y1):
        ok = self.square.square_meets(x0, y0, x1, y1)
        if self.half_thickness > 0:
            ok &= ~self.band().square_inside(x0, y0, x1, y1)
        return ok


def _open_overlap(r: Rect, x0, y0, x1, y1):
    a, b, c, d = r.bbox()
    return (x1 > a) & (x0 < c) & (y1 > b) & (y0 < d)


@dataclass(frozen=True)
class Union:
    parts: tuple

    def bbox(self):
        boxes = np.array([p.bbox() for p in self.parts])
        return (boxes[:, 0].min(), boxes[:, 1].min(), boxes[:, 2].max(), boxes[:, 3].max())

    def contains(self, x, y):
        return np.logical_or.reduce([p.contains(x, y) for p in self.parts])

    def square_inside(self, *sq):
        # certified subset: inside one of the parts
        return np.logical_or.reduce([p.square_inside(*sq) for p in self.parts])

    def square_meets(self, *sq):
        return np.logical_or.reduce([p.square_meets(*sq) for p in self.parts])


@dataclass(frozen=True)
class Difference:
    base: object
    removed: object

    def bbox(self):
        return self.base.bbox()

    def contains(self, x, y):
        return self.base.contains(x, y) & ~self.removed.contains(x, y)

    def square_inside(self, *sq):
        return self.base.square_inside(*sq) & ~self.removed.square_meets(*sq)

    def square_meets(self, *sq):
        return self.base.square_meets(*sq) & ~self.removed.square_inside(*sq)


ShapeSpec = (Disk, Rect, SlitSquare, Union, Difference)


def rasterize(shape, grid: Grid, policy: Policy = Policy.CENTER) -> DomainMask:
    """Pixel approximation of ``shape`` on ``grid``.

    ``INNER`` keeps cells whose closed square lies in the closed shape, ``OUTER``
    cells whose square meets it, ``CENTER`` cells whose centre lies in the open
    shape. Slits of a zero-thickness ``SlitSquare`` become slit faces.
    """
    xmin, ymin, xmax, ymax = grid.bounds
    bx0, by0, bx1, by1 = shape.bbox()
    tol = 1e-12 * grid.h
    if bx0 < xmin - tol or by0 < ymin - tol or bx1 > xmax + tol or by1 > ymax + tol:
        raise ValueError("grid bounding box must contain the shape")
    xv, yv = grid.axes("vertex")
    X0, Y0 = np.meshgrid(xv[:-1], yv[:-1], indexing="ij")
    X1, Y1 = X0 + grid.h, Y0 + grid.h
    if policy is Policy.INNER:
        cells = shape.square_inside(X0, Y0, X1, Y1)
    elif policy is Policy.OUTER:
        cells = shape.square_meets(X0, Y0, X1, Y1)
    else:
        cells = shape.contains(X0 + grid.h / 2, Y0 + grid.h / 2)
    cells = np.asarray(cells, bool)
    if not cells.any():
        raise ValueError("degenerate rasterization: no cells selected")
    su, sv = _slit_faces(shape, grid, cells)
    return DomainMask(grid, cells, su, sv)


def _slit_faces(shape, grid, cells):
    su = np.zeros(grid.shape_u, bool)
    sv = np.zeros(grid.shape_v, bool)
    for s in _iter_slits(shape):
        (xa, ya), (xb, yb) = s.start, s.end
        h = grid.h
        x0, y0 = grid.origin
        if s.horizontal:
            j = (ya - y0) / h
            if not math.isclose(j, round(j), abs_tol=1e-9):
                raise ValueError("slit must lie on a grid line")
            xc = grid.axes("v")[0]
            lo, hi = min(xa, xb), max(xa, xb)
            sel = (xc > lo) & (xc < hi)
            sv[sel, int(round(j))] = True
        else:
            i = (xa - x0) / h
            if not math.isclose(i, round(i), abs_tol=1e-9):
                raise ValueError("slit must lie on a grid line")
            yc = grid.axes("u")[1]
            lo, hi = min(ya, yb), max(ya, yb)
            sel = (yc > lo) & (yc < hi)
            su[int(round(i)), sel] = True
    su &= interior_u(cells)
    sv &= interior_v(cells)
    return su, sv


def _iter_slits(shape):
    if isinstance(shape, SlitSquare):
        if shape.half_thickness == 0:
            yield shape
    elif isinstance(shape, Union):
        for p in shape.parts:
            yield from _iter_slits(p)
    elif isinstance(shape, Difference):
        yield from _iter_slits(shape.base)


# Morphology --------------------------------------------------------------------


def _square(k):
    return np.ones((2 * k + 1, 2 * k + 1), bool)


def erode(mask: DomainMask, k: int) -> DomainMask:
    """Keep cells whose Chebyshev k-neighbourhood lies in the mask (outside the grid counts as complement)."""
    if k < 0:
        raise ValueError("erosion radius must be >= 0")
    if k == 0:
        return mask
    cells = ndimage.binary_erosion(mask.cells, structure=_square(k), border_value=0)
    su = mask.slit_u & interior_u(cells)
    sv = mask.slit_v & interior_v(cells)
    return DomainMask(mask.grid, cells, su, sv)


def dilate(mask: DomainMask, k: int) -> DomainMask:
    """All cells within Chebyshev distance k of the mask; slits are dropped."""
    if k < 0:
        raise ValueError("dilation radius must be >= 0")
    c = mask.cells
    if k > 0:
        ii, jj = np.nonzero(c)
        if ii.min() < k or jj.min() < k or ii.max() + k >= c.shape[0] or jj.max() + k >= c.shape[1]:
            raise ValueError("grid too small for dilation")
        c = ndimage.binary_dilation(c, structure=_square(k))
    return DomainMask(mask.grid, c)


def components(mask: DomainMask, blocking_slits: bool = True):
    """Label face-connected cell components; returns ``(count, labels)``.

    ``labels`` is an int array over cells, -1 outside the mask. Slit faces
    block adjacency when ``blocking_slits`` is set (the weak-mode view).
    """
    mode = BcMode.WEAK if blocking_slits else BcMode.PSEUDO
    c = mask.cells
    idx = -np.ones(c.shape, int)
    idx[c] = np.arange(c.sum())
    au = mask.active_u(mode)[1:-1, :]
    av = mask.active_v(mode)[:, 1:-1]
    rows = np.concatenate([idx[:-1, :][au], idx[:, :-1][av]])
    cols = np.concatenate([idx[1:, :][au], idx[:, 1:][av]])
    n = int(c.sum())
    if n == 0:
        return 0, idx
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    count, lab = connected_components(graph, directed=False)
    labels = -np.ones(c.shape, int)
    labels[c] = lab
    return int(count), labels


# Domain sequences --------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """Recipe for a monotone domain sequence on one grid.

    kind: ``constant`` (``levels`` copies of the shape), ``erosion`` / ``dilation``
    (morphological offsets of the rasterized shape, limit = the shape itself), or
    ``slit`` (a zero-thickness ``SlitSquare`` whose segment is thickened to
    ``offsets[n]`` cells; a trailing 0 reaches the true slit).
    """

    kind: str
    shape: object
    offsets: tuple = ()
    levels: int = 3
    direction: Direction = Direction.INCREASING
    policy: Policy = Policy.CENTER


@dataclass(frozen=True, eq=False)
class DomainSequence:
    direction: Direction
    masks: tuple
    limit: DomainMask

    def __post_init__(self):
        object.__setattr__(self, "masks", tuple(self.masks))
        check_sequence(self)

    def __len__(self):
        return len(self.masks)


def check_sequence(seq: DomainSequence) -> None:
    grid = seq.limit.grid
    if any(m.grid != grid for m in seq.masks):
        raise ValueError("sequence not monotone: masks must share one grid")
    ms = list(seq.masks) + [seq.limit]
    for a, b in zip(ms[:-1], ms[1:]):
        small, big = (a, b) if seq.direction is Direction.INCREASING else (b, a)
        if not small.issubset(big):
            raise ValueError("sequence not monotone")
    if seq.direction is Direction.INCREASING:
        lim = seq.limit
        for m in seq.masks:
            shared_u = interior_u(m.cells)
            shared_v = interior_v(m.cells)
            if np.any(lim.slit_u & shared_u & ~m.slit_u) or np.any(lim.slit_v & shared_v & ~m.slit_v):
                raise ValueError("sequence not monotone: level drops a slit of the limit")


def slit_band_mask(shape: SlitSquare, grid: Grid, k: int) -> DomainMask:
    """The slit square with its segment thickened to ``k`` cell rows (k=0: true slit)."""
    base = rasterize(shape, grid, Policy.CENTER)
    if k == 0:
        return base
    h = grid.h
    x0, y0 = grid.origin
    (xa, ya), (xb, yb) = shape.start, shape.end
    cells = base.cells.copy()
    lo, hi = -math.ceil(k / 2), k // 2
    if shape.horizontal:
        j0 = int(round((ya - y0) / h))
        xc = grid.axes("cell")[0]
        sel = (xc > min(xa, xb)) & (xc < max(xa, xb))
        rows = slice(max(j0 + lo, 0), min(j0 + hi, grid.ny))
        cells[np.ix_(sel, np.arange(grid.ny)[rows])] = False
    else:
        i0 = int(round((xa - x0) / h))
        yc = grid.axes("cell")[1]
        sel = (yc > min(ya, yb)) & (yc < max(ya, yb))
        cols = slice(max(i0 + lo, 0), min(i0 + hi, grid.nx))
        cells[np.ix_(np.arange(grid.nx)[cols], sel)] = False
    return DomainMask(grid, cells, base.slit_u & interior_u(cells), base.slit_v & interior_v(cells))


def make_sequence(family: Family, grid: Grid, levels: int | None = None) -> DomainSequence:
    kind = family.kind
    if kind == "slit":
        if not isinstance(family.shape, SlitSquare) or family.shape.half_thickness != 0:
            raise ValueError("slit family needs a zero-thickness SlitSquare")
        ks = tuple(family.offsets)
        if any(b >= a for a, b in zip(ks[:-1], ks[1:])):
            raise ValueError("sequence not monotone: slit thickness must strictly decrease")
        masks = [slit_band_mask(family.shape, grid, k) for k in ks]
        limit = slit_band_mask(family.shape, grid, 0)
        return DomainSequence(Direction.INCREASING, masks, limit)
    base = rasterize(family.shape, grid, family.policy)
    if kind == "constant":
        n = levels if levels is not None else family.levels
        masks = [base.without_slits() if family.direction is Direction.DECREASING else base] * n
        return DomainSequence(family.direction, masks, base)
    if kind == "erosion":
        return DomainSequence(Direction.INCREASING, [erode(base, k) for k in family.offsets], base)
    if kind == "dilation":
        return DomainSequence(Direction.DECREASING, [dilate(base, k) for k in family.offsets], base)
    raise ValueError(f"unknown family kind {kind!r}")
