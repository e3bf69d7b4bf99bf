"""Cell, vertex and staggered (MAC) fields with the discrete calculus.

Fields store every DOF of the grid; DOFs outside a mask's active set are
explicit zeros, so restriction and extension by zero act in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BcMode, DomainMask, Grid


class _Field:
    __slots__ = ()

    def _arrays(self):
        raise NotImplementedError

    def _new(self, arrays):
        raise NotImplementedError

    def copy(self):
        return self._new([a.copy() for a in self._arrays()])

    def __add__(self, other):
        _check_compatible(self, other)
        return self._new([a + b for a, b in zip(self._arrays(), other._arrays())])

    def __sub__(self, other):
        _check_compatible(self, other)
        return self._new([a - b for a, b in zip(self._arrays(), other._arrays())])

    def __mul__(self, s):
        return self._new([s * a for a in self._arrays()])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays()])

    def norm(self) -> float:
        return float(np.sqrt(inner(self, self)))

    def max_abs(self) -> float:
        return float(max(np.abs(a).max(initial=0.0) for a in self._arrays()))


@dataclass(eq=False)
class CellField(_Field):
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape != self.grid.shape_cells:
            raise ValueError(f"cell field shape {self.values.shape} != {self.grid.shape_cells}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape_cells))

    def _arrays(self):
        return (self.values,)

    def _new(self, arrays):
        return CellField(self.grid, arrays[0])


@dataclass(eq=False)
class VertexField(_Field):
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape != self.grid.shape_vertices:
            raise ValueError(f"vertex field shape {self.values.shape} != {self.grid.shape_vertices}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape_vertices))

    def _arrays(self):
        return (self.values,)

    def _new(self, arrays):
        return VertexField(self.grid, arrays[0])


@dataclass(eq=False)
class MacField(_Field):
    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, float)
        self.v = np.asarray(self.v, float)
        if self.u.shape != self.grid.shape_u or self.v.shape != self.grid.shape_v:
            raise ValueError("MAC field component shapes do not match the grid")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape_u), np.zeros(grid.shape_v))

    @classmethod
    def from_function(cls, grid, fu, fv):
        """Sample ``fu(x, y)`` on vertical faces and ``fv(x, y)`` on horizontal faces."""
        xu, yu = grid.mesh("u")
        xv, yv = grid.mesh("v")
        return cls(grid, np.broadcast_to(fu(xu, yu), grid.shape_u), np.broadcast_to(fv(xv, yv), grid.shape_v))

    def _arrays(self):
        return (self.u, self.v)

    def _new(self, arrays):
        return MacField(self.grid, arrays[0], arrays[1])


def _check_compatible(a, b):
    if type(a) is not type(b):
        raise TypeError(f"field kind mismatch: {type(a).__name__} vs {type(b).__name__}")
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def inner(a, b) -> float:
    """Discrete L2 product, h^2 times the sum of DOF products."""
    _check_compatible(a, b)
    s = sum(float(np.dot(x.ravel(), y.ravel())) for x, y in zip(a._arrays(), b._arrays()))
    return a.grid.h**2 * s


def norm(a) -> float:
    return a.norm()


# Discrete calculus ---------------------------------------------------------------


def div_h(w: MacField) -> CellField:
    h = w.grid.h
    return CellField(w.grid, (w.u[1:, :] - w.u[:-1, :]) / h + (w.v[:, 1:] - w.v[:, :-1]) / h)


def grad_h(p: CellField, mask: DomainMask, mode: BcMode) -> MacField:
    """Pressure gradient on active faces, zero elsewhere (discrete homogeneous Neumann)."""
    h = p.grid.h
    g = MacField.zeros(p.grid)
    g.u[1:-1, :] = (p.values[1:, :] - p.values[:-1, :]) / h
    g.v[:, 1:-1] = (p.values[:, 1:] - p.values[:, :-1]) / h
    g.u[~mask.active_u(mode)] = 0.0
    g.v[~mask.active_v(mode)] = 0.0
    return g


def curl_h(psi: VertexField) -> MacField:
    h = psi.grid.h
    s = psi.values
    return MacField(psi.grid, (s[:, 1:] - s[:, :-1]) / h, -(s[1:, :] - s[:-1, :]) / h)


# Restriction / extension ---------------------------------------------------------


def active_sets(field, mask: DomainMask, mode: BcMode):
    if isinstance(field, MacField):
        return (mask.active_u(mode), mask.active_v(mode))
    if isinstance(field, CellField):
        return (mask.cells,)
    if isinstance(field, VertexField):
        return (mask.active_vertices(mode),)
    raise TypeError(f"not a field: {type(field).__name__}")


def restrict(w, mask: DomainMask, mode: BcMode = BcMode.WEAK):
    if w.grid != mask.grid:
        raise ValueError("field and mask live on different grids")
    return w._new([np.where(a, x, 0.0) for x, a in zip(w._arrays(), active_sets(w, mask, mode))])


def extend_by_zero(w, mask: DomainMask, mode: BcMode = BcMode.WEAK):
    """Extension by zero of a field living on ``mask`` to the whole grid.

    Inactive DOFs are stored as zeros already, so this is the restriction
    viewed from the other side: identity on active DOFs, zero elsewhere.
    """
    return restrict(w, mask, mode)


# Grid-to-grid transfer ---------------------------------------------------------


def _interp_axis(coarse_nodes, fine_nodes, h):
    n = coarse_nodes.size
    if n == 1:
        return np.zeros(fine_nodes.size, int), np.zeros(fine_nodes.size)
    t = (fine_nodes - coarse_nodes[0]) / h
    i0 = np.clip(np.floor(t).astype(int), 0, n - 2)
    return i0, t - i0


def _interp2(values, coarse_axes, fine_axes, h):
    i0, wx = _interp_axis(coarse_axes[0], fine_axes[0], h)
    j0, wy = _interp_axis(coarse_axes[1], fine_axes[1], h)
    if values.shape[0] == 1:
        i1 = i0
    else:
        i1 = i0 + 1
    j1 = j0 + 1 if values.shape[1] > 1 else j0
    wx, wy = wx[:, None], wy[None, :]
    a = values[np.ix_(i0, j0)]
    b = values[np.ix_(i1, j0)]
    c = values[np.ix_(i0, j1)]
    d = values[np.ix_(i1, j1)]
    return (1 - wx) * (1 - wy) * a + wx * (1 - wy) * b + (1 - wx) * wy * c + wx * wy * d


def prolong(w, fine: Grid):
    """Bilinear interpolation to the factor-2 refined grid, staggering respected.

    Nodes beyond the outermost coarse node line are linearly extrapolated, so
    affine fields are reproduced exactly.
    """
    coarse = w.grid
    if not fine.is_refinement_of(coarse):
        raise ValueError("prolong needs a factor-2 refinement with aligned origin")
    h = coarse.h
    if isinstance(w, MacField):
        return MacField(
            fine,
            _interp2(w.u, coarse.axes("u"), fine.axes("u"), h),
            _interp2(w.v, coarse.axes("v"), fine.axes("v"), h),
        )
    kind = "cell" if isinstance(w, CellField) else "vertex"
    return type(w)(fine, _interp2(w.values, coarse.axes(kind), fine.axes(kind), h))
