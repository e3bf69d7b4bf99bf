"""Assembly of the discrete operators on a mask's active DOFs.

All matrices act on plain coefficient vectors (no h^2 weights). Because every
DOF carries the same weight h^2 in the discrete L2 product, symmetry in the
Euclidean sense is the same as self-adjointness in L2.

Tangential no-slip at walls and (weak mode) slits uses the reflected ghost
``ghost = -interior``: the link contributes ``2/h^2`` to the diagonal and no
coupling. A link whose far node is a zero-valued face on a wall line (a
wall-normal face, or a weak-mode slit face) contributes ``1/h^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .fields import CellField, MacField, VertexField
from .geometry import BcMode, DomainMask


def _ids(active):
    ids = -np.ones(active.shape, int)
    ids[active] = np.arange(int(active.sum()))
    return ids


@dataclass(frozen=True, eq=False)
class MacDofs:
    """Active face and cell numbering for one (mask, mode) pair.

    Velocity vector layout: active u faces (C order over ``[i, j]``), then
    active v faces. Pressure layout: mask cells in C order.
    """

    mask: DomainMask
    mode: BcMode

    @cached_property
    def active_u(self):
        return self.mask.active_u(self.mode)

    @cached_property
    def active_v(self):
        return self.mask.active_v(self.mode)

    @cached_property
    def uid(self):
        return _ids(self.active_u)

    @cached_property
    def vid(self):
        v = _ids(self.active_v)
        v[v >= 0] += self.n_u
        return v

    @cached_property
    def pid(self):
        return _ids(self.mask.cells)

    @property
    def n_u(self):
        return int(self.active_u.sum())

    @property
    def n_vel(self):
        return self.n_u + int(self.active_v.sum())

    @property
    def n_p(self):
        return self.mask.n_cells

    def gather(self, w: MacField) -> np.ndarray:
        return np.concatenate([w.u[self.active_u], w.v[self.active_v]])

    def scatter(self, x) -> MacField:
        w = MacField.zeros(self.mask.grid)
        w.u[self.active_u] = x[: self.n_u]
        w.v[self.active_v] = x[self.n_u : self.n_vel]
        return w

    def gather_p(self, p: CellField) -> np.ndarray:
        return p.values[self.mask.cells]

    def scatter_p(self, x) -> CellField:
        p = CellField.zeros(self.mask.grid)
        p.values[self.mask.cells] = x
        return p

    @cached_property
    def pressure_components(self):
        """Orthonormal per-component constants over the pressure unknowns."""
        from .geometry import components

        count, labels = components(self.mask, blocking_slits=self.mode is BcMode.WEAK)
        lab = labels[self.mask.cells]
        basis = []
        for c in range(count):
            z = (lab == c).astype(float)
            basis.append(z / np.linalg.norm(z))
        return tuple(basis)


# Link-based Laplacian stiffness --------------------------------------------------


def _link_triplets(ids, dirichlet, cut, axis):
    """Triplets of ``-Delta`` (times h^2) from the links of one node lattice along ``axis``.

    ``ids``: DOF number per node (-1 inactive). ``dirichlet``: inactive nodes whose
    value is a zero lying on a wall line (contribute 1); other inactive nodes and
    off-grid nodes are ghosts (contribute 2). ``cut``: per link, the link crosses
    a slit (both active ends get 2, no coupling). Links include the two padded
    ones that leave the lattice.
    """
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    ids_p = np.pad(ids, pad, constant_values=-1)
    dir_p = np.pad(dirichlet, pad, constant_values=False)
    n = ids_p.shape[axis]
    lo = [slice(None), slice(None)]
    hi = [slice(None), slice(None)]
    lo[axis] = slice(0, n - 1)
    hi[axis] = slice(1, n)
    a, b = ids_p[tuple(lo)], ids_p[tuple(hi)]
    da, db = dir_p[tuple(lo)], dir_p[tuple(hi)]
    if cut is None:
        cut = np.zeros(a.shape, bool)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(np.full(r.size, v, float))

    both = (a >= 0) & (b >= 0) & ~cut
    add(a[both], a[both], 1.0)
    add(b[both], b[both], 1.0)
    add(a[both], b[both], -1.0)
    add(b[both], a[both], -1.0)
    for me, other, dother in ((a, b, db), (b, a, da)):
        sel_cut = (me >= 0) & cut
        add(me[sel_cut], me[sel_cut], 2.0)
        lone = (me >= 0) & (other < 0) & ~cut
        add(me[lone & dother], me[lone & dother], 1.0)
        add(me[lone & ~dother], me[lone & ~dother], 2.0)
    return rows, cols, vals


def _face_dirichlet_u(mask, mode):
    """Inactive vertical faces that carry a zero velocity on a wall line."""
    c = mask.cells
    touch = np.zeros(mask.grid.shape_u, bool)
    touch[1:, :] |= c
    touch[:-1, :] |= c
    return touch & ~mask.active_u(mode)


def _face_dirichlet_v(mask, mode):
    c = mask.cells
    touch = np.zeros(mask.grid.shape_v, bool)
    touch[:, 1:] |= c
    touch[:, :-1] |= c
    return touch & ~mask.active_v(mode)


def _vertex_cuts(mask, mode):
    """Per vertex: touches a horizontal slit face / a vertical slit face (weak mode only)."""
    shape = mask.grid.shape_vertices
    hcut = np.zeros(shape, bool)
    vcut = np.zeros(shape, bool)
    if mode is BcMode.WEAK:
        hcut[:-1, :] |= mask.slit_v
        hcut[1:, :] |= mask.slit_v
        vcut[:, :-1] |= mask.slit_u
        vcut[:, 1:] |= mask.slit_u
    return hcut, vcut


def vector_laplacian(dofs: MacDofs) -> sp.csr_matrix:
    """Componentwise ``-Delta_h`` on the active faces (scaled by 1/h^2)."""
    mask, mode = dofs.mask, dofs.mode
    h = mask.grid.h
    hcut, vcut = _vertex_cuts(mask, mode)
    trip = [[], [], []]
    # u: x-links run through cells, y-links cross the vertex row j (links j=0..ny)
    for axis, cut in ((0, None), (1, hcut)):
        r, c, v = _link_triplets(dofs.uid, _face_dirichlet_u(mask, mode), cut, axis)
        for t, part in zip(trip, (r, c, v)):
            t.extend(part)
    for axis, cut in ((0, vcut), (1, None)):
        r, c, v = _link_triplets(dofs.vid, _face_dirichlet_v(mask, mode), cut, axis)
        for t, part in zip(trip, (r, c, v)):
            t.extend(part)
    rows, cols, vals = (np.concatenate(t) if t else np.zeros(0) for t in trip)
    n = dofs.n_vel
    return sp.coo_matrix((vals / h**2, (rows, cols)), shape=(n, n)).tocsr()


def divergence(dofs: MacDofs) -> sp.csr_matrix:
    """``div_h`` from active faces to mask cells (rows: pressure unknowns)."""
    mask = dofs.mask
    h = mask.grid.h
    pid = dofs.pid
    rows, cols, vals = [], [], []
    iu, ju = np.nonzero(dofs.active_u)
    rows += [pid[iu - 1, ju], pid[iu, ju]]
    cols += [dofs.uid[iu, ju]] * 2
    vals += [np.full(iu.size, 1.0 / h), np.full(iu.size, -1.0 / h)]
    iv, jv = np.nonzero(dofs.active_v)
    rows += [pid[iv, jv - 1], pid[iv, jv]]
    cols += [dofs.vid[iv, jv]] * 2
    vals += [np.full(iv.size, 1.0 / h), np.full(iv.size, -1.0 / h)]
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dofs.n_p, dofs.n_vel)
    ).tocsr()


def stokes_saddle(dofs: MacDofs, shift: float = 1.0) -> sp.csr_matrix:
    """``[[shift I + K, -D^T], [-D, 0]]``: velocity block, then pressure block."""
    K = vector_laplacian(dofs)
    D = divergence(dofs)
    A = shift * sp.identity(dofs.n_vel, format="csr") + K
    return sp.bmat([[A, -D.T], [-D, None]], format="csr")


# Scalar Laplacian on vertices --------------------------------------------------


@dataclass(frozen=True, eq=False)
class VertexDofs:
    mask: DomainMask
    mode: BcMode

    @cached_property
    def active(self):
        return self.mask.active_vertices(self.mode)

    @cached_property
    def ids(self):
        return _ids(self.active)

    @property
    def n(self):
        return int(self.active.sum())

    def gather(self, f: VertexField):
        return f.values[self.active]

    def scatter(self, x) -> VertexField:
        out = VertexField.zeros(self.mask.grid)
        out.values[self.active] = x
        return out


def scalar_laplacian(dofs: VertexDofs) -> sp.csr_matrix:
    """Five-point ``-Delta_h`` on active vertices, zero Dirichlet values elsewhere."""
    h = dofs.mask.grid.h
    everything = np.ones(dofs.ids.shape, bool)
    trip = [[], [], []]
    for axis in (0, 1):
        r, c, v = _link_triplets(dofs.ids, everything, None, axis)
        for t, part in zip(trip, (r, c, v)):
            t.extend(part)
    rows, cols, vals = (np.concatenate(t) for t in trip)
    n = dofs.n
    return sp.coo_matrix((vals / h**2, (rows, cols)), shape=(n, n)).tocsr()


# Stream functions ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StreamDofs:
    """Admissible stream functions: constant along every inactive face.

    Vertices joined by inactive faces form one unknown; the group containing
    the outer grid boundary is pinned to zero. Interior wall components
    (islands, free-floating weak slits) keep one free constant each.
    """

    mask: DomainMask
    mode: BcMode

    @cached_property
    def _groups(self):
        g = self.mask.grid
        nvx, nvy = g.shape_vertices
        vidx = np.arange(nvx * nvy).reshape(nvx, nvy)
        iu = ~self.mask.active_u(self.mode)
        iv = ~self.mask.active_v(self.mode)
        rows = np.concatenate([vidx[:, :-1][iu], vidx[:-1, :][iv]])
        cols = np.concatenate([vidx[:, 1:][iu], vidx[1:, :][iv]])
        graph = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(vidx.size, vidx.size))
        _, lab = connected_components(graph, directed=False)
        lab = lab.reshape(nvx, nvy)
        outer = lab[0, 0]
        # renumber: outer group -> -1, others 0..m-1 in first-appearance order
        uniq, first = np.unique(lab.ravel(), return_index=True)
        order = uniq[np.argsort(first)]
        order = order[order != outer]
        remap = np.full(uniq.size, -1)
        remap[order] = np.arange(order.size)
        return remap[lab], int(order.size)

    @property
    def ids(self):
        return self._groups[0]

    @property
    def n(self):
        return self._groups[1]

    def psi_matrix(self) -> sp.csr_matrix:
        """Map from unknown group values to vertex values (outer group = 0)."""
        ids = self.ids.ravel()
        sel = ids >= 0
        rows = np.nonzero(sel)[0]
        return sp.coo_matrix((np.ones(rows.size), (rows, ids[sel])), shape=(ids.size, self.n)).tocsr()

    def scatter(self, x) -> VertexField:
        g = self.mask.grid
        return VertexField(g, (self.psi_matrix() @ x).reshape(g.shape_vertices))


def curl_matrix(sdofs: StreamDofs, mdofs: MacDofs) -> sp.csr_matrix:
    """``curl_h`` from stream unknowns to active face velocities."""
    g = sdofs.mask.grid
    h = g.h
    nvx, nvy = g.shape_vertices
    vidx = np.arange(nvx * nvy).reshape(nvx, nvy)
    rows, cols, vals = [], [], []
    iu, ju = np.nonzero(mdofs.active_u)
    # u(i,j) = (psi(i,j+1) - psi(i,j)) / h
    rows += [mdofs.uid[iu, ju]] * 2
    cols += [vidx[iu, ju + 1], vidx[iu, ju]]
    vals += [np.full(iu.size, 1.0 / h), np.full(iu.size, -1.0 / h)]
    iv, jv = np.nonzero(mdofs.active_v)
    # v(i,j) = -(psi(i+1,j) - psi(i,j)) / h
    rows += [mdofs.vid[iv, jv]] * 2
    cols += [vidx[iv + 1, jv], vidx[iv, jv]]
    vals += [np.full(iv.size, -1.0 / h), np.full(iv.size, 1.0 / h)]
    Cv = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(mdofs.n_vel, vidx.size)
    ).tocsr()
    return (Cv @ sdofs.psi_matrix()).tocsr()
