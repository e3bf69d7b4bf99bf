"""Orthogonal decompositions of discrete L2 vector fields on a masked MAC grid.

Weak mode projects onto fields with zero flux through walls and slits (the
Leray projection); pseudo mode ignores slits and projects onto the larger
space of fields that are divergence free across them.

Values a field carries on inactive faces are not part of the mode's L2 space:
``project`` discards them, and the returned parts reconstruct the restricted
input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import CellField, MacField, div_h, grad_h, inner, restrict
from .geometry import BcMode, DomainMask
from .operators import MacDofs, divergence
from .solver import SolveStats, Symmetry, cg, from_matrix

# The divergence defect of the solenoidal part equals the Poisson residual, and
# ||h div_h|| can reach 2 sqrt(2); a residual of 1e-12 keeps the defect well
# below 1e-10 ||f||.
PROJECTION_TOL = 1e-12

__all__ = ["BcMode", "Decomposition", "project", "is_in_solenoidal", "subspace_gap", "poisson_system"]


@dataclass(eq=False)
class Decomposition:
    solenoidal: MacField
    gradient: MacField
    potential: CellField
    mode: BcMode
    stats: SolveStats | None = None


def poisson_system(dofs: MacDofs):
    """Neumann pressure Poisson ``D D^T`` on mask cells, per-component constants as nullspace."""
    D = divergence(dofs)
    return from_matrix((D @ D.T).tocsr(), Symmetry.SPD, dofs.pressure_components), D


def project(f: MacField, mask: DomainMask, mode: BcMode, tol=PROJECTION_TOL, maxit=None) -> Decomposition:
    """Split ``f`` into a solenoidal part and a discrete gradient.

    Solves ``div_h grad_h phi = div_h f`` on the mask cells and returns
    ``solenoidal = f - grad_h phi``.
    """
    if mask.n_cells == 0:
        raise ValueError("cannot project on an empty mask")
    dofs = MacDofs(mask, mode)
    system, D = poisson_system(dofs)
    fx = dofs.gather(f)
    # grad_h = -D^T on active faces, so div grad phi = -D D^T phi
    rhs = -(D @ fx)
    phi, stats = cg(system, rhs, tol=tol, maxit=maxit)
    potential = dofs.scatter_p(phi)
    gradient = grad_h(potential, mask, mode)
    solenoidal = restrict(f, mask, mode) - gradient
    return Decomposition(solenoidal, gradient, potential, mode, stats)


@dataclass(frozen=True)
class SolenoidalCheck:
    ok: bool
    div_defect: float
    wall_flux: float
    slit_flux: float
    distance: float | None = None


def is_in_solenoidal(f: MacField, mask: DomainMask, mode: BcMode, rtol=1e-10, distance=True) -> SolenoidalCheck:
    """Membership test with defect norms (discrete L2).

    ``div_defect``: ``h * div_h f`` on mask cells, i.e. the net flux per cell
    divided by the cell side, which has the units of ``f``. ``wall_flux``: values on faces that are
    not interior to the mask. ``slit_flux``: values on slit faces, counted only
    in weak mode. ``distance``: ``||f - P f||`` with ``P`` the mode's orthogonal
    projection (one Poisson solve; skipped when ``distance=False``).
    """
    h2 = f.grid.h**2
    d = f.grid.h * div_h(f).values[mask.cells]
    div_defect = float(np.sqrt(h2 * np.dot(d, d)))
    wall_u = ~(mask.active_u(BcMode.PSEUDO))
    wall_v = ~(mask.active_v(BcMode.PSEUDO))
    wall = float(np.sqrt(h2 * (np.sum(f.u[wall_u] ** 2) + np.sum(f.v[wall_v] ** 2))))
    slit = 0.0
    if mode is BcMode.WEAK:
        slit = float(np.sqrt(h2 * (np.sum(f.u[mask.slit_u] ** 2) + np.sum(f.v[mask.slit_v] ** 2))))
    scale = rtol * max(f.norm(), np.finfo(float).tiny)
    ok = div_defect <= scale and wall <= scale and slit <= scale
    dist = None
    if distance and mask.n_cells:
        dist = (f - project(f, mask, mode).solenoidal).norm()
    return SolenoidalCheck(bool(ok), div_defect, wall, slit, dist)


def subspace_gap(mask: DomainMask, samples: int = 8, seed: int = 0, probes=(), tol=PROJECTION_TOL) -> float:
    """max ||P_weak g - P_pseudo g|| over random unit fields g (plus optional ``probes``).

    Zero on slit-free masks, where the two projections are the same operator.
    """
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(samples):
        g = MacField(mask.grid, rng.standard_normal(mask.grid.shape_u), rng.standard_normal(mask.grid.shape_v))
        fields.append(restrict(g, mask, BcMode.PSEUDO))
    fields.extend(restrict(p, mask, BcMode.PSEUDO) for p in probes)
    gap = 0.0
    for g in fields:
        ng = g.norm()
        if ng == 0:
            continue
        g = g * (1.0 / ng)
        pw = project(g, mask, BcMode.WEAK, tol=tol).solenoidal
        pp = project(g, mask, BcMode.PSEUDO, tol=tol).solenoidal
        gap = max(gap, (pw - pp).norm())
    return gap


def orthogonality_defect(dec: Decomposition) -> float:
    return abs(inner(dec.solenoidal, dec.gradient))
