"""Resolvents ``(I + A)^{-1}`` of the Dirichlet Laplacians and Stokes operators on a mask.

Weak mode imposes the Dirichlet condition on slits as well as on the outer
boundary; pseudo mode does not see slits. The Stokes resolvent is computed
twice, independently: as a saddle-point system solved by MINRES, and as an
SPD stream-function system ``C^T (I + K) C psi = C^T f`` solved by CG.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import CellField, MacField, VertexField
from .geometry import BcMode, DomainMask
from .leray import PROJECTION_TOL, project
from .operators import (
    MacDofs,
    StreamDofs,
    VertexDofs,
    curl_matrix,
    divergence,
    scalar_laplacian,
    stokes_saddle,
    vector_laplacian,
)
from .solver import DEFAULT_TOL, SolveStats, SparseSystem, Symmetry, cg, from_matrix, jacobi, minres


@dataclass(eq=False)
class LaplaceProblem:
    mask: DomainMask
    mode: BcMode
    rhs: VertexField | MacField
    shift: float = 1.0


@dataclass(eq=False)
class StokesProblem:
    mask: DomainMask
    mode: BcMode
    rhs: MacField
    project_rhs: bool = False
    shift: float = 1.0


@dataclass(eq=False)
class StokesSolution:
    velocity: MacField
    pressure: CellField | None
    stats: SolveStats
    streamfunction: VertexField | None = None


# Systems -------------------------------------------------------------------------


def laplace_system(mask: DomainMask, mode: BcMode, vector: bool = False, shift: float = 1.0):
    """``shift I - Delta_h`` on the active vertices (scalar) or active faces (vector)."""
    dofs = MacDofs(mask, mode) if vector else VertexDofs(mask, mode)
    K = vector_laplacian(dofs) if vector else scalar_laplacian(dofs)
    n = K.shape[0]
    return from_matrix(shift * sp.identity(n, format="csr") + K, Symmetry.SPD), dofs


def stokes_system(mask: DomainMask, mode: BcMode, shift: float = 1.0):
    dofs = MacDofs(mask, mode)
    A = stokes_saddle(dofs, shift)
    pad = np.zeros(dofs.n_vel)
    null = [np.concatenate([pad, z]) for z in dofs.pressure_components]
    return from_matrix(A, Symmetry.INDEFINITE, null), dofs


def streamfn_system(mask: DomainMask, mode: BcMode, shift: float = 1.0):
    mdofs = MacDofs(mask, mode)
    sdofs = StreamDofs(mask, mode)
    C = curl_matrix(sdofs, mdofs)
    A = shift * sp.identity(mdofs.n_vel, format="csr") + vector_laplacian(mdofs)
    return from_matrix((C.T @ A @ C).tocsr(), Symmetry.SPD), C, mdofs, sdofs


# Laplace -------------------------------------------------------------------------


def laplace_resolvent(problem: LaplaceProblem, tol=DEFAULT_TOL, maxit=None, method="cg", precond=None):
    """Solve ``(I - Delta_h) x = rhs`` with zero Dirichlet data; returns ``(field, stats)``.

    ``method="direct"`` uses a sparse LU factorization instead of CG.
    """
    vector = isinstance(problem.rhs, MacField)
    system, dofs = laplace_system(problem.mask, problem.mode, vector, problem.shift)
    if system.n == 0:
        raise ValueError("no interior DOFs")
    b = dofs.gather(problem.rhs)
    if method == "direct":
        t0 = time.perf_counter()
        x = spla.spsolve(system.matrix.tocsc(), b)
        nb = np.linalg.norm(b)
        res = np.linalg.norm(b - system.matvec(x)) / nb if nb else 0.0
        stats = SolveStats(1, float(res), time.perf_counter() - t0)
    else:
        x, stats = cg(system, b, tol=tol, maxit=maxit, precond=_precond(system, precond))
    return dofs.scatter(x), stats


def _precond(system: SparseSystem, kind):
    if kind is None or kind == "none":
        return None
    if kind == "jacobi":
        return jacobi(system)
    if callable(kind):
        return kind
    raise ValueError(f"unknown preconditioner {kind!r}")


# Stokes --------------------------------------------------------------------------


def _saddle_precond(system: SparseSystem, dofs: MacDofs, kind):
    if kind is None or kind == "none":
        return None
    nv = dofs.n_vel
    A = system.matrix[:nv, :nv]
    D = system.matrix[nv:, :nv]
    if kind == "jacobi":
        dinv = 1.0 / A.diagonal()
        s = np.asarray((D.multiply(D)) @ dinv).ravel()
        s[s == 0] = 1.0
        sinv = 1.0 / s
        return lambda r: np.concatenate([dinv * r[:nv], sinv * r[nv:]])
    if kind == "block":
        # exact velocity block, pressure mass (identity) for the Schur complement
        lu = spla.splu(A.tocsc())
        return lambda r: np.concatenate([lu.solve(r[:nv]), r[nv:]])
    raise ValueError(f"unknown preconditioner {kind!r}")


def stokes_resolvent(problem: StokesProblem, tol=DEFAULT_TOL, maxit=None, precond=None) -> StokesSolution:
    """Saddle-point Stokes resolvent ``u - Delta_h u + grad_h p = f, div_h u = 0``.

    ``precond``: ``None`` (plain MINRES), ``"jacobi"`` or ``"block"`` (exact
    velocity block, identity on pressure).
    """
    mask, mode = problem.mask, problem.mode
    system, dofs = stokes_system(mask, mode, problem.shift)
    if dofs.n_vel == 0:
        raise ValueError("no interior DOFs")
    f = problem.rhs
    if problem.project_rhs:
        f = project(f, mask, mode, tol=min(tol, PROJECTION_TOL)).solenoidal
    b = np.concatenate([dofs.gather(f), np.zeros(dofs.n_p)])
    x, stats = minres(system, b, tol=tol, maxit=maxit, precond=_saddle_precond(system, dofs, precond))
    nv = dofs.n_vel
    velocity = dofs.scatter(x[:nv])
    # grad_h = -D^T, so the second block of x is p itself
    pressure = dofs.scatter_p(x[nv:])
    return StokesSolution(velocity, pressure, stats)


def stokes_resolvent_streamfn(problem: StokesProblem, tol=DEFAULT_TOL, maxit=None, precond=None) -> StokesSolution:
    """Stream-function route: velocity = C psi with psi admissible, SPD system by CG."""
    mask, mode = problem.mask, problem.mode
    system, C, mdofs, sdofs = streamfn_system(mask, mode, problem.shift)
    if sdofs.n == 0:
        raise ValueError("no interior DOFs")
    b = C.T @ mdofs.gather(problem.rhs)
    psi, stats = cg(system, b, tol=tol, maxit=maxit, precond=_precond(system, precond))
    velocity = mdofs.scatter(C @ psi)
    return StokesSolution(velocity, None, stats, sdofs.scatter(psi))


def pseudo_equals_slitfree(mask: DomainMask, mode: BcMode = BcMode.PSEUDO) -> bool:
    """True iff the assembled Stokes and Laplace systems in ``mode`` match the slit-free ones exactly."""
    bare = mask.without_slits()
    pairs = [
        (stokes_system(mask, mode)[0], stokes_system(bare, mode)[0]),
        (laplace_system(mask, mode)[0], laplace_system(bare, mode)[0]),
        (laplace_system(mask, mode, vector=True)[0], laplace_system(bare, mode, vector=True)[0]),
    ]
    for a, b in pairs:
        A, B = a.matrix, b.matrix
        if A.shape != B.shape:
            return False
        if not (
            np.array_equal(A.indptr, B.indptr) and np.array_equal(A.indices, B.indices) and np.array_equal(A.data, B.data)
        ):
            return False
    return True
