"""Symmetric sparse systems and Krylov solvers (CG, MINRES) with nullspace deflation.

Matrices are stored as scipy CSR; the iterations themselves are written out
here so that stopping rules, deflation and the reported residual are under
our control.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

DEFAULT_TOL = 1e-10
SYMMETRY_TOL = 1e-12


class Symmetry(enum.Enum):
    SPD = "spd"
    INDEFINITE = "indefinite"


class AssemblyError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Raised when ``maxit`` is exhausted; carries the best iterate and its stats."""

    def __init__(self, message, x, stats):
        super().__init__(message)
        self.x = x
        self.stats = stats


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float
    seconds: float


@dataclass(frozen=True, eq=False)
class SparseSystem:
    matrix: sp.csr_matrix
    symmetry: Symmetry = Symmetry.SPD
    nullspace: tuple = ()

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, x):
        return self.matrix @ x

    def toarray(self):
        return self.matrix.toarray()


def assemble(rows, cols, vals, n, symmetry=Symmetry.SPD, nullspace=(), check=True) -> SparseSystem:
    """Build a CSR system from COO triplets (duplicates are summed) and check symmetry."""
    A = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return from_matrix(A, symmetry, nullspace, check)


def from_matrix(A, symmetry=Symmetry.SPD, nullspace=(), check=True) -> SparseSystem:
    A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise AssemblyError("assembly asymmetry: matrix is not square")
    if check and A.nnz:
        scale = abs(A).max()
        if abs(A - A.T).max() > SYMMETRY_TOL * scale:
            raise AssemblyError("assembly asymmetry")
    basis = _orthonormal(nullspace, A.shape[0])
    if check and basis and A.nnz:
        scale = abs(A).max() * np.sqrt(A.shape[0])
        for z in basis:
            if np.linalg.norm(A @ z) > 1e-10 * scale:
                raise AssemblyError("nullspace vector is not in the kernel")
    return SparseSystem(A, symmetry, tuple(basis))


def _orthonormal(vectors, n):
    out = []
    for z in vectors:
        z = np.asarray(z, float).copy()
        if z.shape != (n,):
            raise AssemblyError("nullspace vector has the wrong length")
        for q in out:
            z -= np.dot(q, z) * q
        nz = np.linalg.norm(z)
        if nz > 1e-14:
            out.append(z / nz)
    return out


def deflate(b, nullspace):
    """Remove the components of ``b`` along an orthonormal basis (idempotent)."""
    b = np.array(b, float, copy=True)
    for z in nullspace:
        b -= np.dot(z, b) * z
    return b


# Preconditioners ---------------------------------------------------------------


def jacobi(system: SparseSystem, fallback: float = 1.0):
    """Inverse absolute diagonal; zero diagonal entries use ``fallback``."""
    d = np.abs(system.matrix.diagonal())
    d[d == 0] = fallback
    inv = 1.0 / d
    return lambda r: inv * r


# Krylov methods ----------------------------------------------------------------


def _finish(system, b, x, it, t0):
    x = deflate(x, system.nullspace)
    nb = np.linalg.norm(b)
    res = np.linalg.norm(b - system.matvec(x)) / nb if nb > 0 else 0.0
    return x, SolveStats(it, float(res), time.perf_counter() - t0)


def cg(system: SparseSystem, b, tol=DEFAULT_TOL, maxit=None, precond=None, x0=None, monitor=None):
    """Preconditioned conjugate gradients for an SPD (or PSD + deflated) system.

    ``precond`` is a callable applying an SPD approximation of the inverse.
    ``monitor(k, x)`` is called after each iteration when given.
    """
    t0 = time.perf_counter()
    n = system.n
    maxit = 50 * n if maxit is None else maxit
    b = deflate(b, system.nullspace)
    nb = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else deflate(x0, system.nullspace)
    if nb == 0:
        return _finish(system, b, np.zeros(n), 0, t0)
    r = b - system.matvec(x)
    M = precond or (lambda v: v)
    z = M(r)
    p = z.copy()
    rz = np.dot(r, z)
    target = tol * nb
    it = 0
    while it < maxit:
        if np.linalg.norm(r) <= target:
            # guard against drift of the recursive residual
            true = np.linalg.norm(b - system.matvec(x))
            if true <= target:
                break
            r = b - system.matvec(x)
            z = M(r)
            p = z.copy()
            rz = np.dot(r, z)
            target *= 0.5
        Ap = system.matvec(p)
        pAp = np.dot(p, Ap)
        if pAp <= 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = M(r)
        rz_new = np.dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
        if monitor is not None:
            monitor(it, x)
    x, stats = _finish(system, b, x, it, t0)
    if stats.residual > tol:
        raise ConvergenceError(f"cg did not converge in {it} iterations (residual {stats.residual:.3e})", x, stats)
    return x, stats


def minres(system: SparseSystem, b, tol=DEFAULT_TOL, maxit=None, precond=None, x0=None):
    """Preconditioned MINRES (Paige-Saunders) for symmetric, possibly indefinite systems.

    The recurrence estimate drives the loop; convergence is only accepted after
    the true residual ``||b - A x|| / ||b||`` is recomputed and found below ``tol``.
    """
    t0 = time.perf_counter()
    n = system.n
    maxit = 50 * n if maxit is None else maxit
    b = deflate(b, system.nullspace)
    nb = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else deflate(x0, system.nullspace)
    if nb == 0:
        return _finish(system, b, np.zeros(n), 0, t0)
    M = precond or (lambda v: v)
    ns = system.nullspace
    total = 0
    target = tol
    while True:
        x, it, done = _minres_cycle(system, b, x, M, ns, target * nb, maxit - total)
        total += it
        true = np.linalg.norm(b - system.matvec(x)) / nb
        if true <= tol or total >= maxit or not done:
            break
        # the preconditioned estimate was optimistic: restart from x, aim lower
        target = max(target * 0.1, 1e-16)
    x, stats = _finish(system, b, x, total, t0)
    if stats.residual > tol:
        raise ConvergenceError(f"minres did not converge in {total} iterations (residual {stats.residual:.3e})", x, stats)
    return x, stats


def _minres_cycle(system, b, x, M, ns, abstol, maxit):
    r1 = b - system.matvec(x)
    y = deflate(M(r1), ns)
    beta1 = np.dot(r1, y)
    if beta1 < 0:
        raise ValueError("preconditioner is not positive definite")
    if beta1 == 0:
        return x, 0, True
    beta1 = np.sqrt(beta1)
    oldb, beta = 0.0, beta1
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros_like(x)
    w2 = np.zeros_like(x)
    r2 = r1.copy()
    # M-norm of b relative to 2-norm, used to translate the estimate
    ratio = np.linalg.norm(r1) / beta1
    it = 0
    done = False
    while it < maxit:
        it += 1
        s = 1.0 / beta
        v = s * y
        y = system.matvec(v)
        if it >= 2:
            y = y - (beta / oldb) * r1
        alfa = np.dot(v, y)
        y = y - (alfa / beta) * r2
        r1, r2 = r2, y
        y = deflate(M(r2), ns)
        oldb = beta
        beta = np.dot(r2, y)
        if beta < 0:
            raise ValueError("preconditioner is not positive definite")
        beta = np.sqrt(beta)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), np.finfo(float).eps)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        if phibar * ratio <= abstol or beta == 0:
            done = True
            break
    return x, it, done
