"""Domain-perturbation experiments: resolvents on a monotone sequence of masks.

Two sequence styles are supported.

fixed grid
    All masks live on one grid and the limit mask is attained or bounded
    exactly. The reference is the resolvent on the limit mask.
refined
    The shape is rasterized on grids that halve ``h`` per level (inner cells
    for increasing sequences, outer cells for decreasing ones). The reference
    is the resolvent on the shape rasterized one refinement beyond the
    ladder, and coarse solutions are prolonged to that grid before
    differencing.

In both styles a level's solution is extended by zero off its own mask and
then restricted to the reference mask, so ``e_n = ||u_n|_Omega - u_ref||``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import MacField, VertexField, prolong, restrict
from .forcing import Forcing
from .geometry import (
    BcMode,
    Direction,
    DomainMask,
    DomainSequence,
    Family,
    Grid,
    Policy,
    SlitSquare,
    make_sequence,
    rasterize,
)
from .leray import PROJECTION_TOL, project
from .resolvents import (
    LaplaceProblem,
    StokesProblem,
    laplace_resolvent,
    stokes_resolvent,
)
from .solver import DEFAULT_TOL, SolveStats

OPERATORS = ("laplace", "stokes")


@dataclass(frozen=True)
class ExperimentSpec:
    """One convergence experiment.

    Give either ``sequence`` (fixed-grid style) or ``shape`` with ``base_grid``
    and ``levels`` (refined style). ``policy`` defaults to inner rasterization
    for increasing experiments and outer rasterization for decreasing ones.
    ``modes`` lists the operator families run on each level; the limit is
    always weak for increasing and pseudo for decreasing sequences.
    """

    operator: str
    direction: Direction
    forcing: Forcing = field(default_factory=Forcing)
    sequence: DomainSequence | None = None
    shape: object = None
    base_grid: Grid | None = None
    levels: int = 4
    policy: Policy | None = None
    modes: tuple = (BcMode.WEAK, BcMode.PSEUDO)
    tol: float = DEFAULT_TOL
    maxit: int | None = None
    precond: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if (self.sequence is None) == (self.shape is None):
            raise ValueError("give exactly one of sequence (fixed grid) or shape (refined)")
        if self.sequence is not None and self.sequence.direction is not self.direction:
            raise ValueError("direction does not match the sequence nesting")
        if self.shape is not None:
            if self.base_grid is None or self.levels < 1:
                raise ValueError("refined experiments need base_grid and levels >= 1")
        if not self.modes:
            raise ValueError("at least one mode is required")

    @property
    def refined(self) -> bool:
        return self.shape is not None

    @property
    def limit_mode(self) -> BcMode:
        return BcMode.WEAK if self.direction is Direction.INCREASING else BcMode.PSEUDO

    @property
    def rasterization(self) -> Policy:
        if self.policy is not None:
            return self.policy
        return Policy.INNER if self.direction is Direction.INCREASING else Policy.OUTER


@dataclass(frozen=True)
class LevelRecord:
    n: int
    h: float
    dofs: int
    error: float
    rate: float
    iterations: int
    residual: float
    seconds: float
    mode: BcMode


@dataclass(eq=False)
class ConvergenceReport:
    operator: str
    direction: Direction
    limit_mode: BcMode
    families: dict
    reference_norm: float
    floor: float | None = None
    slack: float = 1e-9

    def records(self, mode: BcMode | None = None):
        if mode is None:
            return [r for m in self.families for r in self.families[m]]
        return list(self.families[mode])

    def errors(self, mode: BcMode) -> np.ndarray:
        return np.array([r.error for r in self.families[mode]])

    def final_error(self, mode: BcMode) -> float:
        return float(self.errors(mode)[-1])

    def monotone(self, mode: BcMode | None = None) -> bool:
        """No level increases the error by more than ``slack`` (relative to the reference norm)."""
        modes = self.families if mode is None else [mode]
        tol = self.slack * max(self.reference_norm, 1.0)
        return all(bool(np.all(np.diff(self.errors(m)) <= tol)) for m in modes)

    def strictly_decreasing(self, mode: BcMode) -> bool:
        return bool(np.all(np.diff(self.errors(mode)) < 0))


# Level solves ------------------------------------------------------------------


def _solve(spec: ExperimentSpec, mask: DomainMask, mode: BcMode, rhs, project_rhs: bool):
    if spec.operator == "laplace":
        return laplace_resolvent(
            LaplaceProblem(mask, mode, rhs), tol=spec.tol, maxit=spec.maxit, precond=_scalar_precond(spec.precond)
        )
    sol = stokes_resolvent(
        StokesProblem(mask, mode, rhs, project_rhs=project_rhs), tol=spec.tol, maxit=spec.maxit, precond=spec.precond
    )
    return sol.velocity, sol.stats


def _scalar_precond(kind):
    return "jacobi" if kind in ("jacobi", "block") else None


def _dofs(spec: ExperimentSpec, mask: DomainMask, mode: BcMode) -> int:
    if spec.operator == "laplace":
        return int(mask.active_vertices(mode).sum())
    return int(mask.active_u(mode).sum() + mask.active_v(mode).sum() + mask.n_cells)


def _sample(spec: ExperimentSpec, grid: Grid):
    if spec.operator == "laplace":
        return spec.forcing.scalar(grid)
    return spec.forcing.vector(grid)


def _limit_forcing(spec: ExperimentSpec, limit: DomainMask):
    """The forcing as an element of the limit space: restricted, and projected for Stokes."""
    f = _sample(spec, limit.grid)
    if spec.operator == "stokes":
        return project(f, limit, spec.limit_mode, tol=min(spec.tol, PROJECTION_TOL)).solenoidal
    return restrict(f, limit, spec.limit_mode)


def _level_rhs(spec: ExperimentSpec, f, mask: DomainMask, mode: BcMode):
    # increasing: f restricted to Omega_n (re-projected by the level solve for Stokes);
    # decreasing: f extended by zero, then restricted to Omega_n
    rhs = restrict(f, mask, mode)
    project_rhs = spec.operator == "stokes" and spec.direction is Direction.INCREASING
    return rhs, project_rhs


def _transfer(u, mask: DomainMask, mode: BcMode, target: DomainMask, target_mode: BcMode):
    """Extend ``u`` by zero off ``mask``, carry it to the target grid, restrict to ``target``."""
    u = restrict(u, mask, mode)
    while u.grid != target.grid:
        fine = u.grid.refine()
        mask = mask.refine()
        u = restrict(prolong(u, fine), mask, mode)
    return restrict(u, target, target_mode)


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _rates(errors):
    out = [math.nan]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 else math.nan)
    return out


def _levels(spec: ExperimentSpec):
    """(masks, reference mask) for either style."""
    if not spec.refined:
        return list(spec.sequence.masks), spec.sequence.limit
    grids = [spec.base_grid]
    for _ in range(spec.levels):
        grids.append(grids[-1].refine())
    masks = [rasterize(spec.shape, g, spec.rasterization) for g in grids]
    return masks[:-1], masks[-1]


def discretization_floor(spec: ExperimentSpec) -> float:
    """``||u_weak(inner) - u_pseudo(outer)||`` on the reference grid of a refined experiment.

    The inner rasterization in weak mode and the outer one in pseudo mode are
    the two discrete stand-ins for the limit domain; their disagreement is the
    resolution limit of any convergence claim at that grid.
    """
    if not spec.refined:
        return 0.0
    grid = spec.base_grid
    for _ in range(spec.levels):
        grid = grid.refine()
    inner = rasterize(spec.shape, grid, Policy.INNER)
    outer = rasterize(spec.shape, grid, Policy.OUTER)
    f = _sample(spec, grid)
    ui, _ = _solve(spec, inner, BcMode.WEAK, restrict(f, inner, BcMode.WEAK), spec.operator == "stokes")
    uo, _ = _solve(spec, outer, BcMode.PSEUDO, restrict(f, outer, BcMode.PSEUDO), spec.operator == "stokes")
    return (ui - uo).norm()


def run_experiment(spec: ExperimentSpec, floor: bool | None = None) -> ConvergenceReport:
    """Run every mode in ``spec.modes`` along the sequence and difference against the limit solve.

    ``floor`` defaults to measuring the discretization floor for refined
    experiments only.
    """
    masks, limit = _levels(spec)
    lmode = spec.limit_mode
    f_lim = _limit_forcing(spec, limit)
    # same pipeline as a level, so a level equal to the limit reproduces it bit for bit
    ref, _ = _solve(spec, limit, lmode, *_level_rhs(spec, f_lim, limit, lmode))
    ref_norm = ref.norm()

    def level(job):
        idx, mode = job
        mask = masks[idx]
        if spec.refined:
            f = _sample(spec, mask.grid)
        else:
            f = f_lim
        rhs, project_rhs = _level_rhs(spec, f, mask, mode)
        t0 = time.perf_counter()
        if _dofs(spec, mask, mode) == 0:
            u, stats = type(rhs).zeros(mask.grid), SolveStats(0, 0.0, 0.0)
        else:
            u, stats = _solve(spec, mask, mode, rhs, project_rhs)
        err = (_transfer(u, mask, mode, limit, lmode) - ref).norm()
        return err, stats, time.perf_counter() - t0

    jobs = [(i, m) for m in spec.modes for i in range(len(masks))]
    results = _map(level, jobs, spec.threads)
    families = {}
    for mode in spec.modes:
        rows = [(i, r) for (i, m), r in zip(jobs, results) if m is mode]
        errs = [r[0] for _, r in rows]
        rates = _rates(errs)
        families[mode] = tuple(
            LevelRecord(
                n=i + 1,
                h=masks[i].grid.h,
                dofs=_dofs(spec, masks[i], mode),
                error=float(e),
                rate=float(rate),
                iterations=st.iterations,
                residual=st.residual,
                seconds=float(sec),
                mode=mode,
            )
            for (i, (e, st, sec)), rate in zip(rows, rates)
        )
    fl = None
    if floor if floor is not None else spec.refined:
        fl = discretization_floor(spec)
    return ConvergenceReport(spec.operator, spec.direction, lmode, families, float(ref_norm), fl)


def _check(spec: ExperimentSpec, operator: str, direction: Direction) -> ExperimentSpec:
    if spec.operator != operator or spec.direction is not direction:
        raise ValueError(f"expected a {direction.value} {operator} experiment")
    return spec


def run_laplace_increasing(spec: ExperimentSpec, **kw) -> ConvergenceReport:
    return run_experiment(_check(spec, "laplace", Direction.INCREASING), **kw)


def run_laplace_decreasing(spec: ExperimentSpec, **kw) -> ConvergenceReport:
    return run_experiment(_check(spec, "laplace", Direction.DECREASING), **kw)


def run_stokes_increasing(spec: ExperimentSpec, **kw) -> ConvergenceReport:
    return run_experiment(_check(spec, "stokes", Direction.INCREASING), **kw)


def run_stokes_decreasing(spec: ExperimentSpec, **kw) -> ConvergenceReport:
    return run_experiment(_check(spec, "stokes", Direction.DECREASING), **kw)


# Slit discrimination -----------------------------------------------------------

MIDDLE_SLIT = SlitSquare((0.0, 0.0), 1.0, (0.25, 0.5), (0.75, 0.5))


@dataclass(frozen=True)
class GapReport:
    n: int
    delta: float
    norm_weak: float
    norm_pseudo: float
    slit_flux_weak: float
    slit_flux_pseudo: float
    increasing_match: float
    decreasing_match: float


def slit_flux(u: MacField, mask: DomainMask) -> float:
    """Discrete L2 norm of the velocity on the slit faces."""
    h2 = u.grid.h**2
    return float(np.sqrt(h2 * (np.sum(u.u[mask.slit_u] ** 2) + np.sum(u.v[mask.slit_v] ** 2))))


def crossflow(shape: SlitSquare) -> Forcing:
    """``cos`` flow across the slit: one period along the slit segment."""
    (xa, ya), (xb, yb) = shape.start, shape.end
    if shape.horizontal:
        return Forcing("crossflow", normal="y", period=abs(xb - xa), x0=min(xa, xb))
    return Forcing("crossflow", normal="x", period=abs(yb - ya), x0=min(ya, yb))


def slit_discrimination(n: int, shape=MIDDLE_SLIT, forcing: Forcing | None = None, tol=1e-12, precond=None) -> GapReport:
    """Weak vs pseudo Stokes resolvents on ``shape`` rasterized at ``n x n``.

    ``delta = ||u_weak - u_pseudo|| / ||u_pseudo||``. The two matches compare
    the final level of an increasing experiment with ``u_weak`` and of a
    decreasing one with ``u_pseudo``. For a zero-thickness slit square these
    are the slit-thickness family (1, 0) and ``Omega_n`` = the unslit square;
    other shapes use constant families.
    """
    slit = isinstance(shape, SlitSquare) and shape.half_thickness == 0
    if forcing is None:
        if not slit:
            raise ValueError("give a forcing for shapes other than a slit square")
        forcing = crossflow(shape)
    x0, y0, x1, y1 = shape.bbox()
    size = max(x1 - x0, y1 - y0)
    grid = Grid((x0, y0), size / n, n, n)
    mask = rasterize(shape, grid)
    f = forcing.vector(grid)
    uw = stokes_resolvent(StokesProblem(mask, BcMode.WEAK, restrict(f, mask, BcMode.WEAK)), tol=tol, precond=precond)
    up = stokes_resolvent(
        StokesProblem(mask, BcMode.PSEUDO, restrict(f, mask, BcMode.PSEUDO)), tol=tol, precond=precond
    ).velocity
    uw = uw.velocity
    nw, npn = uw.norm(), up.norm()
    delta = (uw - up).norm() / npn if npn > 0 else 0.0

    if slit:
        inc_family = Family("slit", shape, offsets=(1, 0))
        dec_family = Family("dilation", shape, offsets=(0,))
    else:
        inc_family = Family("constant", shape, levels=1)
        dec_family = Family("constant", shape, levels=1, direction=Direction.DECREASING)
    common = dict(operator="stokes", forcing=forcing, tol=tol, precond=precond)
    inc = ExperimentSpec(
        direction=Direction.INCREASING, sequence=make_sequence(inc_family, grid), modes=(BcMode.WEAK,), **common
    )
    dec = ExperimentSpec(
        direction=Direction.DECREASING, sequence=make_sequence(dec_family, grid), modes=(BcMode.PSEUDO,), **common
    )
    u_inc = _final_solution(inc)
    u_dec = _final_solution(dec)
    return GapReport(
        n=n,
        delta=float(delta),
        norm_weak=float(nw),
        norm_pseudo=float(npn),
        slit_flux_weak=slit_flux(uw, mask),
        slit_flux_pseudo=slit_flux(up, mask),
        increasing_match=float((u_inc - uw).norm() / max(nw, np.finfo(float).tiny)),
        decreasing_match=float((u_dec - up).norm() / max(npn, np.finfo(float).tiny)),
    )


def _final_solution(spec: ExperimentSpec):
    """The last level's solution of a fixed-grid experiment, transferred to the limit mask."""
    mask = spec.sequence.masks[-1]
    limit = spec.sequence.limit
    mode = spec.modes[-1]
    f = _limit_forcing(spec, limit)
    rhs, project_rhs = _level_rhs(spec, f, mask, mode)
    u, _ = _solve(spec, mask, mode, rhs, project_rhs)
    return _transfer(u, mask, mode, limit, spec.limit_mode)


# Scalar monotonicity -----------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityResult:
    ok: bool
    min_value: float
    max_violation: float


def monotonicity_check(small: DomainMask, big: DomainMask, f: VertexField, slack=1e-12, method="direct"):
    """Check ``0 <= x_small <= x_big`` pointwise for weak scalar resolvents with ``f >= 0``.

    ``x_small`` is extended by zero to the larger mask. The slack is relative
    to ``max(1, max x_big)``.
    """
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    if not small.issubset(big) or small.has_slits or big.has_slits:
        raise ValueError("monotonicity needs nested slit-free masks")
    if np.any(f.values < 0):
        raise ValueError("forcing must be nonnegative")
    xs = _scalar_solve(small, f, method)
    xb = _scalar_solve(big, f, method)
    scale = slack * max(1.0, float(np.max(np.abs(xb.values))))
    low = float(np.min(xs.values))
    viol = float(np.max(xs.values - xb.values))
    return MonotonicityResult(bool(low >= -scale and viol <= scale and np.min(xb.values) >= -scale), low, viol)


def _scalar_solve(mask: DomainMask, f: VertexField, method: str) -> VertexField:
    if not mask.active_vertices(BcMode.WEAK).any():
        return VertexField.zeros(mask.grid)
    u, _ = laplace_resolvent(LaplaceProblem(mask, BcMode.WEAK, restrict(f, mask, BcMode.WEAK)), method=method)
    return u
