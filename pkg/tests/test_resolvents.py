import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import disk_mask, slit_mask, square_mask
from stokeslab.fields import CellField, MacField, VertexField, div_h, grad_h, inner, restrict
from stokeslab.geometry import BcMode, DomainMask, Grid
from stokeslab.leray import project
from stokeslab.operators import MacDofs, vector_laplacian
from stokeslab.resolvents import (
    LaplaceProblem,
    StokesProblem,
    laplace_resolvent,
    laplace_system,
    pseudo_equals_slitfree,
    stokes_resolvent,
    stokes_resolvent_streamfn,
    stokes_system,
)


def rand_mac(mask, rng, mode=BcMode.PSEUDO):
    g = mask.grid
    return restrict(MacField(g, rng.standard_normal(g.shape_u), rng.standard_normal(g.shape_v)), mask, mode)


# Laplace ------------------------------------------------------------------------


def test_single_vertex_resolvent():
    m = square_mask(2)
    rhs = VertexField(m.grid, np.ones(m.grid.shape_vertices))
    x, _ = laplace_resolvent(LaplaceProblem(m, BcMode.WEAK, restrict(rhs, m)))
    assert x.values[1, 1] == pytest.approx(1 / 17, rel=1e-12)
    assert np.count_nonzero(x.values) == 1


def test_zero_rhs_gives_zero():
    m = disk_mask(12)
    x, stats = laplace_resolvent(LaplaceProblem(m, BcMode.WEAK, VertexField.zeros(m.grid)))
    assert x.max_abs() == 0 and stats.residual == 0


def test_modes_identical_without_slits(rng):
    m = disk_mask(12)
    f = restrict(VertexField(m.grid, rng.standard_normal(m.grid.shape_vertices)), m)
    a, _ = laplace_resolvent(LaplaceProblem(m, BcMode.WEAK, f))
    b, _ = laplace_resolvent(LaplaceProblem(m, BcMode.PSEUDO, f))
    assert np.array_equal(a.values, b.values)


def test_no_interior_dofs():
    m = square_mask(1)
    with pytest.raises(ValueError, match="no interior DOFs"):
        laplace_resolvent(LaplaceProblem(m, BcMode.WEAK, VertexField.zeros(m.grid)))


def test_laplace_weak_slit_vertices_are_zero(rng):
    m = slit_mask(16)
    f = VertexField(m.grid, np.abs(rng.standard_normal(m.grid.shape_vertices)))
    x, _ = laplace_resolvent(LaplaceProblem(m, BcMode.WEAK, restrict(f, m, BcMode.WEAK)))
    assert np.all(x.values[m.slit_vertices()] == 0)


def test_vector_laplacian_second_order_consistency():
    # oracle: -Delta of sin(pi x) sin(pi y) is 2 pi^2 times itself; the field is odd about
    # every wall line, so ghost reflection is exact and the stencil error is O(h^2) up to the walls
    errs = []
    for n in (16, 32):
        m = square_mask(n)
        dofs = MacDofs(m, BcMode.WEAK)
        K = vector_laplacian(dofs)
        s = MacField.from_function(m.grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
                                   lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        x = dofs.gather(s)
        errs.append(np.max(np.abs(K @ x - 2 * np.pi**2 * x)))
    assert errs[1] < errs[0] / 3.5


# Stokes ---------------------------------------------------------------------------


@pytest.mark.parametrize("mode", list(BcMode))
def test_gradient_rhs_gives_zero_velocity(mode, rng):
    m = disk_mask(12)
    phi = restrict(CellField(m.grid, rng.standard_normal(m.grid.shape_cells)), m)
    f = grad_h(phi, m, mode)
    sol = stokes_resolvent(StokesProblem(m, mode, f, project_rhs=True))
    assert sol.velocity.norm() <= 1e-9 * f.norm()
    sol2 = stokes_resolvent(StokesProblem(m, mode, f))
    assert sol2.velocity.norm() <= 1e-8 * f.norm()
    assert sol2.pressure.norm() > 0


def test_constant_forcing_symmetry():
    m = square_mask(8)
    f = restrict(MacField(m.grid, np.ones(m.grid.shape_u), np.zeros(m.grid.shape_v)), m)
    u = stokes_resolvent(StokesProblem(m, BcMode.WEAK, f)).velocity
    scale = u.max_abs() + 1e-300
    assert np.max(np.abs(u.u - u.u[:, ::-1])) <= 1e-8 * max(scale, 1.0)
    assert np.max(np.abs(u.v + u.v[:, ::-1])) <= 1e-8 * max(scale, 1.0)


def test_stokes_matches_dense_saddle(rng):
    m = square_mask(4)
    for mode in BcMode:
        system, dofs = stokes_system(m, mode)
        f = rand_mac(m, rng, mode)
        b = np.concatenate([dofs.gather(f), np.zeros(dofs.n_p)])
        ref = np.linalg.lstsq(system.toarray(), b, rcond=None)[0]
        sol = stokes_resolvent(StokesProblem(m, mode, f))
        u = dofs.gather(sol.velocity)
        assert np.linalg.norm(u - ref[: dofs.n_vel]) <= 1e-8 * np.linalg.norm(ref[: dofs.n_vel])


@pytest.mark.parametrize("mode", list(BcMode))
def test_stokes_solution_invariants(mode, rng):
    m = slit_mask(16)
    f = rand_mac(m, rng)
    sol = stokes_resolvent(StokesProblem(m, mode, restrict(f, m, mode)))
    u, p = sol.velocity, sol.pressure
    assert np.max(np.abs(div_h(u).values[m.cells])) * m.grid.h <= 1e-9 * f.norm() * 10
    assert np.all(u.u[~m.active_u(BcMode.PSEUDO)] == 0) and np.all(u.v[~m.active_v(BcMode.PSEUDO)] == 0)
    if mode is BcMode.WEAK:
        assert np.all(u.v[m.slit_v] == 0)
    assert abs(p.values[m.cells].mean()) <= 1e-9 * max(1.0, p.max_abs())


@pytest.mark.parametrize("mode", list(BcMode))
def test_streamfunction_agrees_on_square(mode, rng):
    m = square_mask(16)
    f = rand_mac(m, rng)
    a = stokes_resolvent(StokesProblem(m, mode, f)).velocity
    b = stokes_resolvent_streamfn(StokesProblem(m, mode, f)).velocity
    assert (a - b).norm() <= 1e-6 * a.norm()


def test_streamfunction_zero_rhs():
    m = slit_mask(8)
    sol = stokes_resolvent_streamfn(StokesProblem(m, BcMode.WEAK, MacField.zeros(m.grid)))
    assert sol.velocity.max_abs() == 0 and sol.streamfunction.max_abs() == 0


def test_streamfunction_weak_slit_flux_zero():
    m = slit_mask(16)
    f = MacField.from_function(m.grid, lambda x, y: 0 * x, lambda x, y: np.cos(4 * np.pi * (x - 0.25)))
    sol = stokes_resolvent_streamfn(StokesProblem(m, BcMode.WEAK, restrict(f, m, BcMode.WEAK)))
    assert np.max(np.abs(sol.velocity.v[m.slit_v])) <= 1e-10


def test_pseudo_equals_slitfree():
    m = slit_mask(8)
    assert pseudo_equals_slitfree(m)
    assert not pseudo_equals_slitfree(m, BcMode.WEAK)
    assert pseudo_equals_slitfree(disk_mask(8), BcMode.WEAK)


@given(st.integers(0, 2**31))
def test_resolvent_self_adjoint_and_contractive(seed):
    rng = np.random.default_rng(seed)
    m = slit_mask(8)
    for mode in BcMode:
        f = project(rand_mac(m, rng, mode), m, mode).solenoidal
        g = project(rand_mac(m, rng, mode), m, mode).solenoidal
        rf = stokes_resolvent(StokesProblem(m, mode, f)).velocity
        rg = stokes_resolvent(StokesProblem(m, mode, g)).velocity
        assert abs(inner(rf, g) - inner(f, rg)) <= 1e-8 * f.norm() * g.norm()
        assert rf.norm() <= f.norm() * (1 + 1e-12)
        s = VertexField(m.grid, rng.standard_normal(m.grid.shape_vertices))
        t = VertexField(m.grid, rng.standard_normal(m.grid.shape_vertices))
        s, t = restrict(s, m, mode), restrict(t, m, mode)
        rs, _ = laplace_resolvent(LaplaceProblem(m, mode, s))
        rt, _ = laplace_resolvent(LaplaceProblem(m, mode, t))
        assert abs(inner(rs, t) - inner(s, rt)) <= 1e-8 * s.norm() * t.norm()
        assert rs.norm() <= s.norm()


def test_weak_differs_from_pseudo_on_slit():
    m = slit_mask(16)
    f = MacField.from_function(m.grid, lambda x, y: 0 * x, lambda x, y: np.cos(4 * np.pi * (x - 0.25)))
    uw = stokes_resolvent(StokesProblem(m, BcMode.WEAK, restrict(f, m, BcMode.WEAK))).velocity
    up = stokes_resolvent(StokesProblem(m, BcMode.PSEUDO, restrict(f, m, BcMode.PSEUDO))).velocity
    assert (uw - up).norm() / up.norm() > 0.5


def test_block_and_jacobi_preconditioners_agree(rng):
    m = slit_mask(16)
    f = rand_mac(m, rng)
    base = stokes_resolvent(StokesProblem(m, BcMode.WEAK, f)).velocity
    for kind in ("jacobi", "block"):
        u = stokes_resolvent(StokesProblem(m, BcMode.WEAK, f), precond=kind).velocity
        assert (u - base).norm() <= 1e-7 * base.norm()


def test_disconnected_mask_pressure_per_component(rng):
    g = Grid.unit_square(8)
    c = np.zeros((8, 8), bool)
    c[0:3, 0:3] = True
    c[5:8, 5:8] = True
    m = DomainMask(g, c)
    system, dofs = stokes_system(m, BcMode.WEAK)
    assert len(system.nullspace) == 2
    sol = stokes_resolvent(StokesProblem(m, BcMode.WEAK, rand_mac(m, rng)))
    for block in (sol.pressure.values[0:3, 0:3], sol.pressure.values[5:8, 5:8]):
        assert abs(block.mean()) <= 1e-9 * max(1.0, sol.pressure.max_abs())
