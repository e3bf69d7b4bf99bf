import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import disk_mask, slit_mask, square_mask
from stokeslab.fields import CellField, MacField, VertexField, curl_h, div_h, grad_h, inner, restrict
from stokeslab.geometry import BcMode, DomainMask, Grid
from stokeslab.leray import is_in_solenoidal, orthogonality_defect, project, subspace_gap


def random_field(mask, rng, mode=BcMode.PSEUDO):
    g = mask.grid
    return restrict(MacField(g, rng.standard_normal(g.shape_u), rng.standard_normal(g.shape_v)), mask, mode)


def bump_streamfunction(mask, mode):
    """Random stream function vanishing on wall vertices and (weak) slit vertices."""
    g = mask.grid
    rng = np.random.default_rng(7)
    psi = rng.standard_normal(g.shape_vertices)
    psi[~mask.active_vertices(mode)] = 0.0
    return VertexField(g, psi)


@pytest.mark.parametrize("mode", list(BcMode))
def test_gradient_projects_to_zero(mode, rng):
    m = disk_mask(16)
    phi = CellField(m.grid, rng.standard_normal(m.grid.shape_cells))
    f = grad_h(restrict(phi, m), m, mode)
    dec = project(f, m, mode)
    assert dec.solenoidal.norm() <= 1e-9 * f.norm()


@pytest.mark.parametrize("mode", list(BcMode))
def test_curl_is_fixed(mode):
    m = slit_mask(16)
    f = curl_h(bump_streamfunction(m, mode))
    dec = project(f, m, mode)
    assert (dec.solenoidal - f).norm() <= 1e-10 * f.norm()
    assert dec.gradient.norm() <= 1e-10 * f.norm()


@pytest.mark.parametrize("mode", list(BcMode))
def test_idempotence_on_disk(mode, rng):
    m = disk_mask(16)
    f = random_field(m, rng)
    p1 = project(f, m, mode).solenoidal
    p2 = project(p1, m, mode).solenoidal
    assert (p2 - p1).norm() <= 1e-10 * f.norm()


@pytest.mark.parametrize("mode", list(BcMode))
def test_decomposition_invariants(mode, rng):
    m = slit_mask(16)
    f = random_field(m, rng, mode)
    dec = project(f, m, mode)
    assert (dec.solenoidal + dec.gradient - f).max_abs() <= 1e-14 * f.max_abs()
    assert orthogonality_defect(dec) <= 1e-10 * f.norm() ** 2
    assert is_in_solenoidal(dec.solenoidal, m, mode, distance=False).div_defect <= 1e-10 * f.norm()
    assert (dec.gradient - grad_h(dec.potential, m, mode)).max_abs() == 0
    if mode is BcMode.WEAK:
        assert np.all(dec.solenoidal.v[m.slit_v] == 0)


@given(st.integers(0, 2**31))
def test_self_adjoint_and_pythagoras(seed):
    rng = np.random.default_rng(seed)
    m = disk_mask(12)
    for mode in BcMode:
        f, g = random_field(m, rng), random_field(m, rng)
        pf = project(f, m, mode).solenoidal
        pg = project(g, m, mode).solenoidal
        scale = f.norm() * g.norm()
        assert abs(inner(pf, g) - inner(f, pg)) <= 1e-9 * scale
        assert abs(f.norm() ** 2 - pf.norm() ** 2 - (f - pf).norm() ** 2) <= 1e-9 * f.norm() ** 2


def test_mode_ordering(rng):
    m = slit_mask(16)
    for _ in range(5):
        f = random_field(m, rng)
        w = project(f, m, BcMode.WEAK).solenoidal.norm()
        p = project(f, m, BcMode.PSEUDO).solenoidal.norm()
        assert p >= w - 1e-10 * f.norm()


def test_modes_agree_without_slits(rng):
    m = disk_mask(16)
    f = random_field(m, rng)
    a = project(f, m, BcMode.WEAK).solenoidal
    b = project(f, m, BcMode.PSEUDO).solenoidal
    assert (a - b).norm() <= 1e-10 * f.norm()


def test_membership_examples(rng):
    m = slit_mask(8)
    curl = curl_h(bump_streamfunction(m, BcMode.WEAK))
    assert is_in_solenoidal(curl, m, BcMode.WEAK).ok
    phi = CellField(m.grid, rng.standard_normal(m.grid.shape_cells))
    grad = grad_h(phi, m, BcMode.WEAK)
    chk = is_in_solenoidal(grad, m, BcMode.WEAK)
    assert not chk.ok
    assert chk.distance == pytest.approx(grad.norm(), rel=1e-9)


def test_through_slit_flow_separates_modes():
    # psi is 1 on the slit vertices and 0 on the outer wall: flow goes through the slit
    m = slit_mask(8)
    g = m.grid
    psi = np.zeros(g.shape_vertices)
    psi[3:6, 4] = 1.0  # the three interior slit vertices
    f = curl_h(VertexField(g, psi))
    pseudo = is_in_solenoidal(f, m, BcMode.PSEUDO)
    weak = is_in_solenoidal(f, m, BcMode.WEAK)
    assert pseudo.ok and pseudo.slit_flux == 0.0
    assert not weak.ok and weak.slit_flux > 0
    assert weak.div_defect == pseudo.div_defect and weak.wall_flux == pseudo.wall_flux


def test_subspace_gap():
    assert subspace_gap(square_mask(12)) <= 1e-10
    assert subspace_gap(disk_mask(16), samples=4) <= 1e-10
    m = slit_mask(8)
    psi = np.zeros(m.grid.shape_vertices)
    psi[3:6, 4] = 1.0
    probe = curl_h(VertexField(m.grid, psi))
    assert subspace_gap(m, samples=0, probes=[probe]) > 0.1


def test_project_empty_mask():
    g = Grid.unit_square(4)
    with pytest.raises(ValueError):
        project(MacField.zeros(g), DomainMask(g, np.zeros((4, 4), bool)), BcMode.WEAK)
