import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import disk_mask, slit_mask
from stokeslab import io
from stokeslab.fields import CellField, MacField, VertexField
from stokeslab.geometry import DomainMask, Grid
from stokeslab.harness import ExperimentSpec, run_experiment
from stokeslab.geometry import Direction, Family, Rect, make_sequence


def test_mask_roundtrip(tmp_path):
    for m in (slit_mask(8), disk_mask(12)):
        p = io.write_mask(tmp_path / "m.mask", m)
        assert io.read_mask(p) == m


@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_mask_roundtrip_property(nx, ny, data):
    bits = data.draw(st.lists(st.booleans(), min_size=nx * ny, max_size=nx * ny))
    m = DomainMask(Grid((0.5, -1.0), 0.1, nx, ny), np.array(bits, bool).reshape(nx, ny))
    assert io.parse_mask(io.format_mask(m)) == m


def test_mask_text_layout():
    g = Grid((0.0, 0.0), 0.5, 2, 2)
    c = np.array([[True, False], [True, True]])  # cell (0,1) missing: top-left
    text = io.format_mask(DomainMask(g, c))
    assert text.splitlines()[1:] == ["01", "11"]


@pytest.mark.parametrize(
    "text",
    ["", "2 2 0.5 0\n11\n11\n", "2 2 0.5 0 0\n11\n", "2 2 0.5 0 0\n1x\n11\n", "2 2 0.5 0 0\n11\n11\n0 5 0\n"],
)
def test_bad_mask_files(text):
    with pytest.raises(ValueError):
        io.parse_mask(text)


def test_field_csv_roundtrip(tmp_path, rng):
    g = Grid.unit_square(4)
    w = MacField(g, rng.standard_normal(g.shape_u), rng.standard_normal(g.shape_v))
    s = VertexField(g, rng.standard_normal(g.shape_vertices))
    io.write_fields(tmp_path / "f.csv", w, s, CellField.zeros(g))
    assert (io.read_mac_field(tmp_path / "f.csv", g) - w).max_abs() == 0
    assert (io.read_vertex_field(tmp_path / "f.csv", g) - s).max_abs() == 0
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "kind,axis,i,j,value"


def test_field_csv_wrong_grid(tmp_path):
    g = Grid.unit_square(4)
    io.write_fields(tmp_path / "f.csv", MacField.zeros(g))
    with pytest.raises(ValueError):
        io.read_mac_field(tmp_path / "f.csv", Grid.unit_square(2))


def test_matrix_roundtrip(tmp_path, rng):
    A = sp.random(20, 20, density=0.2, random_state=1, format="csr")
    io.write_matrix(tmp_path / "a.mtx", A)
    assert abs(io.read_matrix(tmp_path / "a.mtx") - A).max() == 0


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "x.txt", "hello")
    io.atomic_write(tmp_path / "x.txt", "world")
    assert (tmp_path / "x.txt").read_text() == "world"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]


def test_report_csv_and_svg_deterministic():
    seq = make_sequence(Family("erosion", Rect((0.0, 0.0), 1.0, 1.0), offsets=(2, 1, 0)), Grid.unit_square(16))
    spec = ExperimentSpec("laplace", Direction.INCREASING, sequence=seq)
    a, b = run_experiment(spec), run_experiment(spec)
    assert io.format_report(a) == io.format_report(b)
    assert io.report_svg(a) == io.report_svg(b)
    lines = io.format_report(a).splitlines()
    assert lines[0] == "mode,n,h,dofs,error_l2,rate,iters,residual,seconds"
    assert len(lines) == 1 + 6
    svg = io.report_svg(a)
    assert svg.startswith("<svg") and svg.count("<polyline") == 2
