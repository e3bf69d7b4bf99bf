import json

import numpy as np
import pytest

from stokeslab import io
from stokeslab.cli import main
from stokeslab.fields import CellField, MacField, grad_h
from stokeslab.geometry import BcMode


@pytest.fixture
def square_file(tmp_path):
    assert main(["shapes", "--shape", "square", "--n", "8", "--out", str(tmp_path)]) == 0
    return tmp_path / "square.mask"


@pytest.fixture
def slit_file(tmp_path):
    assert main(["shapes", "--shape", "slit", "--n", "16", "--out", str(tmp_path)]) == 0
    return tmp_path / "slit.mask"


def test_shapes_list(capsys):
    assert main(["shapes", "--list"]) == 0
    assert "slit" in capsys.readouterr().out


def test_solve_laplace_smoke(tmp_path, square_file):
    out = tmp_path / "o"
    rc = main(["solve", "--operator", "laplace", "--mode", "weak", "--domain-file", str(square_file),
               "--rhs", "constant", "--out", str(out)])
    assert rc == 0
    assert (out / "solution.csv").exists()
    stats = json.loads((out / "stats.json").read_text())
    assert stats["solver"]["residual"] <= 1e-10


def test_invalid_mode_names_flag(square_file, capsys):
    assert main(["solve", "--mode", "strong", "--domain-file", str(square_file)]) == 2
    assert "--mode" in capsys.readouterr().err


@pytest.mark.parametrize("operator", ["laplace", "stokes"])
def test_oracle_agreement(tmp_path, slit_file, operator):
    rc = main(["solve", "--operator", operator, "--mode", "weak", "--domain-file", str(slit_file), "--rhs", "random",
               "--oracle", "--out", str(tmp_path)])
    assert rc == 0
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["oracle_agreement"] <= 1e-6


def test_dump_matrix_is_coordinate_text(tmp_path, square_file):
    assert main(["solve", "--domain-file", str(square_file), "--dump-matrix", "--out", str(tmp_path)]) == 0
    A = io.read_matrix(tmp_path / "matrix.mtx")
    assert abs(A - A.T).max() == 0
    assert main(["dump", "--domain-file", str(square_file), "--operator", "laplace", "--out", str(tmp_path / "d")]) == 0
    meta = json.loads((tmp_path / "d" / "matrix.json").read_text())
    assert meta["n"] == 49 and meta["symmetry"] == "spd"


def test_dump_field_and_mask(tmp_path, slit_file):
    assert main(["dump", "--what", "field", "--rhs", "vortex", "--domain-file", str(slit_file), "--out", str(tmp_path)]) == 0
    g = io.read_mask(slit_file).grid
    assert io.read_mac_field(tmp_path / "field.csv", g).norm() > 0
    assert main(["dump", "--what", "mask", "--domain-file", str(slit_file), "--out", str(tmp_path)]) == 0
    assert io.read_mask(tmp_path / "domain.mask") == io.read_mask(slit_file)


def test_project_discrete_gradient_gives_zero(tmp_path, slit_file):
    mask = io.read_mask(slit_file)
    g = mask.grid
    x, y = g.mesh("cell")
    phi = CellField(g, np.sin(3 * x) * np.cos(2 * y))
    io.write_fields(tmp_path / "grad.csv", grad_h(phi, mask, BcMode.WEAK))
    assert main(["project", "--domain-file", str(slit_file), "--rhs", str(tmp_path / "grad.csv"),
                 "--check-idempotent", "--out", str(tmp_path)]) == 0
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["norm_solenoidal"] <= 1e-9 * stats["norm_input"]
    assert stats["idempotence"] <= 1e-10
    assert stats["components"] == 1


def test_project_field_file(tmp_path, slit_file):
    g = io.read_mask(slit_file).grid
    rng = np.random.default_rng(0)
    io.write_fields(tmp_path / "in.csv", MacField(g, rng.standard_normal(g.shape_u), rng.standard_normal(g.shape_v)))
    assert main(["project", "--domain-file", str(slit_file), "--rhs", str(tmp_path / "in.csv"), "--check-idempotent",
                 "--out", str(tmp_path / "p")]) == 0
    stats = json.loads((tmp_path / "p" / "stats.json").read_text())
    assert stats["idempotence"] <= 1e-10 and stats["orthogonality"] <= 1e-10


def test_bad_files_exit_2(tmp_path, capsys):
    (tmp_path / "bad.mask").write_text("garbage\n")
    assert main(["project", "--domain-file", str(tmp_path / "bad.mask")]) == 2
    assert main(["project", "--domain-file", str(tmp_path / "missing.mask")]) == 2
    assert main(["solve", "--shape", "square", "--rhs", str(tmp_path / "missing.csv")]) == 2


def test_config_file_and_env_precedence(tmp_path, square_file, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema": 1, "operator": "laplace", "mode": "pseudo", "domain_file": str(square_file)}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "stats.json").read_text())["mode"] == "pseudo"
    monkeypatch.setenv("STOKESLAB_MODE", "weak")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "stats.json").read_text())["mode"] == "weak"
    assert main(["solve", "--config", str(cfg), "--mode", "pseudo", "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "stats.json").read_text())["mode"] == "pseudo"


def test_config_rejects_unknown_keys_and_versions(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema": 1, "operatr": "laplace"}))
    assert main(["solve", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"schema": 2, "operator": "laplace"}))
    assert main(["solve", "--config", str(cfg)]) == 2


def write(tmp_path, doc):
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(doc))
    return p


def test_sequence_constant_family(tmp_path):
    doc = {"schema": 1, "operator": "laplace", "direction": "increasing", "shape": "disk", "grid": {"n": 16},
           "family": {"kind": "constant", "levels": 3}, "assert": {"final_error_max": 0.0}}
    out = tmp_path / "o"
    assert main(["sequence", str(write(tmp_path, doc)), "--out", str(out)]) == 0
    rows = (out / "report.csv").read_text().splitlines()
    assert rows[0] == "mode,n,h,dofs,error_l2,rate,iters,residual,seconds"
    assert all(r.split(",")[4] == "0.0" for r in rows[1:])
    assert (out / "report.svg").read_text().startswith("<svg")


def test_sequence_outputs_byte_deterministic(tmp_path):
    doc = {"schema": 1, "operator": "stokes", "direction": "decreasing", "shape": {"type": "rect", "corner": [0.25, 0.25],
           "width": 0.5, "height": 0.5}, "grid": {"n": 16}, "family": {"kind": "dilation", "offsets": [2, 1, 0]},
           "forcing": {"name": "vortex", "center": [0.5, 0.5], "radius": 0.2}}
    p = write(tmp_path, doc)
    assert main(["sequence", str(p), "--out", str(tmp_path / "a")]) == 0
    assert main(["sequence", "--config", str(p), "--out", str(tmp_path / "b")]) == 0
    for name in ("report.csv", "report.svg", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sequence_failed_assertion_exit_1(tmp_path):
    doc = {"schema": 1, "operator": "laplace", "direction": "increasing", "shape": "square", "grid": {"n": 16},
           "family": {"kind": "erosion", "offsets": [2, 1]}, "assert": {"final_error_max": 1e-12}}
    assert main(["sequence", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 1


def test_sequence_discrimination_reports_delta(tmp_path):
    doc = {"schema": 1, "kind": "discrimination", "sizes": [16, 32], "assert": {"delta_min": 0.0}}
    assert main(["sequence", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert len(rep["delta"]) == 2 and min(rep["delta"]) > 0
    assert (tmp_path / "report.csv").read_text().startswith("n,delta,")


@pytest.mark.parametrize("text", ["{not json", '{"schema": 1, "operator": "laplace"}', '{"schema": 1, "kind": "x"}',
                                  '{"schema": 1, "operator": "laplace", "direction": "increasing", "shape": "disk", '
                                  '"grid": 8, "family": {"kind": "erosion"}, "bogus": 1}'])
def test_sequence_bad_config_exit_2(tmp_path, text):
    p = tmp_path / "bad.json"
    p.write_text(text)
    assert main(["sequence", str(p), "--out", str(tmp_path)]) == 2


def test_shipped_configs_parse():
    from pathlib import Path

    from stokeslab.config import load_json, sequence_config

    for p in sorted((Path(__file__).parent.parent / "configs").glob("*.json")):
        sequence_config(load_json(p))
