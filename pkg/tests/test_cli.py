import json
from fractions import Fraction

import pytest

from hourglass.cli import main
from hourglass.errors import BadParams
from hourglass.io import dumps_surface, load_config, loads_surface, named_surface, surface_to_dict
from hourglass.surface import standard_surface


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_report(capsys):
    code, out, _ = run(capsys, "build", "RegularOctagon")
    assert code == 0
    assert "genus" in out and "gauss_bonnet_defect" in out


def test_build_csv_named_args(capsys):
    code, out, _ = run(capsys, "--format", "csv", "build", "RectTorus:2,1/2")
    assert code == 0
    rows = dict(line.split(",", 1) for line in out.strip().splitlines()[1:])
    assert float(rows["area"]) == 1.0 and rows["genus"] == "1"


def test_unknown_surface_exit_1(capsys):
    code, _, err = run(capsys, "build", "NoSuchSurface")
    assert code == 1 and "error" in err


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tol": 1e-9, "frobnicate": 3}))
    code, _, _ = run(capsys, "--config", str(cfg), "build", "SquareTorus")
    assert code == 1


def test_gap_on_genus_one_fails(capsys):
    assert run(capsys, "gap", "SquareTorus")[0] == 1


def test_hourglass_octagon(capsys):
    code, out, _ = run(capsys, "--format", "csv", "hourglass", "RegularOctagon")
    assert code == 0
    rows = dict(line.split(",", 1) for line in out.strip().splitlines()[1:])
    assert float(rows["H"]) == 1.0


def test_decompose(capsys):
    code, out, _ = run(capsys, "decompose", "genus2:1,0.01,2")
    assert code == 0 and "components" in out


def test_flow_out_file_and_audit(tmp_path, capsys):
    p = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "--out", str(p), "flow", "RegularOctagon", "--t1", "0.2", "--dt", "0.1",
                       "--h", "0.4")
    assert code == 0 and out == ""
    lines = p.read_text().splitlines()
    assert lines[0].startswith("t,H,kappa,delta,area,dlog_1") and len(lines) == 4
    code, out, _ = run(capsys, "audit", str(p), "--classes", "1,2")
    assert code == 0 and "pass = True" in out
    assert run(capsys, "audit", str(p), "--classes", "3")[0] == 1


def test_verify_lemmas_gradient(capsys):
    code, out, _ = run(capsys, "verify-lemmas", "--suite", "gradient", "--trials", "5")
    assert code == 0 and "unit_disk_ratio" in out


def test_surface_file_roundtrip(tmp_path, capsys):
    X = standard_surface("RectTorus", 2, Fraction(1, 2))
    text = dumps_surface(X)
    assert dumps_surface(loads_surface(text)) == text
    f = tmp_path / "t.json"
    f.write_text(text)
    assert run(capsys, "build", str(f))[0] == 0


def test_unknown_keys_need_lax(tmp_path, capsys):
    doc = surface_to_dict(standard_surface("SquareTorus"))
    doc["colour"] = "blue"
    f = tmp_path / "t.json"
    f.write_text(json.dumps(doc))
    assert run(capsys, "build", str(f))[0] == 1
    assert run(capsys, "--lax", "build", str(f))[0] == 0


def test_io_coordinates():
    doc = surface_to_dict(standard_surface("SquareTorus"))
    doc["polygons"][0][1][0] = "1/1"
    assert loads_surface(json.dumps(doc)).exact
    doc["polygons"][0][1][0] = "nan"
    with pytest.raises(BadParams):
        loads_surface(json.dumps(doc))
    with pytest.raises(BadParams):
        named_surface("genus2:1,0.01")
    assert load_config(None)["mu0"] == 16.0


def test_output_options_after_subcommand(tmp_path, capsys):
    p = tmp_path / "b.csv"
    code, out, _ = run(capsys, "build", "SquareTorus", "--format", "csv", "--out", str(p))
    assert code == 0 and out == ""
    assert p.read_text().splitlines()[0] == "key,value"
