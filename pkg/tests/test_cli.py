import json
import math
import subprocess
import sys

import numpy as np
import pytest

from simplex_neumann.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_predict_standard_tetrahedron(capsys):
    code, out, _ = run(capsys, "predict", "--standard", "3")
    assert code == 0
    masses = [f["predicted"] for f in json.loads(out)["faces"]]
    assert masses == pytest.approx([2 * math.sqrt(3), 2, 2, 2], rel=1e-14)


def test_predict_inline_simplex(capsys):
    code, out, _ = run(capsys, "predict", "--simplex", '{"dimension": 2, "vertices": [[0,0],[2,0],[0,2]]}')
    assert code == 0
    assert json.loads(out)["volume"] == 2.0


def test_predict_degenerate(capsys):
    code, _, err = run(capsys, "predict", "--simplex", '{"dimension": 2, "vertices": [[0,0],[1,1],[2,2]]}')
    assert code == 1
    assert json.loads(err)["error"] == "DegenerateSimplex"


def test_invalid_json(capsys):
    code, _, err = run(capsys, "predict", "--simplex", "{not json")
    assert code == 2
    assert json.loads(err)["error"] == "UsageError"


def test_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "predict", "--simplex", str(tmp_path / "nope.json"))
    assert code == 2


def test_unknown_command(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_verify_exact(capsys):
    code, out, _ = run(capsys, "verify-exact", "--wavenumbers", "3,2,1")
    assert code == 0
    rep = json.loads(out)
    assert rep["max_residual"] < 1e-6 and "timestamp" in rep and rep["timestamp"] is None


def test_verify_exact_repeated(capsys):
    assert run(capsys, "verify-exact", "--wavenumbers", "2,2")[0] == 1


def test_verify_exact_csv(capsys):
    code, out, _ = run(capsys, "verify-exact", "--wavenumbers", "2,1", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "source,n,level,mode,face,predicted,measured,residual"
    assert len(out.splitlines()) == 4


def test_csv_refused_for_predict(capsys):
    assert run(capsys, "predict", "--format", "csv")[0] == 2


def test_verify_fem_outputs(capsys, tmp_path):
    out_path, mesh_path = tmp_path / "r.json", tmp_path / "m.json"
    code, out, _ = run(
        capsys, "verify-fem", "--standard", "2", "--level", "2,3", "--out", str(out_path), "--mesh-out", str(mesh_path)
    )
    assert code == 0 and out == ""
    data = json.loads(out_path.read_text())
    assert data["convergence"]["levels"] == [2, 3]
    assert len(json.loads(mesh_path.read_text())["cells"]) == 64


def test_verify_fem_gamma(capsys):
    code, out, _ = run(capsys, "verify-fem", "--gamma", "[[2, 0.5], [0.5, 1]]", "--level", "3,4")
    assert code == 0
    assert json.loads(out)["reports"][0]["gamma"] == [[2.0, 0.5], [0.5, 1.0]]


def test_verify_fem_bad_gamma(capsys):
    assert run(capsys, "verify-fem", "--gamma", "[[1, 2], [2, 1]]", "--level", "2")[0] == 1
    assert run(capsys, "verify-fem", "--gamma", "[[1, 0, 0]]", "--level", "2")[0] == 2


def test_verify_fem_limits(capsys):
    assert run(capsys, "verify-fem", "--standard", "3", "--level", "7")[0] == 2
    assert run(capsys, "verify-fem", "--level", "4,3")[0] == 2


def test_timestamp(capsys):
    code, out, _ = run(capsys, "verify-exact", "--wavenumbers", "2,1", "--timestamp")
    assert code == 0
    assert json.loads(out)["timestamp"].endswith("+00:00")


def test_recover_triangle(capsys):
    code, out, _ = run(capsys, "recover-triangle", "--data", json.dumps({"N": [2, 2, 2 * math.sqrt(2)]}))
    assert code == 0
    data = json.loads(out)
    assert data["area"] == pytest.approx(0.5) and data["forward_residual"] < 1e-14
    assert run(capsys, "recover-triangle", "--data", '{"N": [1, 1, 5]}')[0] == 1
    assert run(capsys, "recover-triangle", "--data", '{"N": [1, 1]}')[0] == 2


def test_recover_gamma(capsys, tmp_path):
    path = tmp_path / "j.json"
    path.write_text(json.dumps({"J": [2, 2, 2 * math.sqrt(2)]}))
    code, out, _ = run(capsys, "recover-gamma", "--data", str(path))
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["gamma"], np.eye(2), atol=1e-15)
    code, _, err = run(capsys, "recover-gamma", "--data", '{"J": [2, 2, 1]}')
    assert code == 1 and json.loads(err)["error"] == "InconsistentData"
    assert run(capsys, "recover-gamma", "--data", '{"J": [2, 2, 2, 3]}')[0] == 2


def test_counterexample(capsys):
    code, out, _ = run(capsys, "counterexample", "--epsilon", "0.1")
    assert code == 0
    data = json.loads(out)
    assert data["quadratic_forms"] == pytest.approx([1, 1, 1, 3], abs=1e-12)
    assert data["neumann_masses"] == pytest.approx(data["identity_neumann_masses"], abs=1e-12)
    assert run(capsys, "counterexample", "--epsilon", "0.5")[0] == 1
    assert run(capsys, "counterexample", "--epsilon", "nan")[0] == 2


def test_byte_identical_runs():
    cmd = [sys.executable, "-m", "simplex_neumann", "verify-fem", "--level", "2,3"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a
