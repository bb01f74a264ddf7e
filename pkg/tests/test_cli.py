import json
import math
import subprocess
import sys

import numpy as np
import pytest

from invflow import io
from invflow.cli import initial_log_radii, main
from invflow.errors import ValidationError
from invflow.meshes import tetrahedron, torus7

PI = math.pi

TET_OFF = """OFF
# regular tetrahedron, coordinates are ignored
4 4 6
0 0 0
1 0 0
0 1 0
0 0 1
3 0 1 2
3 0 1 3
3 0 2 3
3 1 2 3
"""


@pytest.fixture
def tet_off(tmp_path):
    p = tmp_path / "tet.off"
    p.write_text(TET_OFF)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_read_off_and_json_mesh(tmp_path, tet_off):
    s = io.read_off(tet_off)
    assert s.digest() == tetrahedron().digest()
    p = tmp_path / "torus.json"
    p.write_text(json.dumps({"vertex_count": 7, "faces": torus7().faces.tolist()}))
    assert io.read_mesh(str(p)).digest() == torus7().digest()
    q = tmp_path / "roundtrip.off"
    io.write_off(torus7(), q)
    assert io.read_mesh(str(q)).digest() == torus7().digest()


def test_read_off_rejects_quads(tmp_path):
    p = tmp_path / "quad.off"
    p.write_text("OFF\n4 1 0\n0 0 0\n0 0 0\n0 0 0\n0 0 0\n4 0 1 2 3\n")
    with pytest.raises(ValidationError):
        io.read_off(p)


def test_read_array_forms(tmp_path):
    assert np.all(io.read_array("ones", 3) == 1.0)
    assert np.all(io.read_array("0.5", 3) == 0.5)
    j = tmp_path / "a.json"
    j.write_text("[1, 2, 3]")
    np.testing.assert_array_equal(io.read_array(str(j), 3), [1, 2, 3])
    j.write_text(json.dumps({"schema": 1, "radii": [4, 5, 6]}))
    np.testing.assert_array_equal(io.read_array(str(j), 3), [4, 5, 6])
    c = tmp_path / "a.csv"
    c.write_text("index,value\n2,9\n0,7\n1,8\n")
    np.testing.assert_array_equal(io.read_array(str(c), 3), [7, 8, 9])
    with pytest.raises(ValidationError):
        io.read_array(str(j), 4)
    c.write_text("0,1\n")
    with pytest.raises(ValidationError):
        io.read_array(str(c), 2)


def test_curvature_command(capsys, tet_off):
    code, out, _ = run(capsys, "curvature", "--mesh", tet_off, "--inv-dist", "0",
                       "--radii", "ones", "--alpha", "0")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == 1
    assert data["vertex_count"] == 4 and data["edge_count"] == 6
    assert data["mesh_hash"] == tetrahedron().digest()
    np.testing.assert_allclose(data["report"]["curvature"], [PI] * 4, atol=1e-14)
    assert data["report"]["gauss_bonnet"] == pytest.approx(4 * PI)
    code, out, _ = run(capsys, "curvature", "--mesh", tet_off, "--alpha", "2")
    np.testing.assert_allclose(json.loads(out)["report"]["alpha_curvature"], [PI] * 4,
                               atol=1e-14)


def test_missing_file_exit_code(capsys, tet_off):
    code, _, err = run(capsys, "curvature", "--mesh", tet_off, "--radii", "nope.json")
    assert code == 2
    assert "nope.json" in err
    code, _, err = run(capsys, "curvature", "--mesh", "missing.off")
    assert code == 2 and "missing.off" in err


def test_flow_perturbed_torus(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    final = tmp_path / "final.json"
    code, out, _ = run(capsys, "flow", "--mesh", "torus7", "--inv-dist", "0.5",
                       "--perturb", "0.3", "--seed", "1", "--alpha", "1",
                       "--trace-out", str(trace), "--final-out", str(final))
    assert code == 0
    data = json.loads(out)
    assert data["status"] == "Converged"
    assert np.max(np.abs(data["log_radii"])) < 1e-6
    cols = io.read_trace_csv(trace)
    assert list(cols) == list(io.TRACE_COLUMNS)
    assert np.all(np.diff(cols["potential"]) <= 1e-8)
    assert trace.read_text().startswith("# schema=1 N=7 E=21")

    # round trip: the emitted metric reproduces the terminal residual
    code, out, _ = run(capsys, "curvature", "--mesh", "torus7", "--inv-dist", "0.5",
                       "--radii", str(final), "--alpha", "1")
    assert code == 0
    again = json.loads(out)["report"]["residual_inf"]
    assert abs(again - data["residual_inf"]) < 1e-12


def test_flow_is_deterministic(capsys, tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"t{k}.csv"
        run(capsys, "flow", "--mesh", "octahedron", "--inv-dist", "0.3", "--perturb",
            "0.2", "--seed", "5", "--trace-out", str(p))
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_perturbation_helper():
    u = initial_log_radii(np.ones(9), 0.3, seed=3, unit_product=False)
    assert abs(u.sum()) < 1e-14
    assert np.max(np.abs(u)) == pytest.approx(0.3)
    v = initial_log_radii(np.full(4, 2.0), 0.0, seed=0, unit_product=True)
    np.testing.assert_allclose(v, 0.0, atol=1e-15)


def test_flow_max_time_exit_code(capsys):
    code, _, _ = run(capsys, "flow", "--mesh", "icosahedron", "--inv-dist", "0.2",
                     "--perturb", "0.3", "--max-time", "0.001")
    assert code == 3


def test_flow_newton(capsys):
    code, out, err = run(capsys, "flow", "--mesh", "icosahedron", "--perturb", "0.3",
                         "--method", "newton")
    assert code == 0
    data = json.loads(out)
    assert data["iterations"] <= 10
    assert err.count("newton iteration") == data["iterations"] + 1


def test_audit_commands(capsys, tet_off, tmp_path):
    code, out, err = run(capsys, "audit", "--mesh", tet_off, "--inv-dist", "0",
                         "--curvature-from-radii", "ones", "--alpha", "0", "--exhaustive")
    assert code == 0
    assert json.loads(out)["report"]["verdict"] == "InY"
    assert "smallest margins" in err
    code, _, err = run(capsys, "audit", "--mesh", "bipyramid-28",
                       "--curvature-from-radii", "ones", "--exhaustive")
    assert code == 2 and "SubsetBudgetExceeded" in err
    out_file = tmp_path / "audit.json"
    code, _, _ = run(capsys, "audit", "--mesh", "bipyramid-28", "--curvature-from-radii",
                     "ones", "--sampled", "5000", "--out", str(out_file))
    assert code == 0
    assert json.loads(out_file.read_text())["report"]["subsets_examined"] == 5060


def test_audit_full_table(capsys, tmp_path):
    x = tmp_path / "x.json"
    x.write_text(json.dumps([PI] * 4))
    code, out, _ = run(capsys, "audit", "--mesh", "tetrahedron", "--curvature", str(x),
                       "--full-table")
    rows = json.loads(out)["report"]["rows"]
    assert code == 0 and len(rows) == 14


def test_spectrum_commands(capsys, tmp_path):
    code, out, err = run(capsys, "spectrum", "--mesh", "torus7", "--alpha", "3",
                         "--hessian")
    data = json.loads(out)
    assert code == 0 and data["report"]["verdict"] == "yes"
    assert data["report"]["stability_margin"] == pytest.approx(data["report"]["lambda_1"])
    assert np.array(data["hessian"]).shape == (7, 7)
    assert "yes" in err
    code, out, _ = run(capsys, "spectrum", "--mesh", "icosahedron", "--alpha", "10")
    assert code == 0 and json.loads(out)["report"]["verdict"] == "no"

    s = tetrahedron()
    I = np.zeros(6)
    I[s.edge_index(0, 1)] = 100.0
    f = tmp_path / "inv.json"
    f.write_text(json.dumps(I.tolist()))
    code, _, err = run(capsys, "spectrum", "--mesh", "tetrahedron", "--inv-dist", str(f))
    assert code == 2 and "NotInOmega" in err


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--mesh", "torus7", "--inv-dist", "0.5",
                       "--radii", "ones", "--alphas=-1,0,2", "--workers", "2")
    runs = json.loads(out)["runs"]
    assert code == 0
    assert [r["alpha"] for r in runs] == [-1.0, 0.0, 2.0]
    assert all(r["status"] == "Converged" for r in runs)


def test_console_entry_point(tet_off):
    proc = subprocess.run(
        [sys.executable, "-m", "invflow", "curvature", "--mesh", tet_off],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["schema"] == 1


def test_off_with_colours_and_inline_counts(tmp_path):
    body = TET_OFF.replace("OFF\n# regular tetrahedron, coordinates are ignored\n4 4 6",
                           "OFF 4 4 6")
    body = body.replace("3 1 2 3", "3 1 2 3 255 0 0")
    p = tmp_path / "coloured.off"
    p.write_text(body)
    assert io.read_off(p).digest() == tetrahedron().digest()
    p.write_text("OFF\n4 4 6\n0 0 0\n")
    with pytest.raises(ValidationError):
        io.read_off(p)
