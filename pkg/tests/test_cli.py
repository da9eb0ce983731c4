import json
import os

import numpy as np
import pytest

from volball import cli, fileio
from volball.remesh import uniform_ball_mesh
from volball.synthetic import hemispheric_population


@pytest.fixture(scope="module")
def ball_file(tmp_path_factory):
    mesh = uniform_ball_mesh(1)
    path = tmp_path_factory.mktemp("meshes") / "ball.mesh"
    fileio.save_mesh(str(path), mesh.vertices, mesh.tets)
    return str(path)


def test_param_3ddem_volume(tmp_path, ball_file):
    out = tmp_path / "run"
    code = cli.main(["param", "--method", "3ddem", "--population", "volume",
                     ball_file, str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert set(report) == {"method", "config", "iterations", "final"}
    assert report["method"] == "3ddem"
    assert "var_rho" in report["final"]
    assert report["final"]["folds"] == 0
    assert (out / "result.mesh").exists()
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,E_3DQC,E_3DDEM,E_3DDEQ,var_rho,mean_K,sd_K,folds_pre,folds_post"


def test_param_missing_population_exit_1(tmp_path, ball_file, capsys):
    code = cli.main(["param", "--method", "3ddem", ball_file, str(tmp_path / "o")])
    assert code == 1
    assert "population" in capsys.readouterr().err


def test_param_bad_file_exit_1(tmp_path, capsys):
    code = cli.main(["param", "--method", "3dqc", str(tmp_path / "nope.mesh"),
                     str(tmp_path / "o")])
    assert code == 1


def test_param_3dqc_monotone_series(tmp_path, ball_file):
    out = tmp_path / "qc"
    code = cli.main(["param", "--method", "3dqc", ball_file, str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    E = [it["E_3DQC"] for it in report["iterations"]]
    assert all(b <= a for a, b in zip(E, E[1:]))


def test_metrics_identity_pair(tmp_path, ball_file, capsys):
    code = cli.main(["metrics", ball_file, "--mapped", ball_file])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mean_K"] == pytest.approx(1.0, abs=1e-9)
    assert out["folds"] == 0
    assert {"mean_K", "sd_K", "var_rho0", "var_rho", "folds",
            "delta_size", "delta_shape"} <= set(out)


def test_metrics_mirrored_pair(tmp_path, ball_file, capsys):
    mesh = fileio.load_mesh(ball_file)
    mirrored = mesh.vertices * np.array([-1.0, 1.0, 1.0])
    mpath = tmp_path / "mirror.mesh"
    # write mirrored coordinates with the ORIGINAL connectivity
    fileio.save_mesh(str(mpath), mirrored, mesh.tets)
    # loading canonicalizes orientation, so compare through raw arrays instead
    from volball.distortion import frame_decompose, jacobian_per_tet
    assert mesh.count_folds(mirrored) == len(mesh.tets)


def test_convert_roundtrip_bytes(tmp_path, ball_file):
    msh = tmp_path / "a.msh"
    back = tmp_path / "b.mesh"
    assert cli.main(["convert", ball_file, str(msh)]) == 0
    assert cli.main(["convert", str(msh), str(back)]) == 0
    m0 = fileio.load_mesh(ball_file)
    m2 = fileio.load_mesh(str(back))
    np.testing.assert_array_equal(m0.vertices, m2.vertices)
    np.testing.assert_array_equal(m0.tets, m2.tets)


def test_convert_to_vtk(tmp_path, ball_file):
    vtk = tmp_path / "out.vtk"
    assert cli.main(["convert", ball_file, str(vtk)]) == 0
    text = vtk.read_text().splitlines()
    assert text[3] == "DATASET UNSTRUCTURED_GRID"
    assert text[-1] == "10"


def test_init_ball_command(tmp_path, ball_file):
    out = tmp_path / "ib"
    assert cli.main(["init-ball", ball_file, str(out)]) == 0
    ball = fileio.load_mesh(str(out / "ball.mesh"))
    norms = np.linalg.norm(ball.vertices[ball.boundary_vertex_mask], axis=1)
    assert np.abs(norms - 1).max() < 1e-12


def test_population_file_source(tmp_path, ball_file):
    mesh = fileio.load_mesh(ball_file)
    pop = hemispheric_population(mesh, 2.0)
    csv = tmp_path / "pop.csv"
    with open(csv, "w") as fh:
        fh.write("tet_index,population\n")
        for i, p in enumerate(pop):
            fh.write(f"{i},{float(p)!r}\n")
    out = tmp_path / "run"
    code = cli.main(["param", "--method", "3ddem",
                     "--population", f"file:{csv}", ball_file, str(out)])
    assert code == 0


def test_histogram_export(tmp_path, ball_file):
    out = tmp_path / "run"
    hist = tmp_path / "hist.csv"
    code = cli.main(["param", "--method", "3ddem", "--population", "volume",
                     "--histogram", str(hist), ball_file, str(out)])
    assert code == 0
    lines = hist.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count"
    assert len(lines) == 51


def test_remesh_command(tmp_path, ball_file):
    out = tmp_path / "rm"
    code = cli.main(["remesh", "--method", "3dqc", "--resolution", "1",
                     ball_file, str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert "delta_size" in report["final"] and "delta_shape" in report["final"]
    assert (out / "remeshed.mesh").exists()
    assert (out / "remeshed.vtk").exists()


def test_cli_determinism(tmp_path, ball_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = cli.main(["param", "--method", "3ddem", "--population", "volume",
                         ball_file, str(out)])
        assert code == 0
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]
