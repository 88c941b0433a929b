"""End-to-end CLI behavior: JSON payloads, exit codes, resume, CSV, --fix."""

import json

import numpy as np
import pytest

import ddehopf as dh
from ddehopf.cli import main

PI_2 = float(np.pi / 2.0)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv):
    code, out, err = run(capsys, argv)
    assert code == 0, err
    return json.loads(out), err


# ---------------------------------------------------------------------------
# happy paths
# ---------------------------------------------------------------------------


def test_find_hopf_hayes(capsys):
    data, _ = run_json(
        capsys,
        ["find-hopf", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0", "--free", "1"],
    )
    assert data["command"] == "find-hopf"
    assert data["model"] == "hayes"
    assert abs(data["alpha"][1] - PI_2) < 1e-6
    assert abs(data["omega"] - PI_2) < 1e-6
    assert data["sigma"] == 0.0
    assert data["residual_norm"] < 1e-9
    assert "alpha_full" not in data  # nothing was fixed


def test_find_hopf_floats_roundtrip_losslessly(capsys):
    data, _ = run_json(
        capsys,
        ["find-hopf", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0", "--free", "1"],
    )
    sol = dh.margin_point_from_alpha(dh.get_model("hayes"), 0.0, [0.0, 1.5, 1.0], free_index=1)
    assert data["omega"] == sol.omega
    assert data["alpha"] == sol.alpha.tolist()
    assert data["a"] == sol.a.tolist()


def test_steady_sd_source(capsys):
    data, _ = run_json(capsys, ["steady", "--model", "sd-source", "--alpha", "1,1,1,1,0.2"])
    assert data["command"] == "steady"
    assert abs(data["x_tilde"][0] - 0.5) < 1e-10
    assert abs(data["tau_values"][1] - 1.1) < 1e-10
    assert data["tau_values"][0] == 0.0


def test_eigs_reports_roots(capsys):
    data, _ = run_json(capsys, ["eigs", "--model", "hayes", "--alpha", "0,1.5,1"])
    roots = data["roots"]
    assert roots
    for entry in roots:
        assert set(entry) == {"re", "im", "residual"}
        assert entry["residual"] < 1e-8
    # sorted by descending real part, conjugates both present
    res = [r["re"] for r in roots]
    assert res == sorted(res, reverse=True)
    ims = [r["im"] for r in roots]
    assert any(i > 0 for i in ims) and any(i < 0 for i in ims)


def test_normal_vector_matches_closed_form(capsys):
    data, _ = run_json(
        capsys,
        ["normal-vector", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0", "--free", "1"],
    )
    expected = np.array([-1.0, PI_2, PI_2**2])
    expected /= np.linalg.norm(expected)
    assert np.max(np.abs(np.array(data["r"]) - expected)) < 1e-8
    assert data["kernel_dim"] == 1
    assert data["sign_convention"] == "largest-magnitude-component-positive"


def test_verify_reports_all_checks_passing(capsys):
    data, err = run_json(
        capsys,
        ["verify", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0", "--free", "1"],
    )
    assert data["report"]["passed"] is True
    assert len(data["report"]["checks"]) == 36
    assert "verification passed (36 checks)" in err


def test_continue_json_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "branch.csv"
    data, err = run_json(
        capsys,
        [
            "continue", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0",
            "--free", "1", "--direction", "0,0,1", "--steps", "3",
            "--csv", str(csv_path),
        ],
    )
    assert "accepted 3 continuation steps" in err
    points = data["points"]
    assert len(points) == 4
    assert [p["index"] for p in points] == [0, 1, 2, 3]
    taus = [p["alpha"][2] for p in points]
    assert all(y > x for x, y in zip(taus, taus[1:]))

    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "a_p,b_p,tau,omega,index"
    assert len(lines) == 5
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert len(cells) == 5
        assert int(cells[4]) == i
        # repr floats reparse to the exact payload values
        assert float(cells[3]) == points[i]["omega"]


def test_out_file_matches_stdout(capsys, tmp_path):
    out_path = tmp_path / "point.json"
    code, out, err = run(
        capsys,
        ["find-hopf", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0",
         "--free", "1", "--out", str(out_path)],
    )
    assert code == 0
    assert out_path.read_text() == out
    assert f"wrote {out_path}" in err


def test_fix_accepts_full_or_reduced_vectors(capsys):
    argv_full = [
        "closest-point", "--model", "hayes", "--fix", "tau=1.0",
        "--alpha", "0,1.5,1", "--sigma", "0", "--free", "1",
        "--nominal", "0,1.2,1",
    ]
    argv_reduced = [
        "closest-point", "--model", "hayes", "--fix", "tau=1.0",
        "--alpha", "0,1.5", "--sigma", "0", "--free", "1",
        "--nominal", "0,1.2",
    ]
    full, _ = run_json(capsys, argv_full)
    reduced, _ = run_json(capsys, argv_reduced)
    assert full["distance"] == reduced["distance"]
    assert abs(full["distance"] - (-0.3142283407)) < 1e-6
    assert full["alpha_nominal"] == [0.0, 1.2]
    assert full["alpha_full"][2] == 1.0  # embedded back into the parent layout
    assert len(full["boundary"]["alpha"]) == 2


# ---------------------------------------------------------------------------
# resume
# ---------------------------------------------------------------------------


def test_resume_roundtrip(capsys, tmp_path):
    out_path = tmp_path / "point.json"
    first, _ = run_json(
        capsys,
        ["find-hopf", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0",
         "--free", "1", "--out", str(out_path)],
    )
    resumed, err = run_json(
        capsys, ["find-hopf", "--model", "hayes", "--resume", str(out_path)]
    )
    assert "resumed point verified" in err
    assert resumed["omega"] == first["omega"]
    assert resumed["alpha"] == first["alpha"]


def test_resume_rejects_stale_point(capsys, tmp_path):
    out_path = tmp_path / "point.json"
    run_json(
        capsys,
        ["find-hopf", "--model", "hayes", "--alpha", "0,1.5,1", "--sigma", "0",
         "--free", "1", "--out", str(out_path)],
    )
    data = json.loads(out_path.read_text())
    data["omega"] += 0.05
    out_path.write_text(json.dumps(data))
    code, _, err = run(capsys, ["find-hopf", "--model", "hayes", "--resume", str(out_path)])
    assert code == 2
    assert "error:" in err


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def _write_model(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


def test_exit_2_unknown_model(capsys):
    code, out, err = run(capsys, ["steady", "--model", "nosuch", "--alpha", "1"])
    assert code == 2
    assert out == ""
    assert "error:" in err


def test_exit_2_argparse_usage(capsys):
    code, _, err = run(capsys, ["steady", "--model", "hayes"])  # missing --alpha
    assert code == 2
    assert "--alpha" in err


def test_exit_2_missing_sigma(capsys):
    code, _, err = run(
        capsys, ["normal-vector", "--model", "hayes", "--alpha", "0,1.5,1", "--free", "1"]
    )
    assert code == 2
    assert "sigma" in err


def test_exit_3_steady_stall(capsys, tmp_path):
    path = _write_model(
        tmp_path, "stall.json",
        {"n": 1, "n_alpha": 1, "delays": [], "f": ["cos(x1) + a1"]},
    )
    code, out, err = run(
        capsys, ["steady", "--model", path, "--alpha", "2.0", "--guess", "0.5"]
    )
    assert code == 3
    assert out == ""
    assert "error:" in err


def test_exit_4_degenerate_margin_point(capsys):
    code, out, err = run(
        capsys,
        ["find-hopf", "--model", "osc2", "--alpha", "0.12,0.1,1", "--sigma", "-0.1", "--free", "0"],
    )
    assert code == 4
    assert out == ""


def test_exit_5_numerical_blowup(capsys, tmp_path):
    path = _write_model(
        tmp_path, "blowup.json",
        {"n": 1, "n_alpha": 1, "delays": [], "f": ["1/x1 - a1"]},
    )
    code, out, err = run(capsys, ["steady", "--model", path, "--alpha", "1.0"])
    assert code == 5
    assert out == ""


def test_error_paths_write_no_files(capsys, tmp_path):
    out_path = tmp_path / "never.json"
    code, _, _ = run(
        capsys,
        ["steady", "--model", "nosuch", "--alpha", "1", "--out", str(out_path)],
    )
    assert code == 2
    assert not out_path.exists()
