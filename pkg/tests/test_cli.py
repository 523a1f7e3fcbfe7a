import json
import math

import numpy as np
import pytest

from sublandscape.cli import main


@pytest.fixture
def square_csv(tmp_path, square):
    p = tmp_path / "square.csv"
    p.write_text("x,y\n" + "\n".join(f"{a},{b}" for a, b in square) + "\n")
    return p


def _json(path):
    return json.loads(path.read_text())


def test_diagram_square(tmp_path, square_csv):
    assert main(["diagram", str(square_csv), "--out", str(tmp_path / "o")]) == 0
    d = _json(tmp_path / "o" / "diagram.json")
    h1 = [(p["birth"], p["death"]) for p in d["points"] if p["dim"] == 1]
    assert h1 == [(1.0, math.sqrt(2))]


def test_diagram_small_threshold(tmp_path, square_csv):
    assert main(["diagram", str(square_csv), "--threshold", "0.5", "--out", str(tmp_path)]) == 0
    assert not [p for p in _json(tmp_path / "diagram.json")["points"] if p["dim"] == 1]


def test_missing_file_and_bad_values(tmp_path, capsys):
    assert main(["diagram", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    assert "missing-file" in capsys.readouterr().err
    assert main(["verify", "bounds", "--m", "1", "--out", str(tmp_path)]) == 2


def test_budget_exit_code(tmp_path):
    main(["gen", "--shape", "uniform-cube", "--count", "60", "--out", str(tmp_path)])
    rc = main(["diagram", str(tmp_path / "points.csv"), "--max-dim", "2", "--budget", "100",
               "--out", str(tmp_path)])
    assert rc == 3


def test_gen(tmp_path):
    assert main(["gen", "--count", "500", "--out", str(tmp_path / "a")]) == 0
    assert main(["gen", "--count", "500", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "points.csv").read_bytes()
    assert a == (tmp_path / "b" / "points.csv").read_bytes()
    assert len(a.decode().splitlines()) == 501
    main(["gen", "--shape", "sphere", "--count", "100", "--out", str(tmp_path / "s")])
    pts = np.loadtxt(tmp_path / "s" / "points.csv", delimiter=",", skiprows=1)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_average_single_subsample_matches_diagram(tmp_path):
    main(["gen", "--count", "80", "--out", str(tmp_path)])
    pts = str(tmp_path / "points.csv")
    assert main(["average", pts, "--m", "80", "--n", "1", "--G", "64",
                 "--out", str(tmp_path / "avg")]) == 0
    rep = _json(tmp_path / "avg" / "report.json")
    assert rep["method"] == "average" and len(rep["diagnostics"]) == 1
    assert "wall_time" not in rep
    lines = (tmp_path / "avg" / "landscape.csv").read_text().splitlines()
    assert lines[0] == "t,k1" and len(lines) == 65


def test_closest_and_band(tmp_path):
    main(["gen", "--count", "100", "--out", str(tmp_path)])
    pts = str(tmp_path / "points.csv")
    assert main(["closest", pts, "--m", "30", "--n", "5", "--G", "64",
                 "--out", str(tmp_path / "c")]) == 0
    rep = _json(tmp_path / "c" / "report.json")
    hs = [d["hausdorff"] for d in rep["diagnostics"]]
    assert hs[rep["selected"]] == min(hs)
    assert main(["average", pts, "--m", "30", "--n", "5", "--G", "64", "--band", "--B", "200",
                 "--out", str(tmp_path / "b")]) == 0
    band = _json(tmp_path / "b" / "band.json")
    assert band["B"] == 200 and band["half_width"] >= 0


def test_dissimilarity(tmp_path):
    main(["gen", "--count", "100", "--out", str(tmp_path / "a")])
    main(["gen", "--count", "100", "--radius", "2", "--out", str(tmp_path / "b")])
    a, b = str(tmp_path / "a" / "points.csv"), str(tmp_path / "b" / "points.csv")
    assert main(["dissimilarity", a, a, b, "--labels", "c1,c1bis,c2", "--m", "30", "--n", "3",
                 "--G", "64", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "dissimilarity.csv").read_text().splitlines()
    assert lines[0] == "c1,c1bis,c2"
    M = np.array([[float(x) for x in row.split(",")] for row in lines[1:]])
    assert np.array_equal(M, M.T) and M[0, 1] == 0 and M[0, 2] > 0


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('# comment\nshape = "sphere"\ncount = 20\nseed = 4\n')
    assert main(["gen", "--config", str(cfg), "--count", "30", "--out", str(tmp_path / "o")]) == 0
    pts = np.loadtxt(tmp_path / "o" / "points.csv", delimiter=",", skiprows=1)
    assert pts.shape == (30, 3)
    cfg.write_text("colour = 3\n")
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text("[gen]\ncount = 3\n")
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_version(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("m = 50\n")
    assert main(["--version", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("sublandscape ") and out[1] == "m = 50"


def test_bounds(tmp_path, capsys):
    assert main(["verify", "bounds", "--r0", "0.5", "--C1", "0", "--C2", "0",
                 "--out", str(tmp_path)]) == 0
    rep = _json(tmp_path / "bounds.json")
    assert rep["average_bias"] == 0.5 and rep["closest_bias"] == 0.5
    assert rep["r_m"] == pytest.approx(2 * math.log(100) / 100, abs=1e-12)
    assert main(["verify", "bounds", "--Kconst", "1", "--vc-dim", "1", "--a-prime", "1",
                 "--N", "100", "--out", str(tmp_path)]) == 0
    assert _json(tmp_path / "bounds.json")["r0_discrete"] == pytest.approx(0.04605170185988, abs=1e-12)


def test_verify_stability_exit_codes(tmp_path):
    X = np.c_[np.arange(12) / 12, np.zeros(12)]
    (tmp_path / "x.csv").write_text("\n".join(f"{a},{b}" for a, b in X))
    (tmp_path / "y.csv").write_text("\n".join(f"{a},{b}" for a, b in X + [0.01, 0.0]))
    args = ["--x", str(tmp_path / "x.csv"), "--y", str(tmp_path / "y.csv"), "--m", "4",
            "--trials", "100", "--dim", "0", "--G", "64", "--out", str(tmp_path)]
    assert main(["verify", "stability-wasserstein", *args]) == 0
    rep = _json(tmp_path / "verify.json")
    assert rep["violated"] is False and rep["rhs"] == pytest.approx(0.04)
    assert main(["verify", "stability-hausdorff", *args]) == 0
    assert main(["verify", "stability-wasserstein", "--x", str(tmp_path / "x.csv"),
                 "--out", str(tmp_path)]) == 2


def test_verify_outlier_small(tmp_path):
    rc = main(["verify", "outlier", "--N", "100", "--m", "20", "--n", "5", "--G", "64",
               "--out", str(tmp_path)])
    rep = _json(tmp_path / "outlier.json")
    assert rc == (1 if rep["violated"] else 0)
    assert rep["R"] == 1 and "average_gap" in rep["replications"][0]


def test_verify_risk_curves_small(tmp_path):
    rc = main(["verify", "risk-curves", "--N", "120", "--ms", "10,40", "--ns", "2,8",
               "--m-var", "20", "--B", "20", "--reps", "4", "--ref-pool", "20", "--G", "64",
               "--out", str(tmp_path)])
    rep = _json(tmp_path / "risk_curves.json")
    assert rc == (1 if rep["violated"] else 0)
    assert [r["m"] for r in rep["bias"]] == [10, 40]


def test_byte_identical_reruns(tmp_path):
    main(["gen", "--count", "60", "--out", str(tmp_path)])
    pts = str(tmp_path / "points.csv")
    runs = [
        ["diagram", pts],
        ["average", pts, "--m", "20", "--n", "4", "--G", "64", "--band", "--B", "100"],
        ["closest", pts, "--m", "20", "--n", "4", "--G", "64"],
        ["dissimilarity", pts, pts, "--m", "20", "--n", "2", "--G", "64"],
        ["verify", "bounds"],
        ["gen", "--count", "10"],
    ]
    for k, cmd in enumerate(runs):
        outs = []
        for rep, threads in enumerate(("1", "2")):
            d = tmp_path / f"r{k}_{rep}"
            assert main([*cmd, "--threads", threads, "--out", str(d)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        assert outs[0] == outs[1], cmd
