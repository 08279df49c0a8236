import json
import math
import subprocess
import sys

import pytest

from alexgeo.cli import main
from alexgeo.spaces import regular_tetrahedron


@pytest.fixture
def cone_file(tmp_path):
    p = tmp_path / "cone.json"
    p.write_text(json.dumps({"type": "cone", "total_angle": "3pi/2"}))
    return str(p)


@pytest.fixture
def tetra_file(tmp_path):
    p = tmp_path / "tetra.json"
    p.write_text(json.dumps(regular_tetrahedron().describe()))
    return str(p)


@pytest.fixture
def square_file(tmp_path):
    p = tmp_path / "square.json"
    p.write_text(json.dumps(
        {"type": "polygon", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    return str(p)


class TestCommands:
    def test_distance_matches_law_of_cosines(self, cone_file, tmp_path, capsys):
        rc = main(["distance", "--space", cone_file, "--p", "1,0",
                   "--q", "1,5pi/4", "--prefix", str(tmp_path / "d")])
        out = capsys.readouterr().out
        assert rc == 0
        assert "0.765367" in out

    def test_parse_error_exits_2(self, cone_file, tmp_path):
        rc = main(["distance", "--space", cone_file, "--p", "junk",
                   "--q", "1,0", "--prefix", str(tmp_path / "d")])
        assert rc == 2

    def test_missing_space_file_exits_2(self, tmp_path):
        rc = main(["distance", "--space", str(tmp_path / "none.json"),
                   "--p", "1,0", "--q", "1,1", "--prefix", str(tmp_path / "d")])
        assert rc == 2

    def test_trace_qg_artifacts(self, tetra_file, tmp_path, capsys):
        prefix = str(tmp_path / "tq")
        rc = main(["trace-qg", "--space", tetra_file, "--from", "F0:0.2,0.3",
                   "--dir", "1.1", "--length", "3", "--check", "--probes", "4",
                   "--out", "all", "--prefix", prefix])
        assert rc == 0
        report = json.loads((tmp_path / "tq.json").read_text())
        assert report["schema"] == "alexgeo/1"
        assert report["check"]["passed"] is True
        assert (tmp_path / "tq.svg").read_text().startswith("<svg")

    def test_csv_deterministic(self, tetra_file, tmp_path):
        outs = []
        for k in range(2):
            prefix = str(tmp_path / f"t{k}")
            main(["trace-qg", "--space", tetra_file, "--from", "F0:0.2,0.3",
                  "--dir", "1.1", "--length", "2", "--out", "csv",
                  "--prefix", prefix])
            outs.append((tmp_path / f"t{k}.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_gradient_command(self, cone_file, tmp_path, capsys):
        rc = main(["gradient", "--space", cone_file, "--p", "2,1",
                   "--function", '{"op":"dist","q":"1,1"}',
                   "--prefix", str(tmp_path / "g")])
        assert rc == 0
        assert "|grad| = 1" in capsys.readouterr().out

    def test_check_concavity_pass_and_fail(self, square_file, tmp_path):
        rc = main(["check-concavity", "--space", square_file, "--p", "0.5,0.5",
                   "--radius", "0.4", "--lam", "0",
                   "--function", '{"op":"boundary_dist"}',
                   "--samples", "40", "--prefix", str(tmp_path / "c")])
        assert rc == 0
        rc = main(["check-concavity", "--space", square_file, "--p", "0.5,0.5",
                   "--radius", "0.4", "--lam", "-0.5",
                   "--function", '{"op":"boundary_dist"}',
                   "--samples", "40", "--prefix", str(tmp_path / "c2")])
        assert rc == 1

    def test_detect_extremal(self, square_file, tmp_path, capsys):
        rc = main(["detect-extremal", "--space", square_file,
                   "--prefix", str(tmp_path / "e")])
        assert rc == 0
        report = json.loads((tmp_path / "e.json").read_text())
        kinds = [c["kind"] for c in report["candidates"]]
        assert "boundary" in kinds

    def test_inf_conv(self, cone_file, tmp_path, capsys):
        rc = main(["inf-conv", "--space", cone_file, "--p", "1.2,0.4",
                   "--eps", "0.5", "--lip", "4",
                   "--function",
                   '{"op":"affine","weights":[-0.5],"terms":[{"op":"dist_sq","q":"1,0"}]}',
                   "--prefix", str(tmp_path / "ic")])
        assert rc == 0

    def test_suite_quick_subset(self, tmp_path, capsys):
        rc = main(["suite", "--quick", "--only", "1,7",
                   "--prefix", str(tmp_path / "s")])
        assert rc == 0
        report = json.loads((tmp_path / "s.json").read_text())
        assert all(r["passed"] for r in report["results"])
        assert {r["number"] for r in report["results"]} == {1, 7}

    def test_entry_point_runs(self, cone_file, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "alexgeo.cli", "distance", "--space",
             cone_file, "--p", "1,0", "--q", "1,pi"],
            capture_output=True, text=True, cwd=tmp_path, timeout=120)
        assert proc.returncode == 0
        assert proc.stdout.strip().splitlines()[0] == "1.414214"
