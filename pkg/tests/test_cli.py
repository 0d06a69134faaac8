import csv
import json

import numpy as np
import pytest

from amtraj import NumericalError
from amtraj import bench as bench_mod
from amtraj.cli import main


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def problem(tmp_path):
    return write(tmp_path / "p.json", {"waypoints": [[0, 0, 0], [2, 1, 0], [4, 0, 1]],
                                       "constraints": {"v_max": 3.0, "a_max": 3.5}})


def test_gen_stdout_and_file(tmp_path, capsys):
    assert main(["gen", "--pieces", "4", "--seed", "7"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["waypoints"]) == 5
    out = tmp_path / "g.json"
    assert main(["gen", "--pieces", "4", "--seed", "7", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["waypoints"] == doc["waypoints"]


@pytest.mark.parametrize("constrained", [False, True])
def test_optimize_writes_outputs(tmp_path, problem, capsys, constrained):
    samples, traj, rep = tmp_path / "s.csv", tmp_path / "t.json", tmp_path / "r.json"
    args = ["optimize", problem, "--out-samples", str(samples), "--dt", "0.05",
            "--out-trajectory", str(traj), "--report", str(rep)]
    if constrained:
        args.append("--constrained")
    assert main(args) == 0
    assert "cost" in capsys.readouterr().out
    report = json.loads(rep.read_text())
    assert report["constrained"] is constrained and report["pieces"] == 2
    with open(samples) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "t"
    data = np.array(rows[1:], dtype=float)
    assert data[-1, 0] == pytest.approx(report["total_duration"])
    if constrained:
        assert np.linalg.norm(data[:, 4:7], axis=1).max() <= 3.0 + 1e-6
        assert main(["check", str(traj)]) == 0


def test_check_exit_codes(tmp_path, problem, capsys):
    traj = tmp_path / "t.json"
    assert main(["optimize", problem, "--out-trajectory", str(traj)]) == 0
    strict = write(tmp_path / "strict.json", {"waypoints": [[0, 0, 0], [2, 1, 0], [4, 0, 1]],
                                              "constraints": {"v_max": 0.01}})
    capsys.readouterr()
    assert main(["check", str(traj), "--problem", strict]) == 1
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["feasible"] is False and verdict["infeasible_pieces"]


def test_validation_exit_code(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", {"waypoints": [[0, 0, 0]]})
    assert main(["optimize", bad]) == 2
    assert "waypoints" in capsys.readouterr().err
    (tmp_path / "broken.json").write_text("{")
    assert main(["optimize", str(tmp_path / "broken.json")]) == 2
    assert main(["optimize", bad, "--dt", "0"]) == 2
    assert main(["check", str(tmp_path / "nope.json")]) == 2


def test_infeasible_initial_exit_code(tmp_path):
    doc = {"waypoints": [[0, 0, 0], [5, 0, 0]], "constraints": {"obstacles": [{"center": [0, 0, 0], "r_safe": 1.0}]}}
    assert main(["optimize", write(tmp_path / "o.json", doc), "--constrained"]) == 3


def test_numerical_exit_code(problem, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("singular")
    monkeypatch.setattr(bench_mod, "solve_problem", boom)
    assert main(["optimize", problem]) == 4


def test_bench_small(tmp_path, capsys):
    rep = tmp_path / "b.json"
    assert main(["bench", "--pieces", "3", "--trials", "2", "--report", str(rep)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split()[0] == "M"
    doc = json.loads(rep.read_text())
    assert doc["sizes"][0]["pieces"] == 3 and doc["sizes"][0]["completed"] == 2


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
