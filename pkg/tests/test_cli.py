import json

import pytest

from config_loader import config
from run import EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, EXIT_SOLVER, main


@pytest.fixture
def grasp_file(grasps_dir):
    return lambda name: str(grasps_dir / f"{name}.json")


@pytest.mark.smoke
def test_enum2d_prints_counts(grasp_file, capsys, tmp_path):
    out = tmp_path / "enum.json"
    assert main(["enum2d", grasp_file("grasp2"), "--json-out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "slip cells: 26" in text
    assert "detach states: 6" in text
    record = json.loads(out.read_text(encoding="utf-8"))
    assert record["generic_count"] == 26
    assert record["region_bound"] == 8


def test_enum2d_with_wrench_sets_exit_code(grasp_file):
    assert main(["enum2d", grasp_file("grasp2"), "--w", "0,1,0"]) == EXIT_OK
    assert main(["enum2d", grasp_file("grasp2"), "--w", "0,1.1,0"]) == EXIT_NEGATIVE


def test_check_planar_and_iterative(grasp_file, capsys):
    assert main(["check", grasp_file("grasp2"), "--w", "0,0,0"]) == EXIT_OK
    assert "grasp2: stable" in capsys.readouterr().out
    assert main(["check", grasp_file("two_finger_box"), "--solver", "iterative", "--w", "0,3,0,0,0,0"]) == EXIT_NEGATIVE
    assert "two_finger_box: unstable" in capsys.readouterr().out


def test_closure(grasp_file):
    assert main(["closure", grasp_file("package")]) == EXIT_OK
    assert main(["closure", grasp_file("twist")]) == EXIT_NEGATIVE


def test_map_writes_csv(grasp_file, tmp_path):
    out = tmp_path / "map.csv"
    code = main(["map", grasp_file("grasp2"), "--step", "90", "--workers", "1", "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "angle_deg,magnitude,status"
    assert [line.split(",")[0] for line in lines[1:]] == ["0", "90", "180", "270"]


def test_input_errors_exit_2(grasp_file, tmp_path, capsys):
    assert main(["check", str(tmp_path / "nope.json"), "--w", "0,0,0"]) == EXIT_INPUT
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error_code"] == "GRASP_FILE_INVALID"

    assert main(["check", grasp_file("grasp2"), "--w", "0,0"]) == EXIT_INPUT
    assert main(["enum2d", grasp_file("cube")]) == EXIT_INPUT
    assert main(["check", grasp_file("grasp2")]) == EXIT_INPUT
    assert main(["frobnicate"]) == EXIT_INPUT


def test_round_limit_exits_3(grasp_file, capsys, monkeypatch):
    monkeypatch.setitem(config.config["relaxation"], "max_rounds", 1)
    code = main(["maxdist", grasp_file("two_finger_box"), "--q", "6", "--d", "0,1,0,0,0,0"])
    assert code == EXIT_SOLVER
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error_code"] == "SOLVER_RESOURCE_LIMIT"
    assert error["incumbent"] is not None
