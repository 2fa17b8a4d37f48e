import csv
import io
import json

import pytest

from spade.cli import main
from spade.scenarios import FIXTURES


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def graph_file(tmp_path, capsys):
    path = tmp_path / "g.json"
    assert main(["generate", "--targets", "4", "--seed", "3", "--out", str(path)]) == 0
    capsys.readouterr()
    return path


def disconnected_doc():
    def target(t):
        return {
            "id": t,
            "pose": [20.0 * t, 0, 0],
            "transition_level": 0,
            "levels": [{"id": 0, "pose": [20.0 * t, 0, 0], "poses": [{"id": 0, "pose": [20.0 * t + 1, 0, 0]}]}],
        }

    return {"targets": [target(0), target(1)], "target_edges": []}


def test_validate(capsys, caplog, graph_file, tmp_path):
    code, out, _ = run(capsys, "validate", str(graph_file))
    assert code == 0 and json.loads(out)["valid"] is True
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"targets": [{"id": 0}]}))
    code, out, _ = run(capsys, "validate", str(bad))
    assert code == 1 and json.loads(out)["valid"] is False
    assert "SchemaError" in caplog.text


def test_plan_disconnected(capsys, tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps(disconnected_doc()))
    code, out, _ = run(capsys, "plan", str(path), "--from", "0/0/0", "--to", "1")
    assert code == 2
    assert json.loads(out)["error"] == "NoRoute"


def test_plan_ok(capsys, graph_file):
    code, out, _ = run(capsys, "plan", "--graph", str(graph_file), "--from", "0/0/4", "--to", "3", "--k", "2")
    assert code == 0
    res = json.loads(out)
    assert res["route"][0] == 0 and res["route"][-1] == 3
    assert len(res["segments"]) == len(res["route"]) - 1
    assert res["alternatives"] == 2


def test_simulate_urban(capsys, tmp_path):
    path = tmp_path / "urban.json"
    path.write_text(json.dumps(FIXTURES["urban_grid"](0).to_dict()))
    code, out, _ = run(capsys, "simulate", str(path))
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    names = [x.get("event") for x in lines[:-1]]
    assert names.count("GlobalReplan") >= 2
    assert names[-1] == "Arrived"
    assert lines[-1]["summary"]["statuses"] == ["Arrived"]


def strip_wall(text):
    lines = [json.loads(x) for x in text.splitlines()]
    lines[-1]["summary"]["metrics"].pop("wall_time_s")
    return lines


def test_simulate_stdout_deterministic(capsys, tmp_path):
    path = tmp_path / "ring.json"
    path.write_text(json.dumps(FIXTURES["pose_ring"](2).to_dict()))
    _, a, _ = run(capsys, "simulate", str(path))
    _, b, _ = run(capsys, "simulate", str(path))
    assert strip_wall(a) == strip_wall(b)


def test_generate_deterministic(capsys):
    _, a, _ = run(capsys, "generate", "--targets", "5", "--seed", "8", "--observational-frac", "0.5")
    _, b, _ = run(capsys, "generate", "--targets", "5", "--seed", "8", "--observational-frac", "0.5")
    assert a == b and json.loads(a)["targets"]


def test_subsample(capsys, tmp_path):
    path = tmp_path / "g.json"
    main(["generate", "--targets", "9", "--observational-frac", "1.0", "--out", str(path)])
    capsys.readouterr()
    code, out, _ = run(capsys, "subsample", str(path))
    res = json.loads(out)
    assert code == 0
    assert res["edges_sub"] * 2 == res["edges_total"]
    assert all(e["type"] == "traversability" for e in res["edges"])


def test_bench_csv(capsys, tmp_path):
    out_file = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bench", "--sizes", "50,100", "--reps", "3", "--out", str(out_file))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(out_file.read_text())))
    assert [int(r["nodes"]) for r in rows] == [50, 100]


@pytest.mark.parametrize(
    "argv",
    [
        ["bench", "--sizes", "x"],
        ["bench", "--reps", "0"],
        ["generate", "--resolution", "-1"],
        ["generate", "--traversable-frac", "2"],
        ["simulate", "nowhere.json"],
        ["simulate", "x.json", "--speed", "0"],
        ["plan", "g.json", "--to", "1"],
        ["nonsense"],
    ],
)
def test_input_errors(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 3
    if out:
        assert "error" in json.loads(out)


def test_logs_stay_on_stderr(capsys, graph_file):
    code, out, _ = run(capsys, "-vv", "validate", str(graph_file))
    assert code == 0
    json.loads(out)
