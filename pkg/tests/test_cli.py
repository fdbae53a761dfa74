import csv
import json

import pytest

from tierbid.cli import main
from tierbid.harness import plan_to_dict
from test_harness import small_plan


def test_generate_then_solve(tmp_path, capsys):
    assert main(["generate", "--seed", "3", "--num-files", "12", "--num-scenarios", "2",
                 "--out", str(tmp_path)]) == 0
    inst = tmp_path / "instance.json"
    assert json.loads(inst.read_text())["schema_version"] == 1
    for method in ("pm", "is", "gh1", "gh2"):
        out = tmp_path / method
        assert main(["solve", "--instance", str(inst), "--method", method,
                     "--out", str(out)]) == 0
        rows = list(csv.DictReader(open(out / "solution.csv")))
        assert len(rows) == 24
        summary = json.loads((out / "solution_summary.json").read_text())
        assert summary["method"] == method.upper()
    assert "expected profit" in capsys.readouterr().out


def test_solve_json_format(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generator": {"num_files": 5, "num_scenarios": 2}}))
    assert main(["solve", "--config", str(cfg), "--seed", "1", "--method", "gh2",
                 "--format", "json", "--out", str(tmp_path)]) == 0
    assert len(json.loads((tmp_path / "solution.json").read_text())["rows"]) == 10


def test_sweep_from_plan(tmp_path):
    cfg = tmp_path / "plan.json"
    cfg.write_text(json.dumps(plan_to_dict(small_plan(grid=(1.0,), runs=1))))
    assert main(["sweep", "--config", str(cfg), "--method", "gh1", "--method", "gh2",
                 "--seed", "5", "--out", str(tmp_path / "out"), "--quiet"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "results.csv")))
    assert [r["method"] for r in rows] == ["GH1", "GH2"]
    assert rows[0]["seed"] == "5"
    assert (tmp_path / "out" / "summary.json").exists()


def test_sweep_needs_plan(capsys):
    assert main(["sweep"]) == 2


def test_validate_queue(tmp_path, capsys):
    assert main(["validate-queue", "--requests", "20000", "--utilization", "0.3", "0.6",
                 "--out", str(tmp_path), "--format", "json"]) == 0
    data = json.loads((tmp_path / "queue_check.json").read_text())
    assert [r["utilization"] for r in data["rows"]] == [0.3, 0.6]
    assert "P-K wait" in capsys.readouterr().out


def test_oracle(tmp_path):
    assert main(["oracle", "--seed", "2", "--grid", "8", "--method", "pm",
                 "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "oracle.json").read_text())
    assert data["ratio"] >= 0.95


def test_bad_config_reports_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["generate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "config must be a JSON object" in capsys.readouterr().err


def test_unknown_method_rejected():
    with pytest.raises(SystemExit):
        main(["solve", "--method", "xx"])
