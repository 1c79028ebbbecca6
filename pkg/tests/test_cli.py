import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dairyplan.cli import main
from dairyplan.fileio import read_instance

GA_QUICK = ["--population", "6", "--generations", "3"]


def files_of(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.name != "timings.json"}


@pytest.fixture
def tiny_file(tmp_path):
    assert main(["generate", "--tiny", "--seed", "1", "--override", "VTC=0.1:1",
                 "--override", "IC=0.05:0.2", "--out", str(tmp_path / "gen")]) == 0
    return tmp_path / "gen" / "instance.json"


def test_generate_twice_is_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", "--size", "small", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    assert files_of(tmp_path / "a") == files_of(tmp_path / "b")
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["arguments"]["seed"] == 7 and man["arguments"]["size"] == "small"
    assert set(man["outputs"]) == {"instance.json"}
    assert set(man["versions"]) >= {"dairyplan", "numpy", "scipy"}


def test_case_study_solve_writes_reports(tmp_path, capsys):
    out = tmp_path / "cs"
    assert main(["solve", "case-study", *GA_QUICK, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    head = (out / "production.txt").read_text().splitlines()[0].split()
    assert head[:2] == ["Line", "Product"] and head[2:] == [f"P{i}" for i in range(1, 6)]
    rows = list(csv.reader((out / "routes.csv").open()))
    assert rows[0] == ["period", "route", "served", "number", "total"]
    for r in rows[1:]:
        assert 500 <= float(r[4]) <= 1500
        assert r[2].startswith("Canbo")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["feasible"] is True and summary["violated_constraints"] == []
    assert "Served DCs" in printed


def test_corrupted_solution_fails_audit(tmp_path, tiny_file, capsys):
    out = tmp_path / "s"
    assert main(["solve", str(tiny_file), *GA_QUICK, "--out", str(out)]) == 0
    assert main(["audit", str(tiny_file), str(out / "solution.json")]) == 0
    data = json.loads((out / "solution.json").read_text())
    Q = np.array(data["Q"])
    Q[0, 0, 0] = 5000.0
    data["Q"] = Q.tolist()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    capsys.readouterr()
    assert main(["audit", str(tiny_file), str(bad), "--out", str(tmp_path / "audit")]) == 1
    text = capsys.readouterr().out
    listed = text.split("violated constraints: ")[1].splitlines()[0].split(", ")
    assert "C14" in listed
    report = json.loads((tmp_path / "audit" / "audit.json").read_text())
    assert report["feasible"] is False and report["violated_constraints"] == listed


@pytest.mark.parametrize("argv", [
    ["sweep", "case-study", "--parameter", "alpha", "--values", "", "--out", "x"],
    ["solve", "no/such/file.json", "--out", "x"],
    ["frobnicate"],
    ["generate", "--override", "VTC=cheap", "--out", "x"],
    ["sweep", "case-study", "--parameter", "crrate", "--values", "1.5", "--out", "x"],
])
def test_usage_errors_exit_2(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_validation_error_exits_3(tmp_path, tiny_file):
    doc = json.loads(tiny_file.read_text())
    doc["parameters"]["CrRate"][0] = 1.3
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(doc))
    assert main(["solve", str(broken), "--out", str(tmp_path / "o")]) == 3
    assert main(["export", str(tiny_file), "--out", str(tmp_path / "o"), "--alpha", "2"]) == 3


def test_node_budget_exits_4(tmp_path, tiny_file):
    out = tmp_path / "ex"
    assert main(["solve", str(tiny_file), "--method", "exact", "--budget-nodes", "3",
                 "--out", str(out)]) == 4
    assert json.loads((out / "summary.json").read_text())["proven_optimal"] is False


def test_oversized_exact_run_exits_4(tmp_path):
    assert main(["solve", "case-study", "--method", "exact", "--out", str(tmp_path / "o")]) == 4


def test_exact_solve_and_export_agree(tmp_path, tiny_file):
    assert main(["solve", str(tiny_file), "--method", "exact", "--out", str(tmp_path / "ex")]) == 0
    summary = json.loads((tmp_path / "ex" / "summary.json").read_text())
    assert summary["proven_optimal"] and summary["feasible"]
    for fmt in ("lp", "mps"):
        assert main(["export", str(tiny_file), "--format", fmt, "--out", str(tmp_path / fmt)]) == 0
        man = json.loads((tmp_path / fmt / "manifest.json").read_text())
        assert set(man["outputs"]) == {f"model.{fmt}", f"model.{fmt}.map.json"}


def test_alpha_one_sweep_row_matches_plain_run(tmp_path, tiny_file):
    assert main(["sweep", str(tiny_file), "--parameter", "alpha", "--values", "1.0,0.5",
                 "--method", "exact", "--gamma", "2", "--out", str(tmp_path / "sw")]) == 0
    rows = json.loads((tmp_path / "sw" / "sweep.json").read_text())["rows"]
    assert rows[0]["robust_penalty"] == 0.0 and rows[1]["robust_penalty"] > 0.0
    assert main(["solve", str(tiny_file), "--method", "exact", "--out", str(tmp_path / "plain")]) == 0
    plain = json.loads((tmp_path / "plain" / "summary.json").read_text())
    assert rows[0]["Z"] == plain["value"]
    for key, value in plain["statistics"].items():
        assert rows[0][key] == value


def test_parallel_sweep_is_identical(tmp_path, tiny_file):
    args = ["sweep", str(tiny_file), "--parameter", "shelflife", "--values", "1,2,30", "--method", "exact"]
    assert main(args + ["--out", str(tmp_path / "serial")]) == 0
    assert main(args + ["--jobs", "3", "--out", str(tmp_path / "parallel")]) == 0
    assert files_of(tmp_path / "serial") == files_of(tmp_path / "parallel")
    table = list(csv.DictReader((tmp_path / "serial" / "sweep.csv").open()))
    assert [float(r["value"]) for r in table] == [1.0, 2.0, 30.0]
    assert float(table[0]["Z"]) >= float(table[1]["Z"]) >= float(table[2]["Z"])


def test_manifest_regenerates_outputs(tmp_path, tiny_file):
    out = tmp_path / "r1"
    assert main(["solve", str(tiny_file), *GA_QUICK, "--seed", "4", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    a = man["arguments"]
    again = ["solve", a["instance"], "--seed", str(a["seed"]), "--population", str(a["population"]),
             "--generations", str(a["generations"]), "--decoder", a["decoder"], "--out", str(tmp_path / "r2")]
    assert main(again) == 0
    assert files_of(out) == files_of(tmp_path / "r2")


def test_module_entry_point(tmp_path, tiny_file):
    proc = subprocess.run([sys.executable, "-m", "dairyplan", "audit", str(tiny_file), "missing.json"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 3
    assert "validation error" in proc.stderr
    inst = read_instance(tiny_file)
    assert inst.num_dcs >= 2
