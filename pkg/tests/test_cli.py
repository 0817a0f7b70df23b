import csv
import json
import subprocess
import sys

import pytest

from stackmec import scenario as scn
from stackmec.cli import main
from stackmec.solver import Algorithm, solve


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "s.json"
    assert main(["generate", "--ues", "20", "--uavs", "3", "--seed", "7", "-o", str(path)]) == 0
    return path


def test_generate_writes_valid_and_repeatable_file(tmp_path, scenario_file):
    s = scn.load(scenario_file)
    assert (s.n_ues, s.n_uavs, s.seed) == (20, 3, 7)
    again = tmp_path / "again.json"
    main(["generate", "--ues", "20", "--uavs", "3", "--seed", "7", "-o", str(again)])
    assert again.read_bytes() == scenario_file.read_bytes()


def test_zero_ues_is_a_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exit_:
        main(["generate", "--ues", "0", "-o", str(tmp_path / "x.json")])
    assert exit_.value.code == 2
    assert "--ues" in capsys.readouterr().err


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generation": {"n_ues": 8, "n_uavs": 2, "height": 80.0}}))
    out = tmp_path / "s.json"
    assert main(["generate", "--config", str(cfg), "--ues", "5", "-o", str(out)]) == 0
    s = scn.load(out)
    assert (s.n_ues, s.n_uavs, s.height) == (5, 2, 80.0)


def test_bad_config_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generation": {"warp_factor": 9}}))
    assert main(["generate", "--config", str(cfg), "-o", str(tmp_path / "s.json")]) == 2


def test_solve_outputs_match_report(tmp_path, scenario_file):
    out = tmp_path / "run"
    assert main(["solve", str(scenario_file), "--out", str(out), "--seed", "3"]) == 0
    rows = read_csv(out / "trace.csv")
    assert list(rows[0]) == ["iter", "U_con", "mean_U_i", "max_strategy_change"]
    report = solve(scn.load(scenario_file), Algorithm.CPPO, seed=3)
    assert len(rows) == report.outer_iterations
    for row, rec in zip(rows, report.trace):
        assert int(row["iter"]) == rec.iteration
        assert float(row["U_con"]) == rec.controller_utility
        assert float(row["mean_U_i"]) == rec.mean_ue_utility
        assert float(row["max_strategy_change"]) == rec.max_change
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["prices"] == report.profile.prices.tolist()
    assert b"\r\n" not in (out / "trace.csv").read_bytes()


def test_cross_section_peaks_at_recorded_offload(tmp_path, scenario_file):
    out = tmp_path / "run"
    assert main(["solve", str(scenario_file), "--out", str(out), "--cross-section",
                 "--points", "401"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    rows = read_csv(out / "cross_section_ue.csv")
    by_ue = {}
    for r in rows:
        by_ue.setdefault(int(r["ue"]), []).append((float(r["g"]), float(r["U_i"])))
    for i, pts in by_ue.items():
        step = pts[1][0] - pts[0][0]
        best = max(pts, key=lambda p: p[1])[0]
        assert abs(best - summary["offloads"][i]) <= step
    assert (out / "cross_section_controller.csv").exists()


def test_solve_missing_file_exits_2(tmp_path):
    assert main(["solve", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_solve_infeasible_exits_3(tmp_path, capsys):
    path = tmp_path / "tight.json"
    main(["generate", "--data-capacity", "1", "-o", str(path)])
    assert main(["solve", str(path), "--out", str(tmp_path / "r")]) == 3
    assert "capacity" in capsys.readouterr().err


def test_compare_needs_two_algorithms(tmp_path):
    assert main(["compare", "--algorithms", "cppo", "--seeds", "0", "--out", str(tmp_path)]) == 2


def test_unknown_algorithm_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exit_:
        main(["compare", "--algorithms", "cppo,bogus", "--out", str(tmp_path)])
    assert exit_.value.code == 2


def test_compare_rows(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--algorithms", "cppo,osrs,psrs", "--seeds", "0-2",
                 "--ues", "10", "--out", str(out)]) == 0
    rows = read_csv(out / "comparison.csv")
    assert [r["algorithm"] for r in rows] == ["CPPO", "OSRS", "PSRS"]
    assert all(r["runs"] == "3" for r in rows)
    assert len(read_csv(out / "runs.csv")) == 9


def test_compare_on_fixed_scenario(tmp_path, scenario_file):
    out = tmp_path / "cmp"
    assert main(["compare", "--algorithms", "cppo,nu-cppo", "--seeds", "0,1",
                 "--scenario", str(scenario_file), "--out", str(out)]) == 0
    assert len(read_csv(out / "comparison.csv")) == 2


def test_sweep(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--axis", "ues", "--values", "6,9", "--algorithms", "cppo,osrs",
                 "--seeds", "0-1", "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert [(r["ues"], r["algorithm"]) for r in rows] == [
        ("6.0", "CPPO"), ("6.0", "OSRS"), ("9.0", "CPPO"), ("9.0", "OSRS")]


def test_sweep_values_must_increase(tmp_path):
    with pytest.raises(SystemExit) as exit_:
        main(["sweep", "--axis", "ues", "--values", "9,6", "--out", str(tmp_path)])
    assert exit_.value.code == 2


def test_worker_pool_does_not_change_output(tmp_path, monkeypatch):
    args = ["compare", "--algorithms", "cppo,psrs", "--seeds", "0-3", "--ues", "8"]
    monkeypatch.setenv("STACKMEC_THREADS", "1")
    main(args + ["--out", str(tmp_path / "a")])
    monkeypatch.setenv("STACKMEC_THREADS", "3")
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("comparison.csv", "runs.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stackmec.cli", "solve", str(tmp_path / "x.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
