"""Command-line harness tests: exit codes, file round trips, metrics CSV
shape and ordering, and sweep determinism."""

from __future__ import annotations

import csv
import subprocess
import sys

import pytest

from teamcoord import cli
from teamcoord.cli import (EXIT_OK, EXIT_RUNTIME, EXIT_USAGE,
                           EXIT_VALIDATION, METRICS_COLUMNS, main,
                           run_experiment, sweep_tasks)


def _read_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_generate_then_run_round_trip(tmp_path, capsys):
    out = tmp_path / "scenario.json"
    code = main(["generate", "--nodes", "8", "--robots", "2", "--seed", "3",
                 "--density", "0.7", "--risky", "0.3", "--out", str(out)])
    assert code == EXIT_OK
    assert out.exists()
    banner = capsys.readouterr().out
    assert "8 nodes" in banner

    trace = tmp_path / "trace.csv"
    shakes = tmp_path / "handshakes.csv"
    code = main(["run", "--scenario", str(out), "--variant", "full",
                 "--trace", str(trace), "--handshakes", str(shakes),
                 "--validate"])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert "total_cost=" in printed
    assert "validation: ok" in printed
    header = trace.read_text().splitlines()[0]
    assert header == "t,robot,from,to,cost,support_role,partner,group_id"
    assert shakes.read_text().startswith("step,sender,receiver,message")


def test_generate_applies_overrides(tmp_path):
    out = tmp_path / "scenario.json"
    code = main(["generate", "--nodes", "8", "--robots", "2", "--seed", "1",
                 "--density", "0.7", "--time-limit", "5", "--epsilon", "0.5",
                 "--subgoal-cap", "2", "--exact-cap", "2",
                 "--out", str(out)])
    assert code == EXIT_OK
    from teamcoord.world import load_scenario
    scenario = load_scenario(str(out))
    assert scenario.time_limit == 5
    assert scenario.epsilon == 0.5
    assert scenario.subgoal_cap == 2
    assert scenario.exact_group_cap == 2


def test_generate_rejects_impossible_worlds(tmp_path, capsys):
    out = tmp_path / "nope.json"
    assert main(["generate", "--nodes", "1", "--out", str(out)]) == EXIT_USAGE
    assert main(["generate", "--nodes", "4", "--robots", "9",
                 "--out", str(out)]) == EXIT_USAGE
    assert main(["generate", "--nodes", "20", "--density", "0.05",
                 "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()
    assert "generate:" in capsys.readouterr().err


def test_usage_errors_exit_with_one(tmp_path):
    assert main(["generate"]) == EXIT_USAGE              # --out missing
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["run", "--scenario", "x", "--variant", "bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_run_reports_broken_scenarios(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert main(["run", "--scenario", str(missing)]) == EXIT_RUNTIME

    garbled = tmp_path / "garbled.json"
    garbled.write_text("{ not json")
    assert main(["run", "--scenario", str(garbled)]) == EXIT_RUNTIME

    hollow = tmp_path / "hollow.json"
    hollow.write_text("{}")
    assert main(["run", "--scenario", str(hollow)]) == EXIT_RUNTIME
    assert "missing" in capsys.readouterr().err


def test_run_validation_failure_exits_three(tmp_path, capsys, monkeypatch):
    out = tmp_path / "scenario.json"
    main(["generate", "--nodes", "6", "--robots", "2", "--density", "0.8",
          "--out", str(out)])
    monkeypatch.setattr(cli, "validate", lambda s, r: ["forged issue"])
    code = main(["run", "--scenario", str(out), "--validate"])
    assert code == EXIT_VALIDATION
    assert "violation: forged issue" in capsys.readouterr().err


def test_experiment_metrics_shape_and_order(tmp_path):
    out = tmp_path / "metrics.csv"
    code = main(["experiment", "--graphs", "2", "--nodes", "8",
                 "--robots", "2", "--types", "1", "--density", "0.7",
                 "--sensing-factors", "0.4", "--comm-factors", "0.3", "0.5",
                 "--variants", "naive", "full", "--base-seed", "5",
                 "--workers", "1", "--out", str(out)])
    assert code == EXIT_OK
    rows = _read_rows(out)
    with open(out, "r", encoding="utf-8") as fh:
        assert fh.readline().strip() == ",".join(METRICS_COLUMNS)
    assert len(rows) == 2 * 2 * 2
    assert [r["graph_seed"] for r in rows] == ["5"] * 4 + ["6"] * 4
    assert [r["variant"] for r in rows[:4]] == ["naive", "naive",
                                                "full", "full"]
    assert [r["communication_factor"] for r in rows[:2]] == ["0.3", "0.5"]
    for row in rows:
        assert row["status"] == "ok"
        assert row["H"] == "1"
        float(row["total_cost"])
        int(row["steps_used"])
        assert row["truncated"] in ("true", "false")


def test_experiment_rows_deterministic_modulo_runtime(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert main(["experiment", "--graphs", "1", "--nodes", "8",
                     "--robots", "3", "--sensing-factors", "0.4",
                     "--comm-factors", "0.4", "--variants", "full", "no_c3",
                     "--workers", "1", "--out", str(out)]) == EXIT_OK
        outs.append(_read_rows(out))
    for left, right in zip(*outs):
        left.pop("runtime_ms")
        right.pop("runtime_ms")
        assert left == right


def test_experiment_pool_matches_sequential(tmp_path):
    tasks = sweep_tasks(graphs=1, nodes=8, density=0.5, risky=0.2, robots=2,
                        types=1, sensing_factors=[0.4], comm_factors=[0.4],
                        variants=["naive", "full"], base_seed=0, exact_cap=2)
    solo = tmp_path / "solo.csv"
    pooled = tmp_path / "pooled.csv"
    run_experiment(tasks, str(solo), workers=1)
    run_experiment(tasks, str(pooled), workers=2)
    a, b = _read_rows(solo), _read_rows(pooled)
    for left, right in zip(a, b):
        left.pop("runtime_ms")
        right.pop("runtime_ms")
        assert left == right


def test_module_invocation_smoke(tmp_path):
    out = tmp_path / "scenario.json"
    proc = subprocess.run(
        [sys.executable, "-m", "teamcoord.cli", "generate", "--nodes", "6",
         "--robots", "2", "--density", "0.8", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
