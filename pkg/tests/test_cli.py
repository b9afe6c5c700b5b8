import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from jerkplan.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
BASE = {"schema": 1, "name": "t", "grid": {"n": 40, "ds": 0.5},
        "limits": {"v_max": 3.0, "a_max": 1.0, "a_min": -1.0, "j_max": 0.8, "j_min": -0.8},
        "boundary": {"v0": 1.0}}


def _write(tmp_path, **over):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({**BASE, **over}))
    return str(path)


class TestExitCodes:
    def test_run_ok(self, tmp_path, capsys):
        argv = ["run", "--preset", "paper-sec4", "--method", "lp", "--out", str(tmp_path)]
        assert main(argv) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["feasibility"]["feasible"]
        lines = (tmp_path / "paper-sec4_lp.csv").read_text().splitlines()
        assert len(lines) == 301

    def test_usage_no_source(self, capsys):
        assert main(["run"]) == 1
        assert "exactly one" in capsys.readouterr().err

    def test_usage_bad_flag(self, capsys):
        assert main(["run", "--preset", "paper-sec4", "--bogus"]) == 1

    def test_usage_zero_reps(self):
        assert main(["bench", "--preset", "paper-sec4", "--reps", "0"]) == 1

    def test_usage_bad_tolerance(self):
        assert main(["validate", "--preset", "paper-sec4", "--tol", "0"]) == 1

    def test_validation(self, tmp_path, capsys):
        path = _write(tmp_path, grid={"ds": 0.5})
        assert main(["validate", "--scenario", path]) == 2
        err = capsys.readouterr().err
        assert "grid.n" in err and "Traceback" not in err

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{\n  \"schema\": 1,\n")
        assert main(["run", "--scenario", str(path)]) == 2
        assert "line" in capsys.readouterr().err

    def test_infeasible(self, tmp_path, capsys):
        limits = dict(BASE["limits"], v_min=0.5)
        obstacle = [{"v_obs": 0.0, "t_in": 0.0, "t_out": "inf", "s_in": 10.0}]
        path = _write(tmp_path, limits=limits, obstacles=obstacle)
        assert main(["run", "--scenario", path]) == 3
        assert "infeasible" in capsys.readouterr().err

    def test_solver_failure(self, tmp_path, capsys):
        path = _write(tmp_path, solver={"max_iterations": 1})
        assert main(["run", "--scenario", path, "--method", "pseudo-jerk-qp"]) == 4
        assert "solver" in capsys.readouterr().err


class TestCommands:
    def test_validate_with_plan(self, capsys):
        code = main(["validate", "--scenario", str(SCENARIOS / "cut_in.json"), "--method", "lp"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["feasibility"]["feasible"]

    def test_overrides(self, tmp_path, capsys):
        path = _write(tmp_path)
        assert main(["run", "--scenario", path, "--method", "pseudo-jerk-qp",
                     "--w-smooth", "50", "--gate-combiner", "max"]) == 0
        assert json.loads(capsys.readouterr().out)["method"] == "pseudo-jerk-qp"

    def test_compare(self, tmp_path, capsys):
        assert main(["compare", "--scenario", _write(tmp_path), "--out", str(tmp_path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["methods"] == ["lp", "pseudo-jerk-qp"]
        assert (tmp_path / "t_compare.svg").exists()

    def test_bench(self, tmp_path, capsys):
        path = _write(tmp_path)
        assert main(["bench", "--scenario", path, "--reps", "2", "--out", str(tmp_path)]) == 0
        table = capsys.readouterr().out.splitlines()
        assert len(table) == 4
        assert len((tmp_path / "bench.csv").read_text().splitlines()) == 3

    def test_module_entry_point(self, tmp_path):
        env = dict(os.environ, JERKPLAN_LOG="INFO")
        proc = subprocess.run([sys.executable, "-m", "jerkplan", "validate", "--scenario",
                               _write(tmp_path)], capture_output=True, text=True, env=env)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["n"] == 40
