import json
from pathlib import Path
import subprocess
import sys

import numpy as np
import pytest
import yaml

from confnull.cli import main
from confnull.errors import ConfigError
from confnull.scenario import (
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    EXIT_VERDICT,
    dump_report,
    load_config,
    read_trajectory,
    run,
    validate,
    write_trajectory,
)
from confnull.trajectory import Trajectory

PASS = {
    "system": {"alpha": 1.0, "modes": 8},
    "horizon": {"zeta": 1e-6, "t_end": 1.0},
    "initial": {"coeffs": [1.0, 0.5, 0.25]},
    "nonlocal": {"weights": [0.06, 0.04], "times": [0.4, 0.7]},
    "nonlinearity": {"kind": "scaled_sin", "c": 0.1},
    "numerics": {"nodes": 128, "tol": 1e-12, "trials": 100, "h_samples": 20},
}
FAIL = {
    "system": {"alpha": 1.0, "modes": 8},
    "initial": {"coeffs": [1.0, 0.5]},
    "nonlocal": {"weights": [0.06, 0.04], "times": [0.4, 0.7]},
    "nonlinearity": {"kind": "linear", "c": 50.0},
    "numerics": {"nodes": 128, "max_iter": 30, "trials": 100, "h_samples": 20},
}


def write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


class TestConfig:
    def test_minimal_defaults(self, tmp_path):
        cfg = load_config(write(tmp_path, {"system": {"alpha": 1, "modes": 8}, "horizon": {"zeta": 1e-6, "t_end": 1}}))
        d = cfg.data
        assert d["seed"] == 42
        assert d["nonlinearity"] == {"kind": "zero", "c": 0.0}
        assert d["nonlocal"] == {"weights": [], "times": []}
        assert d["numerics"]["nodes"] == 256
        np.testing.assert_array_equal(cfg.x0().coeffs, np.eye(8)[0])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path).data["system"]["modes"] == 16

    def test_alpha_message(self):
        with pytest.raises(ConfigError) as info:
            validate({"system": {"alpha": 1.5}})
        assert any("alpha must lie in (0,1]" in v for v in info.value.violations)

    def test_nonlocal_time_before_zeta(self):
        with pytest.raises(ConfigError) as info:
            validate({"horizon": {"zeta": 0.1}, "nonlocal": {"weights": [0.1], "times": [0.05]}})
        assert any(v.startswith("nonlocal") for v in info.value.violations)

    def test_all_violations_reported(self):
        raw = {
            "system": {"alpha": 0, "modes": 2.5, "colour": "red"},
            "horizon": {"zeta": 2.0, "t_end": 1.0},
            "nonlinearity": {"kind": "cubic"},
            "numerics": {"nodes": 10},
        }
        with pytest.raises(ConfigError) as info:
            validate(raw)
        v = "\n".join(info.value.violations)
        for needle in ("system.colour", "system.alpha", "system.modes", "horizon", "nonlinearity.kind", "numerics.nodes"):
            assert needle in v

    def test_parse_error_has_line(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("system:\n  alpha: [1,\n")
        with pytest.raises(ConfigError, match="line 3"):
            load_config(path)

    def test_samples_initial_state(self):
        x = np.linspace(0, np.pi, 64)
        cfg = validate({"system": {"modes": 4}, "initial": {"samples": (np.sqrt(2) * np.sin(2 * x)).tolist()}})
        np.testing.assert_allclose(cfg.x0().coeffs, [0, 1, 0, 0], atol=1e-8)

    def test_potential_kinds(self):
        for pot in ({"kind": "polynomial", "coeffs": [1, 2]}, {"kind": "sinusoid", "a": 1, "omega": 2}):
            validate({"system": {"potential": pot}}).system()
        with pytest.raises(ConfigError):
            validate({"system": {"potential": {"kind": "sinusoid", "a": 1}}})


class TestTrajectoryFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        traj = Trajectory(np.linspace(0.1, 1, 7), rng.standard_normal((7, 3)) * 1e-7)
        path = write_trajectory(traj, None, tmp_path / "t.csv")
        back, u = read_trajectory(path)
        np.testing.assert_array_equal(back.times, traj.times)
        np.testing.assert_array_equal(back.states, traj.states)
        assert np.all(u == 0)
        header = path.read_text().splitlines()[0]
        assert header == "t,x_1,x_2,x_3,u_1,u_2,u_3"

    def test_zero_trajectory(self, tmp_path):
        traj = Trajectory(np.linspace(0.1, 1, 5), np.zeros((5, 2)))
        lines = write_trajectory(traj, None, tmp_path / "z.csv").read_text().splitlines()
        assert len(lines) == 6
        assert all(set(row.split(",")[1:]) == {"0"} for row in lines[1:])


class TestRun:
    def test_verify_linear(self, tmp_path):
        res = run(validate({"numerics": {"trials": 100, "h_samples": 10}}), "verify-linear", tmp_path)
        assert res.exit_code == EXIT_OK
        assert res.report["verdict"] == "null controllable"
        assert res.report["eq14"]["gammaGram"] == pytest.approx((1 - 1e-6) / (2 - 1e-6))

    def test_solve_linear_problem(self, tmp_path):
        res = run(validate({"numerics": {"trials": 20, "h_samples": 10}}), "solve", tmp_path)
        assert res.exit_code == EXIT_OK
        assert res.report["finalStateNorm"] <= 1e-8

    def test_selftest_summary(self, tmp_path):
        res = run(validate({"numerics": {"selftest_instances": 20}}), "calculus-selftest", tmp_path)
        s = res.report["summary"]
        assert res.exit_code == EXIT_OK
        assert s["total"] == len(res.report["rules"]) and s["passed"] == s["total"] and s["failed"] == 0

    def test_synthesize_csv_matches_report(self, tmp_path):
        res = run(validate(PASS), "synthesize", tmp_path)
        assert res.exit_code == EXIT_OK
        traj, u = read_trajectory(tmp_path / "trajectory.csv")
        assert traj.states.shape == (128, 8) and u.shape == (128, 8)
        assert np.linalg.norm(traj.states[-1]) <= res.report["finalStateNorm"]

    def test_solve_report_self_auditing(self, tmp_path):
        res = run(validate(PASS), "solve", tmp_path)
        rep = json.loads((tmp_path / "report.json").read_text())
        assert res.exit_code == EXIT_OK and rep["status"] == "pass"
        eq8 = rep["eq8"]
        assert eq8["value"] == pytest.approx(sum(eq8["terms"]))
        assert eq8["satisfied"] == (eq8["value"] < 1)
        assert rep["verdicts"]["finalState"] == (rep["finalStateNorm"] <= rep["finalStateThreshold"])
        assert rep["verdicts"]["eq14"] == (rep["eq14"]["minMargin"] >= 0)
        traj, _ = read_trajectory(tmp_path / "trajectory.csv")
        assert np.linalg.norm(traj.states[-1]) <= rep["finalStateNorm"]

    def test_embedded_config_reproduces(self, tmp_path):
        first = run(validate(PASS), "solve", tmp_path / "a").report
        again = run(validate(first["config"]), "solve", tmp_path / "b").report
        assert dump_report(first) == dump_report(again)

    def test_forced_failure(self, tmp_path):
        res = run(validate(FAIL), "solve", tmp_path)
        assert res.exit_code == EXIT_NUMERICAL
        assert res.report["converged"] is False and not res.report["eq8"]["satisfied"]

    def test_verdict_failure_exit(self, tmp_path):
        # converges, but the sufficiency condition is not met
        cfg = dict(PASS, nonlinearity={"kind": "scaled_tanh", "c": 1.2})
        res = run(validate(cfg), "solve", tmp_path)
        assert res.report["converged"]
        assert not res.report["eq8"]["satisfied"]
        assert res.exit_code == EXIT_VERDICT


class TestMain:
    def test_exit_codes(self, tmp_path, capsys):
        ok = write(tmp_path, PASS, "ok.yaml")
        assert main(["--config", str(ok), "--command", "solve", "--out", str(tmp_path / "o")]) == EXIT_OK
        bad = write(tmp_path, {"system": {"alpha": 1.5}}, "bad.yaml")
        assert main(["--config", str(bad), "--command", "solve"]) == EXIT_VALIDATION
        assert "alpha must lie in (0,1]" in capsys.readouterr().err
        assert main(["--config", str(tmp_path / "missing.yaml"), "--command", "solve"]) == EXIT_IO
        fail = write(tmp_path, FAIL, "fail.yaml")
        assert main(["--config", str(fail), "--command", "solve", "--out", str(tmp_path / "f")]) == EXIT_NUMERICAL

    def test_unwritable_output(self, tmp_path):
        ok = write(tmp_path, PASS, "ok.yaml")
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["--config", str(ok), "--command", "verify-linear", "--out", str(blocker / "sub")]) == EXIT_IO

    def test_seed_override(self, tmp_path):
        ok = write(tmp_path, PASS, "ok.yaml")
        main(["--config", str(ok), "--command", "verify-linear", "--out", str(tmp_path / "a"), "--seed", "7"])
        rep = json.loads((tmp_path / "a" / "report.json").read_text())
        assert rep["seed"] == 7 and rep["config"]["seed"] == 7
        assert (tmp_path / "a" / "timing.json").exists()

    def test_module_entry_point(self, tmp_path):
        ok = write(tmp_path, PASS, "ok.yaml")
        out = subprocess.run(
            [sys.executable, "-m", "confnull", "--config", str(ok), "--command", "calculus-selftest", "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0, out.stderr
        assert "calculus-selftest: pass" in out.stdout


SCENARIOS = sorted((Path(__file__).parents[1] / "scenarios").glob("*.yaml"))


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_shipped_scenarios_load(path):
    cfg = load_config(path)
    cfg.problem()
