import subprocess
import sys

import numpy as np
import pytest

from epstraj.cli import build_parser, main

SHORT = """\
v = 5.0
kappa_max = 2.7
sigma_max = 0.17
dt = 0.01
waypoint = 0, 0, 0
waypoint = 50, 3, 0.3
epsilon = 2.0
offset_lateral = 0.5
"""

INFEASIBLE = """\
v = 5.0
kappa_max = 2.7
sigma_max = 0.17
dt = 0.01
waypoint = 0, 0, 0
waypoint = 0, 0, 3.141592653589793
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_full_run_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    out = tmp_path / "out"
    rc = main(["--scenario", str(cfg), "--out", str(out), "--no-figures"])
    assert rc == 0
    for name in ("trajectory.csv", "simulation.csv", "metrics.txt",
                 "scenario_echo.cfg"):
        assert (out / name).exists()
    assert not (out / "trajectory.png").exists()
    text = (out / "metrics.txt").read_text()
    assert text.startswith("mode=eps\nvehicle=unicycle\nepsilon=2\n")
    metrics = dict(line.split("=", 1) for line in text.splitlines())
    assert float(metrics["final_err_pos"]) < 0.01
    stdout = capsys.readouterr().out
    assert "plan:" in stdout and "simulate:" in stdout and "write:" in stdout


def test_figures_rendered_by_default(tmp_path):
    cfg = write(tmp_path, SHORT)
    out = tmp_path / "out"
    assert main(["--scenario", str(cfg), "--out", str(out)]) == 0
    assert (out / "trajectory.png").stat().st_size > 1000
    assert (out / "error.png").stat().st_size > 1000


def test_echo_round_trip_reproduces_outputs(tmp_path):
    cfg = write(tmp_path, SHORT)
    out1 = tmp_path / "first"
    out2 = tmp_path / "second"
    assert main(["--scenario", str(cfg), "--out", str(out1),
                 "--no-figures"]) == 0
    assert main(["--scenario", str(out1 / "scenario_echo.cfg"),
                 "--out", str(out2), "--no-figures"]) == 0
    for name in ("trajectory.csv", "simulation.csv", "metrics.txt",
                 "scenario_echo.cfg"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_plan_only_skips_simulation(tmp_path):
    cfg = write(tmp_path, SHORT)
    out = tmp_path / "out"
    assert main(["--scenario", str(cfg), "--plan-only", "--out",
                 str(out)]) == 0
    assert (out / "trajectory.csv").exists()
    assert (out / "scenario_echo.cfg").exists()
    assert not (out / "simulation.csv").exists()
    assert not (out / "metrics.txt").exists()
    assert not (out / "error.png").exists()


def test_mode_override_lands_in_echo_and_metrics(tmp_path):
    cfg = write(tmp_path, SHORT)
    out = tmp_path / "out"
    assert main(["--scenario", str(cfg), "--mode", "plain", "--out", str(out),
                 "--no-figures"]) == 0
    assert "mode = plain" in (out / "scenario_echo.cfg").read_text()
    assert (out / "metrics.txt").read_text().startswith("mode=plain\n")
    # plain tracking settles with the vehicle epsilon behind the reference
    metrics = dict(line.split("=", 1)
                   for line in (out / "metrics.txt").read_text().splitlines())
    assert abs(float(metrics["final_err_pos"]) - 2.0) < 2.0 * 0.02


def test_infeasible_pair_reports_plan_stage(tmp_path, capsys):
    cfg = write(tmp_path, INFEASIBLE)
    rc = main(["--scenario", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "plan" in err
    assert "0 and 1" in err


def test_parse_failure_reports_plan_stage(tmp_path, capsys):
    cfg = write(tmp_path, "v = not_a_number\n")
    rc = main(["--scenario", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "plan" in capsys.readouterr().err


def test_scenario_out_dir_used_without_flag(tmp_path, capsys, monkeypatch):
    out = tmp_path / "from_file"
    cfg = write(tmp_path, SHORT + f"out_dir = {out}\n")
    monkeypatch.chdir(tmp_path)
    assert main(["--scenario", str(cfg), "--plan-only"]) == 0
    assert (out / "trajectory.csv").exists()
    assert f"out_dir = {out}" in (out / "scenario_echo.cfg").read_text()


def test_help_lists_every_flag():
    text = build_parser().format_help()
    for flag in ("--scenario", "--plan-only", "--mode", "--out", "--seed",
                 "--no-figures"):
        assert flag in text


def test_unknown_flag_fails():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["--scenario", "x", "--frobnicate"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, SHORT)
    proc = subprocess.run(
        [sys.executable, "-m", "epstraj.cli", "--scenario", str(cfg),
         "--plan-only", "--out", str(tmp_path / "out")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "plan:" in proc.stdout


def test_trajectory_csv_matches_library(tmp_path):
    from epstraj.ccplanner import PlannerParams, Waypoint, connect_waypoints

    cfg = write(tmp_path, SHORT)
    out = tmp_path / "out"
    assert main(["--scenario", str(cfg), "--plan-only", "--out",
                 str(out)]) == 0
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    traj = connect_waypoints(
        [Waypoint(0, 0, 0), Waypoint(50, 3, 0.3)],
        PlannerParams(v=5.0, kappa_max=2.7, sigma_max=0.17, dt=0.01))
    assert len(data) == len(traj.t)
    assert np.allclose(data[:, 1:3], traj.pos, atol=1e-12)
