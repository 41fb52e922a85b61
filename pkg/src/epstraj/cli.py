"""Command-line front end: plan, simulate, and write CSV logs plus a report.

Stages are named in diagnostics: plan (scenario parsing, validation, and
trajectory construction), simulate (closed-loop run), write (output files).
Failures print ``epstraj: <stage>: <reason>`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .ccplanner import connect_waypoints
from .errors import EpstrajError
from .report import save_figures
from .scenario import MODES, echo_scenario, parse_scenario
from .simulator import (SimConfig, convergence_metrics, format_metrics,
                        initial_state, run_simulation)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epstraj",
        description="Plan a continuous-curvature trajectory through waypoints "
                    "and track it with displaced-point feedback control.")
    parser.add_argument("--scenario", required=True, metavar="PATH",
                        help="scenario file (flat key/value format, see README)")
    parser.add_argument("--plan-only", action="store_true",
                        help="write the planned trajectory only, no simulation")
    parser.add_argument("--mode", choices=MODES, default=None,
                        help="override the scenario tracking mode")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default: scenario out_dir or '.')")
    parser.add_argument("--seed", type=int, default=None, metavar="N",
                        help="reserved for perturbation sampling; runs are "
                             "currently deterministic")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip rendering the report figures")
    return parser


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _metrics_text(scenario, metrics) -> str:
    head = [f"mode={scenario.mode}",
            f"vehicle={scenario.vehicle}",
            f"epsilon={scenario.epsilon:.15g}"]
    return "\n".join(head) + "\n" + format_metrics(metrics)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    stage = "plan"
    try:
        scenario = parse_scenario(args.scenario)
        if args.mode is not None and args.mode != scenario.mode:
            scenario = replace(scenario, mode=args.mode).validate()
        trajectory = connect_waypoints(scenario.waypoints,
                                       scenario.planner_params())

        log = None
        metrics = None
        if not args.plan_only:
            stage = "simulate"
            initial = initial_state(
                trajectory,
                offset_lateral=scenario.offset_lateral,
                offset_heading=scenario.offset_heading,
                vehicle=scenario.vehicle,
                wheelbase=scenario.wheelbase)
            config = SimConfig(
                initial=initial,
                epsilon=scenario.epsilon,
                gains=scenario.gain_matrix(),
                dt=scenario.sim_dt if scenario.sim_dt is not None else scenario.dt,
                duration=(scenario.duration if scenario.duration is not None
                          else trajectory.duration),
                mode=scenario.mode)
            log = run_simulation(config, trajectory)
            metrics = convergence_metrics(log)

        stage = "write"
        out = args.out if args.out is not None else (scenario.out_dir or ".")
        os.makedirs(out, exist_ok=True)
        written = [os.path.join(out, "trajectory.csv"),
                   os.path.join(out, "scenario_echo.cfg")]
        trajectory.write_csv(written[0])
        _write_text(written[1], echo_scenario(scenario))
        if log is not None:
            log.write_csv(os.path.join(out, "simulation.csv"))
            _write_text(os.path.join(out, "metrics.txt"),
                        _metrics_text(scenario, metrics))
            written += [os.path.join(out, "simulation.csv"),
                        os.path.join(out, "metrics.txt")]
            if not args.no_figures:
                written += save_figures(trajectory, out,
                                        waypoints=scenario.waypoints, log=log)
    except EpstrajError as exc:
        print(f"epstraj: {stage}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"epstraj: {stage}: {exc}", file=sys.stderr)
        return 1

    print(f"plan: {len(trajectory.segments)} segments, "
          f"duration {trajectory.duration:.6g} s, {len(trajectory.t)} samples")
    if log is not None:
        print(f"simulate: mode={scenario.mode} vehicle={scenario.vehicle} "
              f"final |x-x_r| = {metrics['final_err_pos']:.6g} m")
    print("write: " + " ".join(written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
