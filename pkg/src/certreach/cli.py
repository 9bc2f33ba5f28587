"""Command-line interface: certify, plan, gen, bench, plot.

Exit codes: 0 success, 2 infeasible/too-coarse/singular, 3 step budget
exhausted, 4 bad input.  All randomness flows from --seed; flag values
override the optional JSON config file, which overrides the defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .bench import DELTAS, emit_plots, run_benchmark
from .certify import certificate_to_dict, certify_bisection
from .kinematics import RobotModel, SingularityError
from .planner import (Obstacle, PlannerConfig, REASON_BUDGET, REASON_GOAL,
                      plan_sos, plan_vanilla, run_result_from_dict,
                      run_result_to_dict)
from .polyik import build_poly_ik, effective_bounds, estimate_error
from .scenario import (GenConfig, Scenario, generate_scenarios, load_scenarios,
                       save_scenarios)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_INPUT = 4

DEFAULT_LINKS = (1.0, 0.8, 0.6)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 4
        raise CliError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as e:
        raise CliError(f"expected comma-separated numbers, got {text!r}") from e


def _load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise CliError(f"cannot read config file: {e}") from e
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise CliError(f"{path}: config must be a JSON object")
    return data


def _planner_config(args, file_cfg: dict) -> PlannerConfig:
    kwargs = {}
    for f in dataclasses.fields(PlannerConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            kwargs[f.name] = flag
        elif f.name in file_cfg:
            kwargs[f.name] = file_cfg[f.name]
    try:
        return PlannerConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise CliError(str(e)) from e


def _robot(args, file_cfg: dict) -> RobotModel:
    links = None
    if getattr(args, "links", None):
        links = _floats(args.links)
    elif "link_lengths" in file_cfg:
        links = file_cfg["link_lengths"]
    try:
        return RobotModel(tuple(links) if links else DEFAULT_LINKS)
    except ValueError as e:
        raise CliError(str(e)) from e


def _add_config_flags(p: _Parser) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--links", help="comma-separated link lengths (default 1.0,0.8,0.6)")
    for f in dataclasses.fields(PlannerConfig):
        if f.type in ("float", "int"):
            p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name,
                           type=float if f.type == "float" else int, default=None,
                           help=f"planner config {f.name} (default {f.default})")
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name,
                           default=None, help=f"planner config {f.name} (default {f.default})")


def _bounds_vector(args, n: int) -> np.ndarray:
    values = _floats(args.delta)
    if len(values) == 1:
        return np.full(n, values[0])
    if len(values) != n:
        raise CliError(f"--delta needs 1 or {n} values, got {len(values)}")
    return np.asarray(values)


def cmd_certify(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    cfg = _planner_config(args, file_cfg)
    robot = _robot(args, file_cfg)
    theta0 = np.asarray(_floats(args.theta0))
    if theta0.shape != (robot.n,):
        raise CliError(f"--theta0 needs {robot.n} angles")
    delta = _bounds_vector(args, robot.n)
    if np.any(delta <= 0):
        raise CliError("--delta must be positive")
    rho = args.rho if args.rho is not None else cfg.rho0

    try:
        m = build_poly_ik(robot, theta0, rho, cfg.fd_step)
    except SingularityError as e:
        print(f"singular configuration: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    m.epsilon = estimate_error(m, robot, cfg.error_grid_side)
    eff = effective_bounds(delta, m.epsilon)
    if eff.too_coarse:
        print(f"too coarse: epsilon(rho)={m.epsilon:.3e} leaves a nonpositive "
              f"effective bound; reduce rho (currently {rho})", file=sys.stderr)
        return EXIT_INFEASIBLE
    cert = certify_bisection(m, eff, lambda_max=rho, iters=cfg.bisect_iters,
                             oracle=cfg.oracle, grid_side=cfg.cert_grid_side)
    print(f"lambda_star = {cert.lambda_star:.9g} m")
    print(f"epsilon(rho) = {m.epsilon:.3e} (rho = {rho})")
    print(f"delta_eff = {np.array2string(cert.delta_eff, precision=6)}")
    print(f"slack     = {np.array2string(cert.per_joint_slack, precision=6)}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(certificate_to_dict(cert, m.epsilon), indent=2) + "\n",
            encoding="utf-8")
    return EXIT_OK


def _scenario_from_args(args, robot: RobotModel, cfg: PlannerConfig) -> Scenario:
    if args.scenario:
        try:
            pool = load_scenarios(args.scenario)
        except (OSError, ValueError) as e:
            raise CliError(str(e)) from e
        if not pool:
            raise CliError(f"{args.scenario}: empty scenario file")
        if not (0 <= args.index < len(pool)):
            raise CliError(f"--index {args.index} out of range (pool has {len(pool)})")
        return pool[args.index]
    if not (args.theta0 and args.goal and args.delta):
        raise CliError("need --scenario or all of --theta0/--goal/--delta")
    theta0 = np.asarray(_floats(args.theta0))
    goal = np.asarray(_floats(args.goal))
    if theta0.shape != (robot.n,) or goal.shape != (2,):
        raise CliError("bad --theta0/--goal dimensions")
    obstacles = []
    for spec in args.obstacle or []:
        values = _floats(spec)
        if len(values) not in (3, 4):
            raise CliError("--obstacle needs cx,cy,radius[,margin]")
        margin = values[3] if len(values) == 4 else 0.008
        obstacles.append(Obstacle(np.asarray(values[:2]), values[2], margin))
    delta = _bounds_vector(args, robot.n)
    return Scenario(id="inline", robot=robot, theta0=theta0, goal=goal,
                    obstacles=obstacles, delta=delta, kappa0=float("nan"),
                    kappa_ratio=float("nan"), lambda_min=float("nan"),
                    est_steps=float("nan"), seed=0, attempt=0)


def cmd_plan(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    cfg = _planner_config(args, file_cfg)
    robot = _robot(args, file_cfg)
    sc = _scenario_from_args(args, robot, cfg)
    plan = plan_sos if args.planner == "sos" else plan_vanilla
    try:
        result = plan(sc.robot, sc.theta0, sc.goal, sc.obstacles, sc.delta, cfg)
    except (ValueError, SingularityError) as e:
        raise CliError(str(e)) from e
    print(f"planner={args.planner} reason={result.reason} steps={len(result.steps)} "
          f"violations={result.violation_count} "
          f"final_distance={result.final_distance:.6f} m")
    if args.out:
        Path(args.out).write_text(
            json.dumps(run_result_to_dict(result), indent=2) + "\n", encoding="utf-8")
    if args.plots:
        if result.steps:
            emit_plots(result, sc, args.plots, prefix=f"{sc.id}-{args.planner}")
        else:
            print("empty trace: skipping plots", file=sys.stderr)
    if result.reason == REASON_GOAL:
        return EXIT_OK
    if result.reason == REASON_BUDGET:
        return EXIT_BUDGET
    return EXIT_INFEASIBLE


def cmd_gen(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    cfg = _planner_config(args, file_cfg)
    robot = _robot(args, file_cfg)
    if args.delta <= 0:
        raise CliError("--delta must be positive")
    scenarios = generate_scenarios(robot, args.delta, args.count, args.seed, cfg=cfg)
    save_scenarios(scenarios, args.out)
    print(f"wrote {len(scenarios)} scenario(s) to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    cfg = _planner_config(args, file_cfg)
    robot = _robot(args, file_cfg)
    deltas = tuple(_floats(args.deltas)) if args.deltas else DELTAS
    if any(d <= 0 for d in deltas):
        raise CliError("--deltas must be positive")
    rows, _, pools = run_benchmark(robot, deltas, args.count, args.seed, cfg=cfg,
                                   outdir=args.outdir)
    for row in rows:
        print(f"delta={row.delta:.3f} n={row.n} "
              f"vanilla: viol%={row.vanilla['violation_rate'][0]:.2f} "
              f"success%={row.vanilla['success_rate'][0]:.1f} | "
              f"sos: viol%={row.sos['violation_rate'][0]:.2f} "
              f"success%={row.sos['success_rate'][0]:.1f}")
    print(f"tables written to {args.outdir}")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        with open(args.run, "r", encoding="utf-8") as fh:
            result = run_result_from_dict(json.load(fh))
        pool = load_scenarios(args.scenario)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        raise CliError(str(e)) from e
    if not (0 <= args.index < len(pool)):
        raise CliError(f"--index {args.index} out of range (pool has {len(pool)})")
    if not result.steps:
        raise CliError("run trace is empty; nothing to plot")
    paths = emit_plots(result, pool[args.index], args.outdir, prefix=args.prefix)
    print("\n".join(str(p) for p in paths))
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="certreach",
                     description="Certified reachable boxes and Bug2 planning "
                                 "for planar revolute arms")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify the reachable box at a configuration")
    _add_config_flags(p)
    p.add_argument("--theta0", required=True, help="joint angles, comma-separated (rad)")
    p.add_argument("--delta", required=True, help="per-step joint bound(s), rad")
    p.add_argument("--rho", type=float, default=None, help="model trust radius (default rho0)")
    p.add_argument("--out", help="write the certificate JSON here")
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("plan", help="run one planner on a scenario")
    _add_config_flags(p)
    p.add_argument("--planner", choices=("sos", "vanilla"), default="sos")
    p.add_argument("--scenario", help="scenario pool JSON (see gen)")
    p.add_argument("--index", type=int, default=0, help="scenario index in the pool")
    p.add_argument("--theta0", help="inline scenario: start angles")
    p.add_argument("--goal", help="inline scenario: goal z1,z2")
    p.add_argument("--delta", help="inline scenario: joint bound(s)")
    p.add_argument("--obstacle", action="append",
                   help="inline scenario: cx,cy,radius[,margin]; repeatable")
    p.add_argument("--out", help="write the run trace JSON here")
    p.add_argument("--plots", help="write SVG trace plots into this directory")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("gen", help="generate adversarial scenarios")
    _add_config_flags(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("bench", help="run the two-planner benchmark")
    _add_config_flags(p)
    p.add_argument("--deltas", help=f"comma-separated bounds (default {DELTAS})")
    p.add_argument("--count", type=int, default=10, help="scenarios per delta")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("plot", help="render SVG plots from a saved run trace")
    p.add_argument("--run", required=True, help="run trace JSON (see plan --out)")
    p.add_argument("--scenario", required=True, help="scenario pool JSON")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.add_argument("--prefix", default="run")
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
