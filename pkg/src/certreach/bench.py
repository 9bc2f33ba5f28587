"""Benchmark harness: run both planners over scenario pools, aggregate the
metrics tables, and render per-run SVG trace plots."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kinematics import RobotModel, forward_kinematics
from .planner import PlannerConfig, RunResult, plan_sos, plan_vanilla
from .scenario import GenConfig, Scenario, generate_scenarios
from .svgfig import Frame, SvgCanvas, line_chart

DELTAS = (0.020, 0.025, 0.030, 0.035, 0.040, 0.050)

DEFAULT_ROBOT = RobotModel((1.0, 0.8, 0.6))

RAW_COLUMNS = ("delta", "scenario", "planner", "success", "reason", "steps",
               "violation_count", "violation_rate", "final_distance",
               "path_length", "path_length_ratio", "wall_time", "cert_ms_per_step")

# metric name -> raw CSV column holding the per-run value
METRIC_COLUMNS = {
    "success_rate": "success",
    "violation_count": "violation_count",
    "violation_rate": "violation_rate",
    "final_distance": "final_distance",
    "path_length_ratio": "path_length_ratio",
    "steps": "steps",
    "wall_time": "wall_time",
    "cert_ms_per_step": "cert_ms_per_step",
}


@dataclass(eq=False)
class RunMetrics:
    success: bool
    violation_count: int
    violation_rate: float
    final_distance: float
    path_length_ratio: float
    steps: int
    wall_time: float
    cert_ms_per_step: float | None = None


@dataclass(eq=False)
class AggregateRow:
    delta: float
    n: int
    vanilla: dict[str, tuple[float, float]]
    sos: dict[str, tuple[float, float]]


def evaluate_run(result: RunResult, scenario: Scenario, wall_time: float = 0.0) -> RunMetrics:
    """Metrics from a step trace.

    The path-length ratio divides the traversed length by the net
    start-to-final displacement, so 1.0 means a straight path and the
    ratio is >= 1 up to rounding for any run; it is defined as 1.0 for
    zero-step runs.
    """
    nsteps = len(result.steps)
    violations = result.violation_count
    rate = violations / nsteps if nsteps else 0.0
    z_start = forward_kinematics(scenario.robot, scenario.theta0)
    z_final = result.steps[-1].z_after if nsteps else z_start
    net = float(np.linalg.norm(z_final - z_start))
    ratio = result.path_length / net if net > 1e-12 else 1.0
    cert_ms = None
    if result.cert_times:
        cert_ms = 1e3 * float(np.mean(result.cert_times))
    return RunMetrics(success=result.success, violation_count=violations,
                      violation_rate=rate, final_distance=result.final_distance,
                      path_length_ratio=ratio, steps=nsteps, wall_time=wall_time,
                      cert_ms_per_step=cert_ms)


def _mean_std(values) -> tuple[float, float]:
    """Mean and sample std (ddof=1; 0.0 for fewer than two values)."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


def _aggregate(metrics: list[RunMetrics]) -> dict[str, tuple[float, float]]:
    out = {
        "success_rate": _mean_std([100.0 * m.success for m in metrics]),
        "violation_count": _mean_std([m.violation_count for m in metrics]),
        "violation_rate": _mean_std([100.0 * m.violation_rate for m in metrics]),
        "final_distance": _mean_std([m.final_distance for m in metrics]),
        "path_length_ratio": _mean_std([m.path_length_ratio for m in metrics]),
        "steps": _mean_std([m.steps for m in metrics]),
        "wall_time": _mean_std([m.wall_time for m in metrics]),
    }
    cert = [m.cert_ms_per_step for m in metrics if m.cert_ms_per_step is not None]
    if cert:
        out["cert_ms_per_step"] = _mean_std(cert)
    return out


def run_benchmark(robot: RobotModel = DEFAULT_ROBOT, deltas=DELTAS,
                  scenarios_per_delta: int = 10, seed: int = 0,
                  cfg: PlannerConfig | None = None, gen: GenConfig | None = None,
                  outdir=None, pools: dict[float, list[Scenario]] | None = None):
    """Run both planners across the delta settings.

    Returns (rows, raw, pools): aggregate rows, raw per-run records
    (dicts matching RAW_COLUMNS), and the scenario pools used.  When
    outdir is given, writes raw_runs.csv plus the four table files in
    CSV and fixed-width text form.
    """
    cfg = cfg or PlannerConfig()
    rows: list[AggregateRow] = []
    raw: list[dict] = []
    used_pools: dict[float, list[Scenario]] = {}
    for delta in deltas:
        if pools is not None and delta in pools:
            pool = pools[delta]
        else:
            pool_seed = seed * 1000 + int(round(delta * 1000))
            pool = generate_scenarios(robot, delta, scenarios_per_delta, pool_seed,
                                      cfg=cfg, gen=gen)
        used_pools[delta] = pool
        vmetrics, smetrics = [], []
        for sc in pool:
            tic = time.perf_counter()
            rv = plan_vanilla(sc.robot, sc.theta0, sc.goal, sc.obstacles, sc.delta, cfg)
            tv = time.perf_counter() - tic
            tic = time.perf_counter()
            rs = plan_sos(sc.robot, sc.theta0, sc.goal, sc.obstacles, sc.delta, cfg)
            ts = time.perf_counter() - tic
            mv = evaluate_run(rv, sc, tv)
            ms = evaluate_run(rs, sc, ts)
            vmetrics.append(mv)
            smetrics.append(ms)
            for planner, res, met in (("vanilla", rv, mv), ("sos", rs, ms)):
                raw.append({
                    "delta": delta, "scenario": sc.id, "planner": planner,
                    "success": int(met.success), "reason": res.reason,
                    "steps": met.steps, "violation_count": met.violation_count,
                    "violation_rate": met.violation_rate,
                    "final_distance": met.final_distance,
                    "path_length": res.path_length,
                    "path_length_ratio": met.path_length_ratio,
                    "wall_time": met.wall_time,
                    "cert_ms_per_step": met.cert_ms_per_step,
                })
        rows.append(AggregateRow(delta=delta, n=len(pool),
                                 vanilla=_aggregate(vmetrics), sos=_aggregate(smetrics)))
    if outdir is not None:
        write_outputs(Path(outdir), rows, raw, used_pools)
    return rows, raw, used_pools


def _fmt(mean_std: tuple[float, float]) -> str:
    m, s = mean_std
    return f"{m:.3f} +- {s:.3f}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_table(path: Path, title: str, header, rows) -> None:
    widths = [max(len(str(h)), max((len(str(r[i])) for r in rows), default=0))
              for i, h in enumerate(header)]
    lines = [title, "(mean +- sample std, ddof=1)"]
    lines.append("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_outputs(outdir: Path, rows, raw, pools) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    _write_csv(outdir / "raw_runs.csv", RAW_COLUMNS,
               [[("" if r[c] is None else r[c]) for c in RAW_COLUMNS] for r in raw])

    # scenario pool metadata
    meta_rows = []
    for delta, pool in pools.items():
        k0 = _mean_std([sc.kappa0 for sc in pool])
        kr = _mean_std([sc.kappa_ratio for sc in pool])
        meta_rows.append([f"{delta:.3f}", len(pool),
                          f"{k0[0]:.3f}", f"{k0[1]:.3f}", f"{kr[0]:.3f}", f"{kr[1]:.3f}"])
    _write_csv(outdir / "scenario_stats.csv",
               ["delta", "n", "kappa0_mean", "kappa0_std",
                "kappa_ratio_mean", "kappa_ratio_std"], meta_rows)
    _write_table(outdir / "scenario_stats.txt", "Scenario pool metadata",
                 ["delta", "N", "kappa0", "kappa_ratio"],
                 [[r[0], r[1], f"{r[2]} +- {r[3]}", f"{r[4]} +- {r[5]}"] for r in meta_rows])

    def table(filename, title, metric, percent=False):
        csv_rows, txt_rows = [], []
        for row in rows:
            v, s = row.vanilla[metric], row.sos[metric]
            csv_rows.append([f"{row.delta:.3f}", row.n,
                             f"{v[0]:.6g}", f"{v[1]:.6g}", f"{s[0]:.6g}", f"{s[1]:.6g}"])
            txt_rows.append([f"{row.delta:.3f}", row.n, _fmt(v), _fmt(s)])
        unit = " (%)" if percent else ""
        _write_csv(outdir / f"{filename}.csv",
                   ["delta", "n", f"vanilla_{metric}_mean", f"vanilla_{metric}_std",
                    f"sos_{metric}_mean", f"sos_{metric}_std"], csv_rows)
        _write_table(outdir / f"{filename}.txt", f"{title}{unit}",
                     ["delta", "N", "vanilla", "sos"], txt_rows)

    table("violation_counts", "Joint-limit violation count", "violation_count")
    table("violation_rates", "Joint-limit violation rate", "violation_rate", percent=True)
    table("success_rates", "Goal-reaching success rate", "success_rate", percent=True)
    table("path_ratios", "Path length / net displacement", "path_length_ratio")
    table("steps", "Planning steps", "steps")
    table("wall_times", "Wall time per scenario (s)", "wall_time")

    cert_rows = [[f"{row.delta:.3f}", row.n, _fmt(row.sos["cert_ms_per_step"])]
                 for row in rows if "cert_ms_per_step" in row.sos]
    if cert_rows:
        _write_csv(outdir / "cert_times.csv", ["delta", "n", "sos_cert_ms_per_step"],
                   [[r[0], r[1], r[2]] for r in cert_rows])
        _write_table(outdir / "cert_times.txt", "Certification time per step (ms)",
                     ["delta", "N", "sos"], cert_rows)


def recompute_row_from_raw(raw: list[dict], delta: float, planner: str) -> dict[str, tuple[float, float]]:
    """Re-aggregate one (delta, planner) cell straight from raw records;
    used to audit the AggregateRow computation."""
    rows = [r for r in raw if r["delta"] == delta and r["planner"] == planner]
    out = {}
    for metric, col in METRIC_COLUMNS.items():
        values = [r[col] for r in rows if r[col] is not None]
        if not values:
            continue
        if metric in ("success_rate", "violation_rate"):
            values = [100.0 * v for v in values]
        out[metric] = _mean_std(values)
    return out


# ---------------------------------------------------------------------------
# trace plots


def _joint_positions(robot: RobotModel, theta: np.ndarray) -> np.ndarray:
    """Base plus per-joint positions of the arm polyline."""
    offsets = np.column_stack([robot.lengths() * np.cos(theta),
                               robot.lengths() * np.sin(theta)])
    return np.vstack([[0.0, 0.0], np.cumsum(offsets, axis=0)])


def emit_plots(result: RunResult, scenario: Scenario, outdir, prefix: str = "run") -> list[Path]:
    """Write the four trace plots as SVG files; returns the paths."""
    if not result.steps:
        raise ValueError("cannot plot an empty trace")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    steps = result.steps
    idx = np.arange(len(steps))
    path_pts = np.vstack([steps[0].z_before] + [s.z_after for s in steps])
    goal = scenario.goal
    delta = float(np.min(scenario.delta))
    written = []

    # 1. Cartesian path with certified boxes and violation-marked segments
    canvas = SvgCanvas(560, 560)
    all_x = np.append(path_pts[:, 0], goal[0])
    all_y = np.append(path_pts[:, 1], goal[1])
    for ob in scenario.obstacles:
        all_x = np.append(all_x, [ob.center[0] - ob.inflated_radius,
                                  ob.center[0] + ob.inflated_radius])
        all_y = np.append(all_y, [ob.center[1] - ob.inflated_radius,
                                  ob.center[1] + ob.inflated_radius])
    span = max(all_x.max() - all_x.min(), all_y.max() - all_y.min(), 1e-6) * 0.08
    frame = Frame(canvas, (all_x.min() - span, all_x.max() + span),
                  (all_y.min() - span, all_y.max() + span))
    frame.axes(title="End-effector path", xlabel="z1 (m)", ylabel="z2 (m)")
    stride = max(1, len(steps) // 30)
    for s in steps[::stride]:
        lam = s.lambda_star
        if lam is None:
            continue
        x0, y0 = frame.pt((s.z_before[0] - lam, s.z_before[1] + lam))
        x1, y1 = frame.pt((s.z_before[0] + lam, s.z_before[1] - lam))
        canvas.rect(x0, y0, x1 - x0, y1 - y0, color="#9467bd", width=0.7, cls="lambda-box")
    for ob in scenario.obstacles:
        cx, cy = frame.pt(ob.center)
        scale = frame.w / (frame.x1 - frame.x0)
        canvas.circle(cx, cy, ob.radius * scale, color="#d62728", fill="#f7c8c8")
        canvas.circle(cx, cy, ob.inflated_radius * scale, color="#d62728", dash="4,3")
    frame.series(path_pts[:, 0], path_pts[:, 1], "#1f77b4", width=1.8, cls="path")
    for s in steps:
        if s.violation:
            canvas.polyline([frame.pt(s.z_before), frame.pt(s.z_after)],
                            color="#d62728", width=2.5, cls="violation")
    gx, gy = frame.pt(goal)
    canvas.circle(gx, gy, 4, color="#2ca02c", fill="#2ca02c")
    sx, sy = frame.pt(path_pts[0])
    canvas.circle(sx, sy, 4, color="#1f77b4", fill="#1f77b4")
    p = outdir / f"{prefix}_path.svg"
    canvas.write(p)
    written.append(p)

    # 2. max joint step per iteration against the bound
    svg = line_chart([(idx, [s.max_step_pre for s in steps], "#2ca02c", "max-joint-step")],
                     title="Max joint step per iteration", xlabel="iteration",
                     ylabel="rad", hline=delta, hline_label="delta")
    p = outdir / f"{prefix}_joint_steps.svg"
    p.write_text(svg, encoding="utf-8")
    written.append(p)

    # 3. certified half-width and conditioning per iteration
    kappas = np.array([s.kappa for s in steps])
    lams = np.array([s.lambda_star if s.lambda_star is not None else np.nan for s in steps])
    if np.all(np.isnan(lams)):
        series = [(idx, kappas, "#ff7f0e", "kappa")]
    else:
        # scale kappa into the lambda* range so both trends share one frame
        kn = kappas / kappas.max() * np.nanmax(lams)
        series = [(idx, np.nan_to_num(lams), "#9467bd", "lambda-star"),
                  (idx, kn, "#ff7f0e", "kappa-scaled")]
    svg = line_chart(series, title="Certified half-width vs conditioning",
                     xlabel="iteration", ylabel="m / scaled")
    p = outdir / f"{prefix}_lambda_kappa.svg"
    p.write_text(svg, encoding="utf-8")
    written.append(p)

    # 4. distance to goal plus sampled arm poses
    canvas = SvgCanvas(900, 420)
    dist = [float(np.linalg.norm(goal - s.z_before)) for s in steps]
    dist.append(float(np.linalg.norm(goal - steps[-1].z_after)))
    left = Frame(canvas, (0, len(dist) - 1), (0, max(dist)), rect=(55, 45, 360, 320))
    left.axes(title="Distance to goal", xlabel="iteration", ylabel="m")
    left.series(np.arange(len(dist)), dist, "#1f77b4", cls="distance")

    thetas = np.vstack([scenario.theta0,
                        scenario.theta0 + np.cumsum([s.dtheta for s in steps], axis=0)])
    poses = [_joint_positions(scenario.robot, th)
             for th in thetas[:: max(1, len(thetas) // 8)]]
    arm_pts = np.vstack(poses + [goal[None, :]])
    right = Frame(canvas, (arm_pts[:, 0].min() - 0.1, arm_pts[:, 0].max() + 0.1),
                  (arm_pts[:, 1].min() - 0.1, arm_pts[:, 1].max() + 0.1),
                  rect=(510, 45, 340, 320))
    right.axes(title="Sampled arm poses", xlabel="z1 (m)", ylabel="z2 (m)")
    for i, pose in enumerate(poses):
        shade = 40 + int(180 * i / max(1, len(poses) - 1))
        color = f"#{shade:02x}{shade:02x}{max(0, 220 - shade):02x}"
        right.series(pose[:, 0], pose[:, 1], color, width=1.4, cls=f"arm-{i}")
    gx, gy = right.pt(goal)
    canvas.circle(gx, gy, 4, color="#2ca02c", fill="#2ca02c")
    p = outdir / f"{prefix}_convergence.svg"
    canvas.write(p)
    written.append(p)
    return written
