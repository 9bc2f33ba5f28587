"""Bug2 planners: certified adaptive-step planner and fixed-step clipping baseline.

Both planners share one Bug2 state machine (go-to-goal / boundary-follow
with the classic m-line leave condition).  The certified planner sizes
each Cartesian step from the certified half-width lambda* and updates the
joints through the quadratic IK model, so joint steps respect the bounds
by construction.  The baseline uses a fixed Cartesian step s = delta/kappa0
with first-order IK and clips joint steps to the bounds, so its realized
end-effector position drifts from the commanded one whenever clipping
engages.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .certify import Certificate, certificate_to_dict, certify_bisection
from .kinematics import (RobotModel, SingularityError, condition_number,
                         forward_kinematics, jacobian, pseudoinverse)
from .polyik import build_poly_ik, effective_bounds, estimate_error, eval_poly_ik

GTG = "GTG"
BF = "BF"

REASON_GOAL = "goal"
REASON_BUDGET = "budget"
REASON_INFEASIBLE = "infeasible"
REASON_SINGULAR = "singular"


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Circular obstacle; collision checks use radius + safety_margin."""

    center: np.ndarray
    radius: float
    safety_margin: float = 0.008

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(2))
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.safety_margin < 0.0:
            raise ValueError(f"safety_margin must be nonnegative, got {self.safety_margin}")

    @property
    def inflated_radius(self) -> float:
        return self.radius + self.safety_margin

    def contains(self, z) -> bool:
        """Strictly inside the inflated disk."""
        return bool(np.linalg.norm(np.asarray(z, dtype=float) - self.center) < self.inflated_radius)


@dataclass
class PlannerConfig:
    alpha: float = 0.75            # conservatism factor on lambda*
    eps_tol: float = 0.005         # goal tolerance (m)
    eps_min: float = 1e-6          # smallest acceptable lambda* before rho retry
    rho0: float = 0.008            # initial polynomial-IK trust radius
    rho_retries: int = 3           # max rho halvings per step
    max_steps: int = 600           # certified-planner budget
    vanilla_max_steps: int = 500   # baseline budget
    fd_step: float = 1e-4
    bisect_iters: int = 50
    error_grid_side: int = 7
    scaleback: float = 0.9         # numeric safety factor on marginal overshoot
    bf_turn: str = "left"          # boundary-follow turn direction
    oracle: str = "exact"          # certification oracle ("exact" | "grid")
    cert_grid_side: int = 21

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.eps_tol <= 0.0:
            raise ValueError(f"eps_tol must be positive, got {self.eps_tol}")
        if self.max_steps < 1 or self.vanilla_max_steps < 1:
            raise ValueError("step budgets must be >= 1")
        if self.rho_retries < 0:
            raise ValueError("rho_retries must be >= 0")
        if self.bf_turn not in ("left", "right"):
            raise ValueError(f"bf_turn must be 'left' or 'right', got {self.bf_turn!r}")


@dataclass
class Bug2State:
    """Mode plus the m-line bookkeeping shared by both planners."""

    start: np.ndarray
    goal: np.ndarray
    turn: float = 1.0              # +1 left (counterclockwise), -1 right
    mode: str = GTG
    hit_point: np.ndarray | None = None
    hit_distance: float = float("inf")
    bf_steps: int = 0


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def segment_hits_circle(p, q, center, radius: float) -> bool:
    """Closed segment p->q intersects the open disk of the given radius."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(q, dtype=float) - p
    f = p - np.asarray(center, dtype=float)
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, -float(f @ d) / dd))
    closest = f + t * d
    return float(closest @ closest) < radius * radius


def predicted_collision(z, dz, obstacles) -> bool:
    z = np.asarray(z, dtype=float)
    return any(segment_hits_circle(z, z + dz, ob.center, ob.inflated_radius)
               for ob in obstacles)


def _nearest_obstacle(z, obstacles) -> Obstacle:
    z = np.asarray(z, dtype=float)
    return min(obstacles,
               key=lambda ob: np.linalg.norm(z - ob.center) - ob.inflated_radius)


def _bf_direction(z, ob: Obstacle, turn: float) -> np.ndarray:
    """Tangent at the closest boundary point of the inflated disk.

    A tangent step from outside the disk can never enter it; positions
    that have already drifted inside (baseline clipping drift) blend in an
    outward radial component so the follower escapes.
    """
    z = np.asarray(z, dtype=float)
    n = _unit(z - ob.center)
    t = turn * np.array([-n[1], n[0]])
    if float(np.linalg.norm(z - ob.center)) < ob.inflated_radius:
        return _unit(t + n)
    return t


def bug2_direction(state: Bug2State, z, goal, obstacles,
                   step_len: float) -> tuple[np.ndarray, Bug2State]:
    """Unit direction for the current mode, updating the mode in place.

    In GTG, if the candidate step of length step_len toward the goal is
    predicted to collide (segment vs. inflated disk), the current position
    is recorded as the hit point and the mode switches to BF.
    """
    z = np.asarray(z, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if state.mode == GTG:
        d = _unit(goal - z)
        if obstacles and predicted_collision(z, step_len * d, obstacles):
            state.mode = BF
            state.hit_point = z.copy()
            state.hit_distance = float(np.linalg.norm(goal - z))
            state.bf_steps = 0
            d = _bf_direction(z, _nearest_obstacle(z, obstacles), state.turn)
    else:
        d = _bf_direction(z, _nearest_obstacle(z, obstacles), state.turn)
    return d, state


def _mline_crossing(state: Bug2State, z_prev, z_new, tol: float = 1e-9):
    """Crossing point of the step segment with the start-goal line, or None."""
    m = state.goal - state.start
    length = float(np.linalg.norm(m))
    if length == 0.0:
        return None
    mhat = m / length
    s_prev = float(mhat[0] * (z_prev[1] - state.start[1]) - mhat[1] * (z_prev[0] - state.start[0]))
    s_new = float(mhat[0] * (z_new[1] - state.start[1]) - mhat[1] * (z_new[0] - state.start[0]))
    if abs(s_new) <= tol:
        pt = np.asarray(z_new, dtype=float)
    elif s_prev * s_new < 0.0:
        w = s_prev / (s_prev - s_new)
        pt = z_prev + w * (np.asarray(z_new) - np.asarray(z_prev))
    else:
        return None
    proj = float((pt - state.start) @ mhat)
    if -tol <= proj <= length + tol:
        return pt
    return None


def bug2_after_step(state: Bug2State, z_prev, z_new, step_len: float,
                    min_bf_steps: int = 10,
                    revisit_factor: float = 1.5) -> tuple[Bug2State, bool]:
    """Post-step bookkeeping; second return value is True on BF loop closure.

    Leaves BF when the m-line is crossed strictly closer to the goal than
    the hit point; declares loop closure when the hit point is revisited
    (within revisit_factor * step_len) after at least min_bf_steps BF steps.
    """
    if state.mode != BF:
        return state, False
    state.bf_steps += 1
    pt = _mline_crossing(state, np.asarray(z_prev, float), np.asarray(z_new, float))
    if pt is not None and float(np.linalg.norm(state.goal - pt)) < state.hit_distance - 1e-9:
        state.mode = GTG
        state.hit_point = None
        state.hit_distance = float("inf")
        state.bf_steps = 0
        return state, False
    if (state.bf_steps >= min_bf_steps
            and float(np.linalg.norm(np.asarray(z_new) - state.hit_point)) <= revisit_factor * step_len):
        return state, True
    return state, False


@dataclass(eq=False)
class StepRecord:
    index: int
    mode: str
    z_before: np.ndarray
    z_after: np.ndarray
    dz: np.ndarray            # requested Cartesian displacement
    dtheta: np.ndarray        # applied joint step
    max_step_pre: float       # max |dtheta_i| before clip / scale-back
    kappa: float
    violation: bool           # pre-adjustment max step exceeded a bound
    adjusted: bool            # clipped (baseline) or scaled back (certified)
    certificate: Certificate | None = None
    epsilon: float | None = None

    @property
    def lambda_star(self) -> float | None:
        return None if self.certificate is None else self.certificate.lambda_star


@dataclass(eq=False)
class RunResult:
    success: bool
    reason: str               # goal | budget | infeasible | singular
    steps: list[StepRecord]
    final_distance: float
    path_length: float
    # Wall seconds of the per-step model+certify pipeline; measured, hence
    # excluded from determinism comparisons of the trace.
    cert_times: list[float] = field(default_factory=list)

    @property
    def violation_count(self) -> int:
        return sum(1 for s in self.steps if s.violation)


def _as_bounds(delta, n: int) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.ndim == 0:
        delta = np.full(n, float(delta))
    if delta.shape != (n,):
        raise ValueError(f"expected {n} joint bounds, got shape {delta.shape}")
    if np.any(delta <= 0.0):
        raise ValueError("joint bounds must be strictly positive")
    return delta


def _certified_model(model: RobotModel, theta, delta, cfg: PlannerConfig):
    """Quadratic IK model plus certificate, halving rho until usable.

    Returns (m, cert) with cert None when every retry was either too
    coarse (delta_eff <= 0) or certified below eps_min.
    """
    rho = cfg.rho0
    m = None
    for _ in range(cfg.rho_retries + 1):
        m = build_poly_ik(model, theta, rho, cfg.fd_step)
        m.epsilon = estimate_error(m, model, cfg.error_grid_side)
        eff = effective_bounds(delta, m.epsilon)
        if not eff.too_coarse:
            cert = certify_bisection(m, eff, lambda_max=rho, iters=cfg.bisect_iters,
                                     oracle=cfg.oracle, grid_side=cfg.cert_grid_side)
            if cert.lambda_star >= cfg.eps_min:
                return m, cert
        rho *= 0.5
    return m, None


def plan_sos(model: RobotModel, theta0, goal, obstacles, bounds,
             cfg: PlannerConfig | None = None) -> RunResult:
    """Certified adaptive-step Bug2 run.

    Per step: fit the quadratic IK model, bound its error, certify
    lambda*, move alpha*lambda* along the Bug2 direction (componentwise
    clamped to the certified box) and update joints through the model.
    """
    cfg = cfg or PlannerConfig()
    theta = np.asarray(theta0, dtype=float).copy()
    goal = np.asarray(goal, dtype=float)
    delta = _as_bounds(bounds, model.n)
    z = forward_kinematics(model, theta)
    if any(ob.contains(z) for ob in obstacles):
        raise ValueError("start position lies inside an inflated obstacle")
    state = Bug2State(start=z.copy(), goal=goal.copy(),
                      turn=1.0 if cfg.bf_turn == "left" else -1.0)
    steps: list[StepRecord] = []
    cert_times: list[float] = []
    path_len = 0.0

    for t in range(cfg.max_steps):
        dist = float(np.linalg.norm(goal - z))
        if dist < cfg.eps_tol:
            return RunResult(True, REASON_GOAL, steps, dist, path_len, cert_times)

        tic = time.perf_counter()
        try:
            kappa = condition_number(jacobian(model, theta))
            m, cert = _certified_model(model, theta, delta, cfg)
        except SingularityError:
            return RunResult(False, REASON_SINGULAR, steps, dist, path_len, cert_times)
        cert_times.append(time.perf_counter() - tic)
        if cert is None:
            return RunResult(False, REASON_INFEASIBLE, steps, dist, path_len, cert_times)

        lam = cert.lambda_star
        step_len = cfg.alpha * lam
        d, state = bug2_direction(state, z, goal, obstacles, step_len)
        dz = np.clip(step_len * d, -lam, lam)
        theta_next = eval_poly_ik(m, dz)
        dtheta = theta_next - theta
        max_pre = float(np.max(np.abs(dtheta)))
        violation = bool(np.any(np.abs(dtheta) > delta))
        adjusted = False
        with np.errstate(divide="ignore"):
            ratio = float(np.min(delta / np.maximum(np.abs(dtheta), 1e-300)))
        if ratio < 1.0:
            dtheta = dtheta * (cfg.scaleback * ratio)
            theta_next = theta + dtheta
            adjusted = True
        z_next = forward_kinematics(model, theta_next)
        steps.append(StepRecord(t, state.mode, z.copy(), z_next.copy(), dz, dtheta,
                                max_pre, kappa, violation, adjusted,
                                certificate=cert, epsilon=m.epsilon))
        path_len += float(np.linalg.norm(z_next - z))
        state, closed = bug2_after_step(state, z, z_next, step_len)
        theta, z = theta_next, z_next
        if closed:
            return RunResult(False, REASON_INFEASIBLE, steps,
                             float(np.linalg.norm(goal - z)), path_len, cert_times)

    return RunResult(False, REASON_BUDGET, steps,
                     float(np.linalg.norm(goal - z)), path_len, cert_times)


def plan_vanilla(model: RobotModel, theta0, goal, obstacles, bounds,
                 cfg: PlannerConfig | None = None,
                 kappa0: float | None = None) -> RunResult:
    """Fixed-step Bug2 baseline: s = delta / kappa0, first-order IK,
    componentwise clipping of joint steps to the bounds."""
    cfg = cfg or PlannerConfig()
    theta = np.asarray(theta0, dtype=float).copy()
    goal = np.asarray(goal, dtype=float)
    delta = _as_bounds(bounds, model.n)
    z = forward_kinematics(model, theta)
    if any(ob.contains(z) for ob in obstacles):
        raise ValueError("start position lies inside an inflated obstacle")
    if kappa0 is None:
        kappa0 = condition_number(jacobian(model, theta))
    s = float(np.min(delta)) / kappa0
    state = Bug2State(start=z.copy(), goal=goal.copy(),
                      turn=1.0 if cfg.bf_turn == "left" else -1.0)
    steps: list[StepRecord] = []
    path_len = 0.0

    for t in range(cfg.vanilla_max_steps):
        dist = float(np.linalg.norm(goal - z))
        if dist < cfg.eps_tol:
            return RunResult(True, REASON_GOAL, steps, dist, path_len)

        try:
            J = jacobian(model, theta)
            kappa = condition_number(J)
            Jp = pseudoinverse(J)
        except SingularityError:
            return RunResult(False, REASON_SINGULAR, steps, dist, path_len)

        d, state = bug2_direction(state, z, goal, obstacles, s)
        dz = s * d
        dtheta = Jp @ dz
        max_pre = float(np.max(np.abs(dtheta)))
        violation = bool(np.any(np.abs(dtheta) > delta))
        clipped = np.clip(dtheta, -delta, delta)
        adjusted = bool(np.any(clipped != dtheta))
        theta = theta + clipped
        z_next = forward_kinematics(model, theta)
        steps.append(StepRecord(t, state.mode, z.copy(), z_next.copy(), dz, clipped,
                                max_pre, kappa, violation, adjusted))
        path_len += float(np.linalg.norm(z_next - z))
        state, closed = bug2_after_step(state, z, z_next, s)
        z = z_next
        if closed:
            return RunResult(False, REASON_INFEASIBLE, steps,
                             float(np.linalg.norm(goal - z)), path_len)

    return RunResult(False, REASON_BUDGET, steps,
                     float(np.linalg.norm(goal - z)), path_len)


def step_to_dict(s: StepRecord) -> dict:
    d = {
        "index": s.index,
        "mode": s.mode,
        "z_before": s.z_before.tolist(),
        "z_after": s.z_after.tolist(),
        "dz": s.dz.tolist(),
        "dtheta": s.dtheta.tolist(),
        "max_step_pre": s.max_step_pre,
        "kappa": s.kappa,
        "violation": s.violation,
        "adjusted": s.adjusted,
        "certificate": None,
    }
    if s.certificate is not None:
        d["certificate"] = certificate_to_dict(s.certificate, s.epsilon)
    return d


def run_result_to_dict(r: RunResult, include_timing: bool = True) -> dict:
    d = {
        "success": r.success,
        "reason": r.reason,
        "final_distance": r.final_distance,
        "path_length": r.path_length,
        "steps": [step_to_dict(s) for s in r.steps],
    }
    if include_timing:
        d["cert_times"] = list(r.cert_times)
    return d


def _step_from_dict(d: dict) -> StepRecord:
    cert = None
    epsilon = None
    if d.get("certificate") is not None:
        c = d["certificate"]
        cert = Certificate(lambda_star=float(c["lambda_star"]),
                           delta_eff=np.asarray(c["delta_eff"], dtype=float),
                           per_joint_slack=np.asarray(c["slack"], dtype=float),
                           iterations=int(c["iterations"]))
        epsilon = None if c.get("epsilon") is None else float(c["epsilon"])
    return StepRecord(
        index=int(d["index"]), mode=d["mode"],
        z_before=np.asarray(d["z_before"], dtype=float),
        z_after=np.asarray(d["z_after"], dtype=float),
        dz=np.asarray(d["dz"], dtype=float),
        dtheta=np.asarray(d["dtheta"], dtype=float),
        max_step_pre=float(d["max_step_pre"]), kappa=float(d["kappa"]),
        violation=bool(d["violation"]), adjusted=bool(d["adjusted"]),
        certificate=cert, epsilon=epsilon)


def run_result_from_dict(d: dict) -> RunResult:
    return RunResult(
        success=bool(d["success"]), reason=d["reason"],
        steps=[_step_from_dict(s) for s in d["steps"]],
        final_distance=float(d["final_distance"]),
        path_length=float(d["path_length"]),
        cert_times=[float(v) for v in d.get("cert_times", [])])
