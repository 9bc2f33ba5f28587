"""certreach: certified Cartesian reachable boxes for planar revolute arms,
with an adaptive-step Bug2 planner driven by the certificates."""

from .kinematics import (RobotModel, SingularityError, condition_number,
                         forward_kinematics, jacobian, pseudoinverse,
                         within_bounds)
from .polyik import (EffectiveBounds, PolyIkModel, build_poly_ik,
                     effective_bounds, estimate_error, eval_poly_ik,
                     joint_displacement, quad_matrices, split_quad_matrix)
from .certify import (Certificate, SProcWitness, certify_bisection,
                      grid_box_max, quad_box_max, s_procedure_feasible)
from .planner import (Bug2State, Obstacle, PlannerConfig, RunResult,
                      StepRecord, bug2_after_step, bug2_direction, plan_sos,
                      plan_vanilla, run_result_from_dict, run_result_to_dict)
from .scenario import (GenConfig, Scenario, generate_scenarios, load_scenarios,
                       save_scenarios)
from .bench import (AggregateRow, RunMetrics, emit_plots, evaluate_run,
                    run_benchmark)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow", "Bug2State", "Certificate", "EffectiveBounds", "GenConfig",
    "Obstacle", "PlannerConfig", "PolyIkModel", "RobotModel", "RunMetrics",
    "RunResult", "SProcWitness", "Scenario", "SingularityError", "StepRecord",
    "build_poly_ik", "bug2_after_step", "bug2_direction", "certify_bisection",
    "condition_number", "effective_bounds", "emit_plots", "estimate_error",
    "eval_poly_ik", "evaluate_run", "forward_kinematics", "generate_scenarios",
    "grid_box_max", "jacobian", "joint_displacement", "load_scenarios",
    "plan_sos", "plan_vanilla", "pseudoinverse", "quad_box_max",
    "quad_matrices", "run_benchmark", "run_result_from_dict",
    "run_result_to_dict", "s_procedure_feasible", "save_scenarios",
    "split_quad_matrix", "within_bounds",
]
