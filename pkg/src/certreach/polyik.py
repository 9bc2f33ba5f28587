"""Local second-order polynomial inverse kinematics with a gridded error bound.

Around a configuration theta0 with end-effector position z0, the joint
displacement for a small task displacement dz = (dz1, dz2) is modeled per
joint i as

    dtheta_i(dz) = A[i,0] dz1 + A[i,1] dz2
                   + b11_i dz1^2 + b12_i dz1 dz2 + b22_i dz2^2,

where A is the Jacobian pseudoinverse at theta0 and the quadratic
coefficients are one-sided finite differences of the pseudoinverse
evaluated at configurations displaced along the first-order IK
directions.  The model is trusted only on the box [-rho, rho]^2, over
which `estimate_error` grids the worst-case task-space residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import RobotModel, forward_kinematics, jacobian, pseudoinverse


@dataclass(eq=False)
class PolyIkModel:
    """Quadratic local IK around (theta0, z0); see module docstring."""

    theta0: np.ndarray            # (n,)
    z0: np.ndarray                # (2,)
    A: np.ndarray                 # (n, 2) first-order gain (pseudoinverse at theta0)
    B: np.ndarray                 # (n, 2, 2) symmetric quadratic corrections
    rho: float                    # half-width of the trusted task-space box
    fd_step: float                # finite-difference step used for B
    epsilon: float | None = None  # worst-case task error over [-rho, rho]^2

    @property
    def n(self) -> int:
        return self.theta0.shape[0]


def build_poly_ik(model: RobotModel, theta0, rho: float, fd_step: float = 1e-4) -> PolyIkModel:
    """Fit the quadratic IK model at theta0.

    The error bound `epsilon` is left unpopulated; call `estimate_error`.
    Raises SingularityError if the Jacobian is rank deficient at theta0 or
    at one of the two perturbed configurations.
    """
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    if fd_step <= 0.0:
        raise ValueError(f"fd_step must be positive, got {fd_step}")
    theta0 = np.asarray(theta0, dtype=float).copy()
    z0 = forward_kinematics(model, theta0)
    A = pseudoinverse(jacobian(model, theta0))
    h = float(fd_step)
    Jp1 = pseudoinverse(jacobian(model, theta0 + A[:, 0] * h))
    Jp2 = pseudoinverse(jacobian(model, theta0 + A[:, 1] * h))
    b11 = (Jp1[:, 0] - A[:, 0]) / (2.0 * h)
    b22 = (Jp2[:, 1] - A[:, 1]) / (2.0 * h)
    b12 = (Jp1[:, 1] - A[:, 1]) / h
    B = np.empty((model.n, 2, 2))
    B[:, 0, 0] = b11
    B[:, 0, 1] = b12 / 2.0
    B[:, 1, 0] = b12 / 2.0
    B[:, 1, 1] = b22
    return PolyIkModel(theta0=theta0, z0=z0, A=A, B=B, rho=float(rho), fd_step=h)


def joint_displacement(m: PolyIkModel, dz) -> np.ndarray:
    """Polynomial joint displacement; dz may be shaped (2,) or (k, 2)."""
    dz = np.asarray(dz, dtype=float)
    lin = dz @ m.A.T
    quad = np.einsum("...j,ijk,...k->...i", dz, m.B, dz)
    return lin + quad


def eval_poly_ik(m: PolyIkModel, dz) -> np.ndarray:
    """Joint configuration predicted for task displacement dz."""
    return m.theta0 + joint_displacement(m, dz)


def quad_matrices(m: PolyIkModel) -> np.ndarray:
    """Per-joint 3x3 forms Q_i with dtheta_i = y^T Q_i y, y = (1, dz1, dz2)."""
    Q = np.zeros((m.n, 3, 3))
    Q[:, 0, 1] = Q[:, 1, 0] = m.A[:, 0] / 2.0
    Q[:, 0, 2] = Q[:, 2, 0] = m.A[:, 1] / 2.0
    Q[:, 1:, 1:] = m.B
    return Q


def split_quad_matrix(Q) -> tuple[np.ndarray, np.ndarray]:
    """Recover (A_row, B_block) from one 3x3 form; inverse of quad_matrices."""
    Q = np.asarray(Q, dtype=float)
    a = np.array([2.0 * Q[0, 1], 2.0 * Q[0, 2]])
    return a, Q[1:, 1:].copy()


def _fk_batch(model: RobotModel, thetas: np.ndarray) -> np.ndarray:
    """forward_kinematics over rows of a (k, n) configuration array."""
    lengths = model.lengths()
    return np.column_stack([np.cos(thetas) @ lengths, np.sin(thetas) @ lengths])


def estimate_error(m: PolyIkModel, model: RobotModel, grid_side: int = 7) -> float:
    """Worst task-space residual ||FK(theta0 + dtheta(dz)) - (z0 + dz)||
    over a grid_side x grid_side grid on [-rho, rho]^2."""
    if grid_side < 2:
        raise ValueError(f"grid_side must be >= 2, got {grid_side}")
    ticks = np.linspace(-m.rho, m.rho, grid_side)
    g1, g2 = np.meshgrid(ticks, ticks, indexing="ij")
    dz = np.column_stack([g1.ravel(), g2.ravel()])
    theta = m.theta0 + joint_displacement(m, dz)
    err = np.linalg.norm(_fk_batch(model, theta) - (m.z0 + dz), axis=1)
    return float(err.max())


@dataclass(frozen=True, eq=False)
class EffectiveBounds:
    """Per-joint bounds left after subtracting the model error bound."""

    delta_eff: np.ndarray

    @property
    def too_coarse(self) -> bool:
        """True when the error bound consumed some joint budget entirely;
        the caller should rebuild with a smaller rho."""
        return bool(np.any(self.delta_eff <= 0.0))


def effective_bounds(delta, epsilon: float) -> EffectiveBounds:
    """delta_i - epsilon componentwise; check `.too_coarse` before use."""
    delta = np.asarray(delta, dtype=float)
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    return EffectiveBounds(delta_eff=delta - float(epsilon))


def model_to_dict(m: PolyIkModel) -> dict:
    """JSON-ready representation (keys: theta0, z0, A, B, rho, epsilon, h)."""
    return {
        "theta0": m.theta0.tolist(),
        "z0": m.z0.tolist(),
        "A": m.A.tolist(),
        "B": m.B.tolist(),
        "rho": m.rho,
        "epsilon": m.epsilon,
        "h": m.fd_step,
    }


def model_from_dict(d: dict) -> PolyIkModel:
    return PolyIkModel(
        theta0=np.asarray(d["theta0"], dtype=float),
        z0=np.asarray(d["z0"], dtype=float),
        A=np.asarray(d["A"], dtype=float),
        B=np.asarray(d["B"], dtype=float),
        rho=float(d["rho"]),
        fd_step=float(d["h"]),
        epsilon=None if d.get("epsilon") is None else float(d["epsilon"]),
    )
