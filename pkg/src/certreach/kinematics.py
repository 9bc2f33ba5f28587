"""Planar n-link revolute arm: forward kinematics, Jacobian, conditioning.

Each joint angle is measured absolutely in the world frame, so the
end-effector position is the vector sum of the per-link offsets
l_i * (cos t_i, sin t_i) and the Jacobian columns decouple per joint.
All functions are pure and operate on float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative singular-value cutoff below which the Jacobian is treated as
# rank deficient (no damping: callers must handle the error).
SV_CUTOFF = 1e-10


class SingularityError(ValueError):
    """The Jacobian is numerically rank deficient at this configuration."""


@dataclass(frozen=True)
class RobotModel:
    """Planar revolute arm described by its link lengths in meters."""

    link_lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        lengths = tuple(float(v) for v in self.link_lengths)
        if len(lengths) < 2:
            raise ValueError(f"need at least 2 links, got {len(lengths)}")
        if any(v <= 0.0 for v in lengths):
            raise ValueError(f"link lengths must be positive, got {lengths}")
        object.__setattr__(self, "link_lengths", lengths)

    @property
    def n(self) -> int:
        return len(self.link_lengths)

    @property
    def reach(self) -> float:
        """Radius of the reachable disk."""
        return float(sum(self.link_lengths))

    def lengths(self) -> np.ndarray:
        return np.asarray(self.link_lengths, dtype=float)


def _check_config(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n,):
        raise ValueError(f"expected {model.n} joint angles, got shape {q.shape}")
    return q


def forward_kinematics(model: RobotModel, q) -> np.ndarray:
    """End-effector position (sum l_i cos t_i, sum l_i sin t_i)."""
    q = _check_config(model, q)
    lengths = model.lengths()
    return np.array([np.dot(lengths, np.cos(q)), np.dot(lengths, np.sin(q))])


def jacobian(model: RobotModel, q) -> np.ndarray:
    """2 x n Jacobian: column i is (-l_i sin t_i, l_i cos t_i)."""
    q = _check_config(model, q)
    lengths = model.lengths()
    return np.vstack([-lengths * np.sin(q), lengths * np.cos(q)])


def pseudoinverse(J) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a full-row-rank 2 x n Jacobian.

    Raises SingularityError when sigma_min < SV_CUTOFF * sigma_max.
    """
    J = np.asarray(J, dtype=float)
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    if s[0] == 0.0 or s[-1] < SV_CUTOFF * s[0]:
        raise SingularityError(f"rank-deficient Jacobian (singular values {s})")
    return (Vt.T / s) @ U.T


def condition_number(J) -> float:
    """sigma_max / sigma_min of the Jacobian."""
    s = np.linalg.svd(np.asarray(J, dtype=float), compute_uv=False)
    if s[0] == 0.0 or s[-1] < SV_CUTOFF * s[0]:
        raise SingularityError("condition number is effectively infinite "
                               f"(singular values {s})")
    return float(s[0] / s[-1])


def within_bounds(q_next, q_curr, delta) -> bool:
    """True iff |q_next_i - q_curr_i| <= delta_i for all i (closed set)."""
    q_next = np.asarray(q_next, dtype=float)
    q_curr = np.asarray(q_curr, dtype=float)
    if q_next.shape != q_curr.shape:
        raise ValueError("configuration dimension mismatch")
    delta = np.asarray(delta, dtype=float)
    if delta.ndim == 0:
        delta = np.full(q_curr.shape, float(delta))
    elif delta.shape != q_curr.shape:
        raise ValueError("bounds dimension mismatch")
    return bool(np.all(np.abs(q_next - q_curr) <= delta))
