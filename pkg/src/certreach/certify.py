"""Certified Cartesian half-width for the quadratic IK model.

The certification question: find the largest lambda such that for every
dz in the square [-lambda, lambda]^2 and every joint i, the polynomial
displacement satisfies |dtheta_i(dz)| <= delta_eff_i.

Because dtheta_i is an inhomogeneous quadratic, its maximum over a box is
attained at a vertex, an edge-interior stationary point, or the interior
stationary point, so `quad_box_max` enumerates those candidates and is
exact.  Feasibility is monotone in lambda (boxes are nested), which makes
a plain bisection on lambda correct; that is the production path.

`s_procedure_feasible` answers the same per-constraint question through a
positive-semidefiniteness certificate with two nonnegative multipliers.
For quadratics over box domains the two answers coincide, which the test
suite exercises as a cross-validation oracle; the multiplier search is a
bounded grid plus coordinate ascent, so queries very close to the
feasibility boundary may flip either way within the search tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polyik import PolyIkModel, quad_matrices
from .polyik import EffectiveBounds

# Eigenvalue / minor floor accepted as "positive semidefinite".
PSD_TOL = 1e-9

E11 = np.diag([1.0, 0.0, 0.0])


def _coeff_max(q00, q01, q02, q11, q12, q22, lam):
    """Exact max of q00 + 2 q01 x1 + 2 q02 x2 + q11 x1^2 + 2 q12 x1 x2 + q22 x2^2
    over [-lam, lam]^2, via candidate enumeration (pure-float hot path)."""

    def val(x1, x2):
        return (q00 + 2.0 * q01 * x1 + 2.0 * q02 * x2
                + q11 * x1 * x1 + 2.0 * q12 * x1 * x2 + q22 * x2 * x2)

    best = val(lam, lam)
    for x1, x2 in ((lam, -lam), (-lam, lam), (-lam, -lam)):
        v = val(x1, x2)
        if v > best:
            best = v
    # edge-interior stationary points (the 1-D restriction is quadratic)
    if q22 != 0.0:
        for s in (lam, -lam):
            x2 = -(q02 + q12 * s) / q22
            if -lam < x2 < lam:
                v = val(s, x2)
                if v > best:
                    best = v
    if q11 != 0.0:
        for s in (lam, -lam):
            x1 = -(q01 + q12 * s) / q11
            if -lam < x1 < lam:
                v = val(x1, s)
                if v > best:
                    best = v
    # interior stationary point of the full quadratic
    det = q11 * q22 - q12 * q12
    if det != 0.0:
        x1 = (-q01 * q22 + q02 * q12) / det
        x2 = (-q02 * q11 + q01 * q12) / det
        if -lam < x1 < lam and -lam < x2 < lam:
            v = val(x1, x2)
            if v > best:
                best = v
    return best


def quad_box_max(Q, lam: float) -> float:
    """Exact maximum of y^T Q y, y = (1, dz1, dz2), over dz in [-lam, lam]^2."""
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    Q = np.asarray(Q, dtype=float)
    return float(_coeff_max(Q[0, 0], Q[0, 1], Q[0, 2],
                            Q[1, 1], Q[1, 2], Q[2, 2], float(lam)))


def grid_box_max(Q, lam: float, side: int = 21) -> float:
    """Dense-grid maximizer over the box; underestimates the true maximum
    by at most O(grid step).  Retained as the grid certification oracle."""
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    Q = np.asarray(Q, dtype=float)
    ticks = np.linspace(-lam, lam, side)
    x1, x2 = np.meshgrid(ticks, ticks, indexing="ij")
    v = (Q[0, 0] + 2.0 * Q[0, 1] * x1 + 2.0 * Q[0, 2] * x2
         + Q[1, 1] * x1 ** 2 + 2.0 * Q[1, 2] * x1 * x2 + Q[2, 2] * x2 ** 2)
    return float(v.max())


@dataclass(eq=False)
class Certificate:
    """Certified half-width with per-joint diagnostics."""

    lambda_star: float
    delta_eff: np.ndarray       # bounds the certificate was computed against
    per_joint_slack: np.ndarray  # delta_eff_i - max |dtheta_i| over the box
    iterations: int


def certify_bisection(m: PolyIkModel, eff: EffectiveBounds, lambda_max: float,
                      iters: int = 50, oracle: str = "exact",
                      grid_side: int = 21) -> Certificate:
    """Largest lambda in [0, lambda_max] (to resolution lambda_max * 2**-iters)
    such that max |dtheta_i| over the lambda-box stays within eff for all i.

    oracle="exact" uses the analytic box maximizer; oracle="grid" uses the
    grid_side x grid_side dense grid instead.
    """
    eb = np.asarray(eff.delta_eff, dtype=float)
    if np.any(eb <= 0.0):
        raise ValueError("effective bounds must be strictly positive")
    if lambda_max <= 0.0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    Qs = quad_matrices(m)

    if oracle == "exact":
        cons = []
        for q, b in zip(Qs, eb):
            for sg in (1.0, -1.0):
                cons.append((sg * q[0, 0], sg * q[0, 1], sg * q[0, 2],
                             sg * q[1, 1], sg * q[1, 2], sg * q[2, 2], float(b)))

        def feasible(lam: float) -> bool:
            for c00, c01, c02, c11, c12, c22, b in cons:
                if _coeff_max(c00, c01, c02, c11, c12, c22, lam) > b:
                    return False
            return True
    elif oracle == "grid":
        def feasible(lam: float) -> bool:
            for q, b in zip(Qs, eb):
                if grid_box_max(q, lam, grid_side) > b:
                    return False
                if grid_box_max(-q, lam, grid_side) > b:
                    return False
            return True
    else:
        raise ValueError(f"unknown oracle {oracle!r}")

    # dtheta(0) = 0, so lambda = 0 is always feasible for positive bounds
    assert feasible(0.0), "zero box must be feasible for strictly positive bounds"

    if feasible(lambda_max):
        lam, used = float(lambda_max), 0
    else:
        lo, hi = 0.0, float(lambda_max)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        lam, used = lo, iters

    slack = np.array([b - max(quad_box_max(q, lam), quad_box_max(-q, lam))
                      for q, b in zip(Qs, eb)])
    return Certificate(lambda_star=lam, delta_eff=eb.copy(),
                       per_joint_slack=slack, iterations=used)


def certificate_to_dict(cert: Certificate, epsilon: float | None = None) -> dict:
    """Trace-JSON form (keys: lambda_star, epsilon, delta_eff, slack, iterations)."""
    return {
        "lambda_star": cert.lambda_star,
        "epsilon": epsilon,
        "delta_eff": cert.delta_eff.tolist(),
        "slack": cert.per_joint_slack.tolist(),
        "iterations": cert.iterations,
    }


def domain_forms(lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Monomial-basis forms of the box constraints lam^2 - dz_k^2 >= 0."""
    return (np.diag([lam * lam, -1.0, 0.0]), np.diag([lam * lam, 0.0, -1.0]))


def s_matrix(Q, delta_i: float, sigma: float, lam: float, c1: float, c2: float) -> np.ndarray:
    """Certificate matrix S = -sigma Q + delta_i E11 - c1 G1 - c2 G2.

    If S is PSD with c1, c2 >= 0 then for every dz in the box,
    0 <= y^T S y = delta_i - sigma dtheta - sum_k c_k (lam^2 - dz_k^2)
    and each subtracted term is nonnegative there, hence
    sigma * dtheta <= delta_i on the whole box.
    """
    G1, G2 = domain_forms(lam)
    return -sigma * np.asarray(Q, dtype=float) + delta_i * E11 - c1 * G1 - c2 * G2


def sylvester_minors(S) -> np.ndarray:
    """Leading principal minors of a symmetric 3x3 matrix."""
    S = np.asarray(S, dtype=float)
    return np.array([S[0, 0],
                     S[0, 0] * S[1, 1] - S[0, 1] ** 2,
                     np.linalg.det(S)])


@dataclass(eq=False)
class SProcWitness:
    """Nonnegative multipliers and the PSD matrix they produce."""

    c1: float
    c2: float
    S: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.S)[0])

    def minors(self) -> np.ndarray:
        return sylvester_minors(self.S)


def _batch_min_eig(S0, G1, G2, c1s, c2s) -> np.ndarray:
    """Minimum eigenvalue of S0 - c1 G1 - c2 G2 on the (c1, c2) grid."""
    c1g, c2g = np.meshgrid(c1s, c2s, indexing="ij")
    c1f = c1g.ravel()[:, None, None]
    c2f = c2g.ravel()[:, None, None]
    stack = S0[None, :, :] - c1f * G1[None, :, :] - c2f * G2[None, :, :]
    vals = np.linalg.eigvalsh(stack)[:, 0]
    return vals.reshape(len(c1s), len(c2s))


def _golden_max(f, lo: float, hi: float, iters: int = 40) -> float:
    """Argmax of a concave scalar function on [lo, hi]."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)


def s_procedure_feasible(Q, delta_eff_i: float, sigma: float, lam: float,
                         tol: float = PSD_TOL) -> SProcWitness | None:
    """Search multipliers c1, c2 >= 0 making s_matrix PSD; None if not found.

    The minimum eigenvalue is concave in (c1, c2), so the search is a
    log-spaced 60x60 grid over [0, c_max]^2, refined once around the best
    cell, then polished by per-coordinate golden-section ascent.
    """
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    if delta_eff_i <= 0.0:
        raise ValueError(f"delta_eff must be positive, got {delta_eff_i}")
    Q = np.asarray(Q, dtype=float)
    cmax = 10.0 * (np.linalg.norm(Q) + delta_eff_i) / max(lam * lam, 1e-12)
    G1, G2 = domain_forms(lam)
    S0 = -sigma * Q + delta_eff_i * E11

    def mineig(c1: float, c2: float) -> float:
        return float(np.linalg.eigvalsh(S0 - c1 * G1 - c2 * G2)[0])

    axis = np.concatenate([[0.0], np.geomspace(cmax * 1e-9, cmax, 59)])
    grid = _batch_min_eig(S0, G1, G2, axis, axis)
    i, j = np.unravel_index(np.argmax(grid), grid.shape)

    def bracket(k: int) -> tuple[float, float]:
        lo = axis[k - 1] if k > 0 else 0.0
        hi = axis[k + 1] if k + 1 < len(axis) else axis[-1]
        return lo, hi

    lo1, hi1 = bracket(i)
    lo2, hi2 = bracket(j)
    ref1 = np.linspace(lo1, hi1, 60)
    ref2 = np.linspace(lo2, hi2, 60)
    grid2 = _batch_min_eig(S0, G1, G2, ref1, ref2)
    i2, j2 = np.unravel_index(np.argmax(grid2), grid2.shape)
    c1, c2 = float(ref1[i2]), float(ref2[j2])

    span1 = max(hi1 - lo1, cmax * 1e-9)
    span2 = max(hi2 - lo2, cmax * 1e-9)
    for _ in range(3):
        c1 = _golden_max(lambda c: mineig(c, c2), max(0.0, c1 - span1), c1 + span1)
        c2 = _golden_max(lambda c: mineig(c1, c), max(0.0, c2 - span2), c2 + span2)

    best = max(((c1, c2), (float(ref1[i2]), float(ref2[j2])), (float(axis[i]), float(axis[j]))),
               key=lambda c: mineig(*c))
    S = S0 - best[0] * G1 - best[1] * G2
    if float(np.linalg.eigvalsh(S)[0]) >= -tol and np.all(sylvester_minors(S) >= -tol):
        return SProcWitness(c1=best[0], c2=best[1], S=S)
    return None
