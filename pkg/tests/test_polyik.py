import numpy as np
import pytest

import certreach.polyik as polyik
from certreach import (RobotModel, build_poly_ik, effective_bounds,
                       estimate_error, eval_poly_ik, joint_displacement,
                       quad_matrices, split_quad_matrix)
from certreach.polyik import PolyIkModel, model_from_dict, model_to_dict

ROBOT = RobotModel((1.0, 0.8, 0.6))
THETA0 = np.array([0.3, 0.9, 1.5])


def random_model(rng, n=3):
    """Synthetic quadratic IK model with random coefficients."""
    return PolyIkModel(theta0=rng.normal(size=n), z0=rng.normal(size=2),
                       A=rng.normal(size=(n, 2)),
                       B=_sym(rng.normal(size=(n, 2, 2))),
                       rho=0.01, fd_step=1e-4)


def _sym(B):
    return 0.5 * (B + np.transpose(B, (0, 2, 1)))


class TestBuild:
    def test_b_coefficients_match_reference_formulas(self):
        # independent re-derivation, same operations as the definitions
        from certreach.kinematics import jacobian, pseudoinverse
        h = 1e-4
        m = build_poly_ik(ROBOT, THETA0, rho=0.008, fd_step=h)
        A = pseudoinverse(jacobian(ROBOT, THETA0))
        Jp1 = pseudoinverse(jacobian(ROBOT, THETA0 + A[:, 0] * h))
        Jp2 = pseudoinverse(jacobian(ROBOT, THETA0 + A[:, 1] * h))
        for i in range(ROBOT.n):
            b11 = (Jp1[i, 0] - A[i, 0]) / (2.0 * h)
            b22 = (Jp2[i, 1] - A[i, 1]) / (2.0 * h)
            b12 = (Jp1[i, 1] - A[i, 1]) / h
            assert m.B[i, 0, 0] == b11
            assert m.B[i, 1, 1] == b22
            assert m.B[i, 0, 1] == b12 / 2.0
            assert m.B[i, 1, 0] == b12 / 2.0

    def test_half_step_agreement(self):
        # one-sided differences converge linearly, so h and h/2 agree to O(h)
        m1 = build_poly_ik(ROBOT, THETA0, rho=0.008, fd_step=1e-4)
        m2 = build_poly_ik(ROBOT, THETA0, rho=0.008, fd_step=5e-5)
        diff = np.max(np.abs(m1.B - m2.B))
        scale = 1.0 + np.max(np.abs(m1.B))
        assert diff <= 0.05 * scale

    def test_affine_map_gives_zero_quadratic_terms(self, monkeypatch):
        # test double: an affine task map has a constant pseudoinverse
        M = np.array([[1.0, 0.2, -0.3], [0.1, 0.9, 0.4]])
        offset = np.array([0.5, -0.2])
        monkeypatch.setattr(polyik, "forward_kinematics",
                            lambda model, q: M @ np.asarray(q) + offset)
        monkeypatch.setattr(polyik, "jacobian", lambda model, q: M)
        monkeypatch.setattr(polyik, "_fk_batch",
                            lambda model, thetas: thetas @ M.T + offset)
        m = build_poly_ik(ROBOT, THETA0, rho=0.01)
        assert np.all(m.B == 0.0)
        assert estimate_error(m, ROBOT) <= 1e-15

    def test_z0_is_forward_kinematics(self):
        from certreach.kinematics import forward_kinematics
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        np.testing.assert_allclose(m.z0, forward_kinematics(ROBOT, THETA0),
                                   atol=1e-12)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            build_poly_ik(ROBOT, THETA0, rho=0.0)
        with pytest.raises(ValueError):
            build_poly_ik(ROBOT, THETA0, rho=0.01, fd_step=-1.0)


class TestEval:
    def test_zero_displacement_returns_theta0(self):
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        assert np.all(eval_poly_ik(m, [0.0, 0.0]) == THETA0)

    def test_matches_quadratic_form(self):
        # identical values through the explicit 3x3 monomial-form route
        rng = np.random.default_rng(10)
        for _ in range(100):
            m = random_model(rng)
            Q = quad_matrices(m)
            for _ in range(100):
                dz = rng.uniform(-0.02, 0.02, 2)
                y = np.array([1.0, dz[0], dz[1]])
                expected = np.einsum("i,kij,j->k", y, Q, y)
                np.testing.assert_allclose(joint_displacement(m, dz), expected,
                                           atol=1e-14)

    def test_zero_quadratic_reduces_to_linear(self):
        rng = np.random.default_rng(11)
        m = random_model(rng)
        m.B = np.zeros_like(m.B)
        dz = np.array([0.004, -0.007])
        np.testing.assert_allclose(joint_displacement(m, dz), m.A @ dz, atol=1e-16)

    def test_gradient_at_origin_is_linear_gain(self):
        # central difference of a quadratic is exact
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        h = 1e-6
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            grad = (eval_poly_ik(m, e) - eval_poly_ik(m, -e)) / (2.0 * h)
            np.testing.assert_allclose(grad, m.A[:, k], atol=1e-9)

    def test_batch_evaluation(self):
        rng = np.random.default_rng(12)
        m = random_model(rng)
        dzs = rng.uniform(-0.01, 0.01, size=(40, 2))
        batch = joint_displacement(m, dzs)
        for j, dz in enumerate(dzs):
            np.testing.assert_allclose(batch[j], joint_displacement(m, dz),
                                       atol=1e-15)


class TestQuadMatrixRoundTrip:
    def test_lossless(self):
        rng = np.random.default_rng(13)
        m = random_model(rng)
        Q = quad_matrices(m)
        for i in range(m.n):
            a, B = split_quad_matrix(Q[i])
            assert np.all(a == m.A[i])
            assert np.all(B == m.B[i])

    def test_structure(self):
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        Q = quad_matrices(m)
        assert np.all(Q[:, 0, 0] == 0.0)
        np.testing.assert_array_equal(Q, np.transpose(Q, (0, 2, 1)))


class TestErrorBound:
    def test_grid_point_residuals_below_bound(self):
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        eps = estimate_error(m, ROBOT, grid_side=7)
        ticks = np.linspace(-m.rho, m.rho, 7)
        from certreach.kinematics import forward_kinematics
        for a in ticks:
            for b in ticks:
                dz = np.array([a, b])
                res = np.linalg.norm(forward_kinematics(ROBOT, eval_poly_ik(m, dz))
                                     - (m.z0 + dz))
                assert res <= eps + 1e-15

    def test_monotone_grid_refinement(self):
        # the 7-point ticks are a subset of the 25-point ticks, so the
        # denser grid can only increase the sampled maximum
        rng = np.random.default_rng(14)
        checked = 0
        while checked < 20:
            theta = rng.uniform(-np.pi, np.pi, 3)
            try:
                m = build_poly_ik(ROBOT, theta, rho=0.008)
            except Exception:
                continue
            assert (estimate_error(m, ROBOT, grid_side=7)
                    <= estimate_error(m, ROBOT, grid_side=25) + 1e-18)
            checked += 1

    def test_smaller_radius_smaller_error(self):
        from certreach.kinematics import condition_number, jacobian
        rng = np.random.default_rng(15)
        checked = 0
        while checked < 10:
            theta = rng.uniform(-np.pi, np.pi, 3)
            try:
                if condition_number(jacobian(ROBOT, theta)) > 5.0:
                    continue
                m_full = build_poly_ik(ROBOT, theta, rho=0.008)
                m_half = build_poly_ik(ROBOT, theta, rho=0.004)
            except Exception:
                continue
            assert (estimate_error(m_half, ROBOT)
                    <= estimate_error(m_full, ROBOT) + 1e-15)
            checked += 1

    def test_grid_side_validation(self):
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        with pytest.raises(ValueError):
            estimate_error(m, ROBOT, grid_side=1)


class TestEffectiveBounds:
    def test_zero_error_is_identity(self):
        eb = effective_bounds(np.full(3, 0.03), 0.0)
        np.testing.assert_array_equal(eb.delta_eff, np.full(3, 0.03))
        assert not eb.too_coarse

    def test_componentwise_subtraction(self):
        eb = effective_bounds(np.full(3, 0.03), 0.005)
        np.testing.assert_allclose(eb.delta_eff, np.full(3, 0.025), atol=1e-18)
        assert not eb.too_coarse

    def test_boundary_is_too_coarse(self):
        assert effective_bounds(np.full(3, 0.03), 0.03).too_coarse

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            effective_bounds(np.full(3, 0.03), -1e-9)


class TestSerialization:
    def test_round_trip(self):
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        m.epsilon = estimate_error(m, ROBOT)
        d = model_to_dict(m)
        assert set(d) == {"theta0", "z0", "A", "B", "rho", "epsilon", "h"}
        m2 = model_from_dict(d)
        np.testing.assert_array_equal(m2.theta0, m.theta0)
        np.testing.assert_array_equal(m2.A, m.A)
        np.testing.assert_array_equal(m2.B, m.B)
        assert m2.rho == m.rho
        assert m2.epsilon == m.epsilon
        assert m2.fd_step == m.fd_step

    def test_unpopulated_epsilon_round_trips_as_none(self):
        m = build_poly_ik(ROBOT, THETA0, rho=0.008)
        assert model_from_dict(model_to_dict(m)).epsilon is None
