import numpy as np
import pytest

from certreach import (RobotModel, SingularityError, condition_number,
                       forward_kinematics, jacobian, pseudoinverse,
                       within_bounds)

ROBOT = RobotModel((1.0, 0.8, 0.6))


def random_config(rng):
    return rng.uniform(-np.pi, np.pi, ROBOT.n)


class TestRobotModel:
    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(ValueError):
            RobotModel((1.0, 0.0))
        with pytest.raises(ValueError):
            RobotModel((1.0, -0.3))

    def test_rejects_single_link(self):
        with pytest.raises(ValueError):
            RobotModel((1.0,))

    def test_reach(self):
        assert ROBOT.reach == pytest.approx(2.4)


class TestForwardKinematics:
    def test_zero_angles(self):
        np.testing.assert_allclose(forward_kinematics(ROBOT, [0.0, 0.0, 0.0]),
                                   [2.4, 0.0], atol=1e-15)

    def test_quarter_turn_symmetry(self):
        q = [np.pi / 2] * 3
        np.testing.assert_allclose(forward_kinematics(ROBOT, q), [0.0, 2.4],
                                   atol=1e-15)

    def test_matches_per_link_accumulation(self):
        # oracle: accumulate each link's offset vector independently
        rng = np.random.default_rng(1)
        for _ in range(200):
            q = random_config(rng)
            expected = np.zeros(2)
            for length, angle in zip(ROBOT.link_lengths, q):
                expected += length * np.array([np.cos(angle), np.sin(angle)])
            np.testing.assert_allclose(forward_kinematics(ROBOT, q), expected,
                                       atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward_kinematics(ROBOT, [0.0, 0.0])


class TestJacobian:
    def test_zero_angles(self):
        np.testing.assert_allclose(jacobian(ROBOT, [0.0, 0.0, 0.0]),
                                   [[0.0, 0.0, 0.0], [1.0, 0.8, 0.6]], atol=1e-15)

    def test_first_column_at_pi_half(self):
        J = jacobian(ROBOT, [np.pi / 2, 0.0, 0.0])
        np.testing.assert_allclose(J[:, 0], [-1.0, 0.0], atol=1e-15)

    def test_central_difference_oracle(self):
        rng = np.random.default_rng(2)
        h = 1e-6
        for _ in range(50):
            q = random_config(rng)
            J = jacobian(ROBOT, q)
            for i in range(ROBOT.n):
                e = np.zeros(ROBOT.n)
                e[i] = h
                col = (forward_kinematics(ROBOT, q + e)
                       - forward_kinematics(ROBOT, q - e)) / (2.0 * h)
                np.testing.assert_allclose(col, J[:, i], atol=1e-6)

    def test_forward_difference_error_decreases_linearly(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            q = random_config(rng)
            J = jacobian(ROBOT, q)
            errs = []
            for h in (1e-4, 1e-5, 1e-6):
                worst = 0.0
                for i in range(ROBOT.n):
                    e = np.zeros(ROBOT.n)
                    e[i] = 1.0
                    fd = (forward_kinematics(ROBOT, q + h * e)
                          - forward_kinematics(ROBOT, q)) / h
                    worst = max(worst, np.linalg.norm(fd - J @ e))
                errs.append(worst)
                assert worst <= 5.0 * ROBOT.reach * h
            assert errs[0] > errs[1] > errs[2]


class TestPseudoinverse:
    def test_orthonormal_rows(self):
        J = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        np.testing.assert_allclose(pseudoinverse(J),
                                   [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], atol=1e-15)

    def test_moore_penrose_identities(self):
        rng = np.random.default_rng(4)
        checked = 0
        while checked < 1000:
            J = jacobian(ROBOT, random_config(rng))
            s = np.linalg.svd(J, compute_uv=False)
            if s[-1] < 1e-6:
                continue
            A = pseudoinverse(J)
            np.testing.assert_allclose(J @ A @ J, J, atol=1e-9)
            np.testing.assert_allclose(A @ J @ A, A, atol=1e-9)
            np.testing.assert_allclose((J @ A).T, J @ A, atol=1e-9)
            np.testing.assert_allclose((A @ J).T, A @ J, atol=1e-9)
            checked += 1

    def test_matches_library_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            J = rng.normal(size=(2, 4))
            np.testing.assert_allclose(pseudoinverse(J), np.linalg.pinv(J),
                                       atol=1e-10)

    def test_singular_raises(self):
        # equal absolute angles make every column parallel (rank 1)
        J = jacobian(ROBOT, [0.3, 0.3, 0.3])
        with pytest.raises(SingularityError):
            pseudoinverse(J)

    def test_amplification_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            J = jacobian(ROBOT, random_config(rng))
            s = np.linalg.svd(J, compute_uv=False)
            if s[-1] < 1e-6:
                continue
            dz = rng.normal(size=2)
            bound = np.linalg.norm(dz) / s[-1]
            assert np.linalg.norm(pseudoinverse(J) @ dz) <= bound + 1e-12


class TestConditionNumber:
    def test_diagonal(self):
        assert condition_number(np.array([[2.0, 0.0], [0.0, 1.0]])) == pytest.approx(2.0)

    def test_orthonormal_rows(self):
        J = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert condition_number(J) == pytest.approx(1.0)

    def test_matches_gram_eigenvalue_oracle(self):
        # closed-form eigenvalues of the 2x2 Gram matrix J J^T
        rng = np.random.default_rng(7)
        for _ in range(200):
            J = rng.normal(size=(2, 5))
            G = J @ J.T
            half_trace = 0.5 * (G[0, 0] + G[1, 1])
            disc = np.sqrt(0.25 * (G[0, 0] - G[1, 1]) ** 2 + G[0, 1] ** 2)
            expected = np.sqrt((half_trace + disc) / (half_trace - disc))
            assert condition_number(J) == pytest.approx(expected, abs=1e-10)

    def test_rank_deficient_raises(self):
        with pytest.raises(SingularityError):
            condition_number(np.array([[1.0, 2.0], [2.0, 4.0]]))


class TestWithinBounds:
    def test_zero_displacement(self):
        q = np.array([0.1, 0.2, 0.3])
        assert within_bounds(q, q, np.full(3, 0.03))

    def test_boundary_is_inside(self):
        q = np.zeros(3)
        delta = np.array([0.03, 0.02, 0.01])
        assert within_bounds(q + delta, q, delta)

    def test_just_outside(self):
        q = np.zeros(3)
        delta = np.full(3, 0.03)
        step = delta.copy()
        step[1] += 1e-9
        assert not within_bounds(q + step, q, delta)

    def test_scalar_bound_broadcast(self):
        q = np.zeros(3)
        assert within_bounds(q + 0.02, q, 0.03)
        assert not within_bounds(q + 0.04, q, 0.03)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            within_bounds(np.zeros(3), np.zeros(2), np.full(3, 0.1))
