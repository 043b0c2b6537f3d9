import numpy as np
import pytest

from pdcontrol.lds import LinearSystem, QuadraticCost
from pdcontrol.values import (
    NoSolutionError,
    scalar_q,
    scalar_value,
    solve_dare,
    vector_q,
    vector_value,
    vector_value_transform,
)


def bellman_residual(P, K, A, B, Q_c, R_c, gamma):
    """Policy-evaluation residual for u = -Kx: P - (Q + K'RK + g A_K' P A_K)."""
    A_K = A - B @ K
    return P - (Q_c + K.T @ R_c @ K + gamma * A_K.T @ P @ A_K)


class TestSolveDare:
    def test_scalar_one_step(self):
        v = solve_dare([[0.0]], [[1.0]], [[1.0]], [[1.0]], gamma=1.0)
        assert v.P[0, 0] == pytest.approx(1.0, abs=1e-10)
        assert v.K[0, 0] == pytest.approx(0.0, abs=1e-10)

    def test_scalar_fixed_point_root(self):
        # P = 1 + 0.25P - 0.25P^2/(1+P)  =>  root of the rearranged quadratic,
        # found here by bisection as an independent oracle
        def f(P):
            return 1 + 0.25 * P - 0.25 * P**2 / (1 + P) - P

        lo, hi = 0.0, 10.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        expected = 0.5 * (lo + hi)
        v = solve_dare([[0.5]], [[1.0]], [[1.0]], [[1.0]], gamma=1.0)
        assert v.P[0, 0] == pytest.approx(expected, abs=1e-9)

    def test_bellman_residual_random_system(self):
        rng = np.random.default_rng(1)
        A = np.array([[0.6, 0.2], [-0.1, 0.5]])
        B = rng.standard_normal((2, 2))
        Q_c, R_c = np.eye(2), np.eye(2)
        for gamma in (1.0, 0.95, 0.8):
            v = solve_dare(A, B, Q_c, R_c, gamma)
            resid = bellman_residual(v.P, v.K, A, B, Q_c, R_c, gamma)
            assert np.linalg.norm(resid, 2) <= 1e-8

    def test_closed_loop_stable(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            A = rng.uniform(-0.8, 0.8) * np.eye(3) + 0.1 * rng.standard_normal((3, 3))
            B = rng.standard_normal((3, 2))
            v = solve_dare(A, B, np.eye(3), np.eye(2), 1.0)
            rho = np.abs(np.linalg.eigvals(A - B @ v.K)).max()
            assert rho < 1.0

    def test_non_pd_R_rejected(self):
        with pytest.raises(ValueError):
            solve_dare(np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)), 1.0)


class TestScalarValues:
    def setup_method(self):
        self.system = LinearSystem(np.array([[0.5, 0.1], [0.0, 0.6]]), np.array([[1.0], [0.4]]))
        self.cost = QuadraticCost.identity(2, 1)
        self.v = solve_dare(self.system.A, self.system.B, self.cost.Q, self.cost.R, 0.9)

    def test_zero(self):
        assert scalar_value(self.v, np.zeros(2)) == 0.0

    def test_identity_P(self):
        from pdcontrol.values import QuadraticValue

        v = QuadraticValue(P=np.eye(2), K=np.zeros((1, 2)), gamma=1.0)
        assert scalar_value(v, [3.0, 4.0]) == pytest.approx(25.0)

    def test_bellman_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.standard_normal(2)
            u = rng.standard_normal(1)
            nxt = self.system.A @ x + self.system.B @ u
            lhs = scalar_q(self.v, self.system, self.cost, x, u) - self.v.gamma * scalar_value(self.v, nxt)
            assert lhs == pytest.approx(self.cost(x, u), abs=1e-10)


class TestVectorValues:
    def test_trivial_transforms(self):
        L = np.array([[1.0, 2.0], [0.0, 1.0]])
        tv = vector_value_transform(np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((1, 2)), L, 0.9)
        assert np.allclose(tv.T_v, L)
        tv0 = vector_value_transform(0.5 * np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), L, 0.0)
        assert np.allclose(tv0.T_v, L)

    def test_geometric_series_value(self):
        tv = vector_value_transform(0.5 * np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), np.eye(2), 0.9)
        assert np.allclose(tv.T_v, np.eye(2) / 0.55, atol=1e-12)

    def test_residual_invariant(self):
        rng = np.random.default_rng(4)
        A = np.array([[0.7, 0.2, 0.0], [0.0, 0.6, 0.1], [0.1, 0.0, 0.5]])
        B = rng.standard_normal((3, 2))
        K = 0.1 * rng.standard_normal((2, 3))
        L = rng.standard_normal((3, 3))
        tv = vector_value_transform(A, B, K, L, 0.95)
        resid = tv.T_v @ (np.eye(3) - 0.95 * tv.A_pi) - L
        assert np.abs(resid).max() < 1e-10

    def test_truncated_series_oracle(self):
        rng = np.random.default_rng(5)
        A = np.array([[0.6, 0.1], [0.0, 0.7]])
        B = np.array([[1.0], [0.2]])
        K = np.array([[0.1, 0.2]])
        L = rng.standard_normal((2, 2))
        gamma = 0.9
        tv = vector_value_transform(A, B, K, L, gamma)
        A_pi = A - B @ K
        x = rng.standard_normal(2)
        total = np.zeros(2)
        z = x.copy()
        for t in range(500):
            total += gamma**t * (L @ z)
            z = A_pi @ z
        assert np.linalg.norm(vector_value(tv, x) - total) < 1e-8

    def test_vector_bellman_identity(self):
        rng = np.random.default_rng(6)
        system = LinearSystem(np.array([[0.5, 0.2], [0.0, 0.4]]), np.array([[1.0], [0.3]]))
        tv = vector_value_transform(system.A, system.B, np.zeros((1, 2)), np.eye(2), 0.9)
        for _ in range(20):
            x = rng.standard_normal(2)
            u = rng.standard_normal(1)
            nxt = system.A @ x + system.B @ u
            lhs = vector_q(tv, system, x, u) - 0.9 * vector_value(tv, nxt)
            assert np.allclose(lhs, tv.L @ x, atol=1e-12)

    def test_linearity_exact(self):
        tv = vector_value_transform(0.5 * np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), np.eye(2), 0.9)
        x, y = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
        a, b = 2.0, -1.5
        assert np.array_equal(vector_value(tv, a * x + b * y),
                              tv.T_v @ (a * x + b * y))

    def test_singular_transform_rejected(self):
        with pytest.raises(NoSolutionError):
            vector_value_transform(np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), np.eye(2), 1.0)
