import numpy as np
import pytest

from pdcontrol.controllers import LqrController, lqr_gain
from pdcontrol.lds import (
    AssumptionSet,
    CustomDisturbance,
    DivergenceError,
    GaussianDisturbance,
    LinearSystem,
    QuadraticCost,
    SinusoidDisturbance,
    ZeroDisturbance,
    rollout,
    step,
    strong_stability,
)


def naive_matvec(A, x):
    out = np.zeros(A.shape[0])
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            out[i] += A[i][j] * x[j]
    return out


class TestStep:
    def test_zero_dynamics_passes_control(self):
        sys_ = LinearSystem(np.zeros((2, 2)), np.eye(2))
        assert np.allclose(step(sys_, [1, 1], [2, 3], [0, 0]), [2, 3])

    def test_diagonal_arithmetic(self):
        sys_ = LinearSystem(0.5 * np.eye(2), np.eye(2))
        assert np.allclose(step(sys_, [2, 0], [0, 0], [0.1, -0.1]), [1.1, -0.1])

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((10, 10))
        B = rng.standard_normal((10, 5))
        sys_ = LinearSystem(A, B)
        x = rng.standard_normal(10)
        u = rng.standard_normal(5)
        w = rng.standard_normal(10)
        expected = naive_matvec(A, x) + naive_matvec(B, u) + w
        assert np.abs(step(sys_, x, u, w) - expected).max() < 1e-12

    def test_dimension_mismatch(self):
        sys_ = LinearSystem(np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            step(sys_, [1.0], [0.0, 0.0], [0.0, 0.0])


class TestStrongStability:
    def test_scaled_identity(self):
        kappa, alpha = strong_stability(0.9 * np.eye(2))
        assert kappa == pytest.approx(1.0)
        assert alpha == pytest.approx(0.1)

    def test_diagonal(self):
        kappa, alpha = strong_stability(np.diag([0.5, -0.3]))
        assert kappa == pytest.approx(1.0)
        assert alpha == pytest.approx(0.5)

    def test_power_bound(self):
        A = np.array([[0.5, 0.4], [0.0, 0.45]])
        kappa, alpha = strong_stability(A)
        P = np.eye(2)
        for t in range(1, 51):
            P = P @ A
            assert np.linalg.norm(P, 2) <= kappa**2 * (1 - alpha) ** t * (1 + 1e-8)

    def test_power_bound_invariant_many_systems(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            eigs = rng.uniform(-0.85, 0.85, size=4)
            Q = rng.standard_normal((4, 4)) + 0.2 * np.eye(4)
            A = Q @ np.diag(eigs) @ np.linalg.inv(Q)
            kappa, alpha = strong_stability(A)
            P = np.eye(4)
            for t in range(1, 101):
                P = P @ A
                assert np.linalg.norm(P, 2) <= kappa**2 * (1 - alpha) ** t * (1 + 1e-8)

    def test_unstable_returns_none(self):
        assert strong_stability(1.1 * np.eye(2)) is None

    def test_defective_returns_none(self):
        assert strong_stability(np.array([[0.5, 1.0], [0.0, 0.5]])) is None

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            strong_stability(np.array([[np.nan, 0.0], [0.0, 0.1]]))


class TestGenerators:
    def test_zero(self):
        gen = ZeroDisturbance(3)
        assert np.all(gen.at(17) == 0)

    def test_sinusoid_definition(self):
        gen = SinusoidDisturbance([1.0, 0.0], frequency=0.01, phase=0.0)
        for t in (0, 3, 11):
            assert gen.at(t)[0] == pytest.approx(np.sin(2 * np.pi * 0.01 * t))
            assert gen.at(t)[1] == 0.0

    def test_gaussian_deterministic(self):
        gen = GaussianDisturbance(4, sigma=0.1)
        a = gen.at(7, seed=42)
        b = gen.at(7, seed=42)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, gen.at(8, seed=42))
        assert not np.array_equal(a, gen.at(7, seed=43))

    def test_clipping(self):
        gen = GaussianDisturbance(6, sigma=10.0, bound=0.5)
        for t in range(20):
            assert np.linalg.norm(gen.at(t, seed=t)) <= 0.5 + 1e-12

    def test_sequence_matches_pointwise(self):
        gen = GaussianDisturbance(3, sigma=0.2)
        seq = gen.sequence(25, seed=5)
        for t in range(25):
            assert np.array_equal(seq[t], gen.at(t, seed=5))

    def test_custom_out_of_range(self):
        gen = CustomDisturbance(np.zeros((4, 2)))
        gen.at(3)
        with pytest.raises(IndexError):
            gen.at(4)


class TestRollout:
    def test_zero_everything(self):
        sys_ = LinearSystem(0.5 * np.eye(2), np.array([[1.0], [0.0]]))
        traj = rollout(sys_, LqrController(np.zeros((1, 2))), ZeroDisturbance(2),
                       QuadraticCost.identity(2, 1), T=50)
        assert traj.total_cost() == 0.0
        assert np.all(traj.states == 0)

    def test_lqr_decay_bound(self):
        sys_ = LinearSystem(np.array([[0.9, 0.3], [0.0, 0.8]]), np.array([[0.0], [1.0]]))
        K = lqr_gain(sys_)
        kappa, alpha = strong_stability(sys_.A - sys_.B @ K)
        x0 = np.array([1.0, -2.0])
        T = 60
        traj = rollout(sys_, LqrController(K), ZeroDisturbance(2),
                       QuadraticCost.identity(2, 1), T=T, x0=x0)
        assert np.linalg.norm(traj.final_state) <= kappa**2 * (1 - alpha) ** T * np.linalg.norm(x0) + 1e-12

    def test_step_consistency_invariant(self):
        sys_ = LinearSystem(np.array([[0.7, 0.2], [-0.1, 0.6]]), np.array([[1.0], [0.5]]))
        gen = GaussianDisturbance(2, sigma=0.3)
        K = lqr_gain(sys_)
        traj = rollout(sys_, LqrController(K), gen, QuadraticCost.identity(2, 1), T=200, seed=9)
        states = list(traj.states[1:]) + [traj.final_state]
        for rec, x_next in zip(traj.records, states):
            resid = x_next - (sys_.A @ rec.x + sys_.B @ rec.u + rec.w)
            assert np.abs(resid).max() < 1e-10

    def test_disturbance_determinism_bitwise(self):
        sys_ = LinearSystem(0.5 * np.eye(2), np.eye(2))
        gen = GaussianDisturbance(2, sigma=0.2)
        cost = QuadraticCost.identity(2, 2)
        t1 = rollout(sys_, LqrController(np.zeros((2, 2))), gen, cost, T=100, seed=3)
        t2 = rollout(sys_, LqrController(np.zeros((2, 2))), gen, cost, T=100, seed=3)
        assert np.array_equal(t1.disturbances, t2.disturbances)

    def test_divergence_guard(self):
        sys_ = LinearSystem(2.0 * np.eye(2), np.eye(2))  # unstable open loop
        with pytest.raises(DivergenceError) as exc:
            rollout(sys_, LqrController(np.zeros((2, 2))),
                    GaussianDisturbance(2, sigma=1.0), QuadraticCost.identity(2, 2),
                    T=200, seed=0, guard=1e4)
        assert len(exc.value.trajectory) > 0

    def test_records_always_finite(self):
        sys_ = LinearSystem(2.0 * np.eye(2), np.eye(2))
        try:
            rollout(sys_, LqrController(np.zeros((2, 2))),
                    GaussianDisturbance(2, sigma=1.0), QuadraticCost.identity(2, 2),
                    T=500, seed=1, guard=1e6)
        except DivergenceError as e:
            for rec in e.trajectory:
                assert np.isfinite(rec.x).all() and np.isfinite(rec.u).all() and np.isfinite(rec.cost)


class TestAssumptionSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            AssumptionSet(kappa=0.5)
        with pytest.raises(ValueError):
            AssumptionSet(alpha=1.5)
        with pytest.raises(ValueError):
            AssumptionSet(W=-1.0)

    def test_state_bound_positive(self):
        a = AssumptionSet(kappa=2.0, alpha=0.2, W=0.5)
        assert a.state_bound(5) >= 1.0
