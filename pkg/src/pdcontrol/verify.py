"""Self-check suites for the pseudo-disturbance signal guarantees and the gradient estimator.

Shared between ``pdctl verify-lemmas`` and the acceptance tests, which run the
same checks at their full sample budgets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import LqrController, lqr_gain
from .dac import DacParams, bandit_gradient, dac_control, sample_gaussian
from .lds import GaussianDisturbance, LinearSystem, QuadraticCost, UniformDisturbance, rollout
from .signals import Pd1, Pd2, Pd3, signal_transform
from .values import solve_dare, vector_value_transform


@dataclass
class VerifyResult:
    name: str
    passed: bool
    detail: str


def _random_stable_system(rng: np.random.Generator, dx: int, du: int) -> LinearSystem:
    # diagonalizable by construction: random basis, real eigenvalues in (-0.9, 0.9)
    eigs = rng.uniform(-0.9, 0.9, size=dx)
    Q = rng.standard_normal((dx, dx)) + 0.1 * np.eye(dx)
    A = Q @ np.diag(eigs) @ np.linalg.inv(Q)
    B = rng.standard_normal((dx, du))
    return LinearSystem(A, B)


def verify_td_residual_mean(n_samples: int = 100_000, seed: int = 0) -> VerifyResult:
    """Monte-Carlo mean of the TD-residual signal vs the analytic transform.

    Fixed d_x = 2, d_u = 2 plant and fixed w; over iid Gaussian exploration the
    empirical mean must sit within 3 standard errors of gamma * B'P w per
    coordinate.
    """
    rng = np.random.default_rng(np.random.SeedSequence((0x1E1, seed)))
    system = LinearSystem(A=np.array([[0.6, 0.2], [0.0, 0.5]]), B=np.array([[1.0, 0.3], [0.2, 0.8]]))
    cost = QuadraticCost.identity(2, 2)
    gamma = 0.9
    qv = solve_dare(system.A, system.B, cost.Q, cost.R, gamma)
    sigma = np.array([[0.04, 0.01], [0.01, 0.05]])
    est = Pd1(qv, sigma, system, cost)
    w = np.array([0.3, -0.2])
    x = np.array([0.5, -1.0])
    base_u = -qv.K @ x

    samples = np.zeros((n_samples, 2))
    for i in range(n_samples):
        n = sample_gaussian(sigma, rng)
        u = base_u + n
        x_next = system.A @ x + system.B @ u + w
        c = cost(x, u)
        samples[i] = est.estimate(x, u, x_next, cost=c, noise=n)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n_samples)
    target = signal_transform(est) @ w
    dev = np.abs(mean - target)
    ok = bool((dev <= 3.0 * stderr).all())
    return VerifyResult(
        "td-residual-mean", ok,
        f"max |mean - gamma*B'P w| = {dev.max():.3e}, 3*stderr = {(3 * stderr).max():.3e}, N = {n_samples}",
    )


def verify_vector_value_exactness(n_systems: int = 20, T: int = 1000, seed: int = 0) -> VerifyResult:
    """Deterministic exactness of the vector-value signal on random stable systems."""
    rng = np.random.default_rng(np.random.SeedSequence((0x1E2, seed)))
    worst = 0.0
    for k in range(n_systems):
        dx = [2, 5, 10][k % 3]
        du = max(1, dx // 2)
        system = _random_stable_system(rng, dx, du)
        gamma = 0.9
        k_pi = np.zeros((du, dx))
        tv = vector_value_transform(system.A, system.B, k_pi, np.eye(dx), gamma)
        est = Pd2(tv, system)
        gen = GaussianDisturbance(dx, sigma=0.3)
        ctrl = LqrController(np.zeros((du, dx)))
        traj = rollout(system, ctrl, gen, QuadraticCost.identity(dx, du), T, seed=k)
        transform = signal_transform(est)
        for rec, x_next in zip(traj.records, list(traj.states[1:]) + [traj.final_state]):
            what = est.estimate(rec.x, rec.u, x_next)
            err = np.linalg.norm(what - transform @ rec.w)
            rel = err / (1.0 + np.linalg.norm(rec.w))
            worst = max(worst, rel)
    ok = worst <= 1e-8
    return VerifyResult("vector-value-exactness", bool(ok),
                        f"worst |what - gamma*T_v w| / (1 + |w|) = {worst:.3e} over {n_systems} systems")


def verify_simulator_residual(T: int = 500, seed: int = 0) -> VerifyResult:
    """Simulator residual: exact copy recovers w to 1e-10; a perturbed copy stays within
    the pointwise mismatch bound |dA||x| + |dB||u|."""
    rng = np.random.default_rng(np.random.SeedSequence((0x1E3, seed)))
    system = _random_stable_system(rng, 3, 2)
    gen = UniformDisturbance([-0.4] * 3, [0.4] * 3)
    cost = QuadraticCost.identity(3, 2)
    K = lqr_gain(system)
    traj = rollout(system, LqrController(K), gen, cost, T, seed=seed)

    exact = Pd3(LinearSystem(system.A.copy(), system.B.copy()))
    dA = 1e-3 * rng.standard_normal((3, 3))
    dB = 1e-3 * rng.standard_normal((3, 2))
    perturbed = Pd3(LinearSystem(system.A + dA, system.B + dB))
    nA = np.linalg.norm(dA, 2)
    nB = np.linalg.norm(dB, 2)

    worst_exact, worst_excess = 0.0, 0.0
    states = list(traj.states[1:]) + [traj.final_state]
    for rec, x_next in zip(traj.records, states):
        e = np.linalg.norm(exact.estimate(rec.x, rec.u, x_next) - rec.w)
        worst_exact = max(worst_exact, e)
        bound = nA * np.linalg.norm(rec.x) + nB * np.linalg.norm(rec.u) + 1e-12
        p = np.linalg.norm(perturbed.estimate(rec.x, rec.u, x_next) - rec.w)
        worst_excess = max(worst_excess, p - bound)
    ok = worst_exact <= 1e-10 and worst_excess <= 0.0
    return VerifyResult("simulator-residual", bool(ok),
                        f"exact worst = {worst_exact:.3e}, perturbed bound slack = {worst_excess:.3e}")


def gradient_bias_instance():
    """Fixed d_x=2, d_u=1, h=2 instance for the smoothed-gradient check."""
    system = LinearSystem(A=np.array([[0.5, 0.1], [0.0, 0.4]]), B=np.array([[1.0], [0.5]]))
    cost = QuadraticCost.identity(2, 1)
    h = 2
    rng = np.random.default_rng(12)
    M = DacParams(0.2 * rng.standard_normal((h, 1, 2)))
    # w_t-1 .. w_t-2h, newest first (the gradient windows), plus w_{t-s} for the state proxy
    whats = rng.uniform(-0.5, 0.5, size=(2 * h, 2))
    delta = 0.1
    return system, cost, h, M, whats, delta


def windowed_cost(system: LinearSystem, cost, whats: np.ndarray, h: int, controls: np.ndarray) -> float:
    """Idealized cost of the last h controls (newest first): the state proxy is the
    h-1 step unroll from zero, the newest control pays the control cost."""
    y = np.zeros(system.dx)
    Apow = np.eye(system.dx)
    for s in range(1, h):
        y = y + Apow @ (system.B @ controls[s] + whats[s - 1])
        Apow = system.A @ Apow
    return cost(y, controls[0])


def dac_window_controls(system, M: DacParams, whats: np.ndarray, h: int) -> np.ndarray:
    """Controls u_{t} .. u_{t-h+1} (newest first) played by the stationary policy M."""
    out = np.zeros((h, system.du))
    for j in range(h):
        out[j] = dac_control(M, whats[j : j + h])
    return out


def idealized_dac_cost(system, cost, M: DacParams, whats: np.ndarray, h: int) -> float:
    return windowed_cost(system, cost, whats, h, dac_window_controls(system, M, whats, h))


def verify_gradient_bias(n_samples: int = 200_000, seed: int = 0) -> VerifyResult:
    """Monte-Carlo mean of the sphere gradient estimator vs central differences.

    For quadratic costs, sphere/ball smoothing shifts the idealized cost by an
    M-independent constant, so the finite differences of the unsmoothed cost
    equal those of the smoothed one exactly; the estimator mean must match
    entrywise within 3 Monte-Carlo standard errors.
    """
    system, cost, h, M, whats, delta = gradient_bias_instance()
    rng = np.random.default_rng(np.random.SeedSequence((0x9B, seed)))
    base_controls = dac_window_controls(system, M, whats, h)

    acc = np.zeros(M.M.shape)
    acc2 = np.zeros(M.M.shape)
    for _ in range(n_samples):
        noises = rng.standard_normal((h, system.du))
        noises /= np.linalg.norm(noises, axis=1, keepdims=True)
        c = windowed_cost(system, cost, whats, h, base_controls + delta * noises)
        g = bandit_gradient(c, noises, whats, delta, h)
        acc += g
        acc2 += g * g
    mean = acc / n_samples
    var = acc2 / n_samples - mean**2
    stderr = np.sqrt(np.maximum(var, 0.0) / n_samples)

    eps = 1e-5
    fd = np.zeros(M.M.shape)
    for idx in np.ndindex(M.M.shape):
        Mp, Mm = M.M.copy(), M.M.copy()
        Mp[idx] += eps
        Mm[idx] -= eps
        fd[idx] = (
            idealized_dac_cost(system, cost, DacParams(Mp), whats, h)
            - idealized_dac_cost(system, cost, DacParams(Mm), whats, h)
        ) / (2 * eps)
    dev = np.abs(mean - fd)
    ok = bool((dev <= 3.0 * stderr).all())
    return VerifyResult(
        "gradient-estimator-unbiasedness", ok,
        f"max |mc - fd| = {dev.max():.3e}, 3*stderr entrywise max = {(3 * stderr).max():.3e}, N = {n_samples}",
    )


def run_all(n_samples: int = 20_000) -> list:
    return [
        verify_td_residual_mean(n_samples=max(n_samples, 1000)),
        verify_vector_value_exactness(n_systems=6, T=300),
        verify_simulator_residual(),
        verify_gradient_bias(n_samples=max(n_samples, 1000)),
    ]
