"""Exact LQR value functions, scalar and vector-valued.

The quadratic value V(x) = x'Px comes from a discounted Riccati fixed point
solved by value iteration; the vector value for a linear state cost c(x) = Lx
is the closed form V(x) = L (I - gamma*A_pi)^{-1} x.  Both use the noise-free
Bellman convention: additive zero-mean noise only shifts values by a constant
(scalar case) or not at all (linear case), and every consumer here takes
differences in which constants cancel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lds import LinearSystem


class NoSolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadraticValue:
    """Value Hessian P, gain K (convention u = -Kx), and discount gamma."""

    P: np.ndarray
    K: np.ndarray
    gamma: float


@dataclass(frozen=True)
class VectorValueTransform:
    """T_v = L (I - gamma*A_pi)^{-1} for linear cost c(x) = Lx under u = -K_pi x."""

    T_v: np.ndarray
    L: np.ndarray
    A_pi: np.ndarray
    gamma: float


def solve_dare(A, B, Q_c, R_c, gamma: float = 1.0, tol: float = 1e-12, max_iter: int = 100_000) -> QuadraticValue:
    """Discounted discrete algebraic Riccati equation by value iteration.

    Fixed point: P = Q_c + g A'PA - g^2 A'PB (R_c + g B'PB)^{-1} B'PA,
    with K = g (R_c + g B'PB)^{-1} B'PA.  Iterates until successive P differ
    by < tol in max norm; raises NoSolutionError on non-convergence.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q_c = np.atleast_2d(np.asarray(Q_c, dtype=float))
    R_c = np.atleast_2d(np.asarray(R_c, dtype=float))
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    try:
        np.linalg.cholesky(R_c)
    except np.linalg.LinAlgError:
        raise ValueError("R_c must be positive definite") from None

    P = Q_c.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        gain = gamma * np.linalg.solve(R_c + gamma * BtP @ B, BtP @ A)
        P_next = Q_c + gamma * A.T @ P @ A - gamma * A.T @ P @ B @ gain
        P_next = 0.5 * (P_next + P_next.T)
        if np.abs(P_next - P).max() < tol:
            BtP = B.T @ P_next
            K = gamma * np.linalg.solve(R_c + gamma * BtP @ B, BtP @ A)
            return QuadraticValue(P=P_next, K=K, gamma=gamma)
        P = P_next
    raise NoSolutionError(f"Riccati iteration did not converge in {max_iter} steps")


def scalar_value(v: QuadraticValue, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ v.P @ x)


def scalar_q(v: QuadraticValue, system: LinearSystem, cost_fn, x, u) -> float:
    """c(x, u) + gamma * V(Ax + Bu): the noise-free Bellman state-action value."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    nxt = system.A @ x + system.B @ u
    return float(cost_fn(x, u)) + v.gamma * scalar_value(v, nxt)


def vector_value_transform(A, B, K_pi, L, gamma: float) -> VectorValueTransform:
    """Build T_v = L (I - gamma*(A - B K_pi))^{-1}; requires rho(gamma*A_pi) < 1."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    K_pi = np.atleast_2d(np.asarray(K_pi, dtype=float))
    L = np.atleast_2d(np.asarray(L, dtype=float))
    A_pi = A - B @ K_pi
    M = np.eye(A.shape[0]) - gamma * A_pi
    try:
        T_v = np.linalg.solve(M.T, L.T).T
    except np.linalg.LinAlgError:
        raise NoSolutionError("I - gamma*A_pi is singular; closed loop not stable enough") from None
    return VectorValueTransform(T_v=T_v, L=L, A_pi=A_pi, gamma=gamma)


def vector_value(tv: VectorValueTransform, x) -> np.ndarray:
    return tv.T_v @ np.asarray(x, dtype=float)


def vector_q(tv: VectorValueTransform, system: LinearSystem, x, u) -> np.ndarray:
    """L x + gamma * T_v (Ax + Bu): vector Bellman value, noise-free form."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    nxt = system.A @ x + system.B @ u
    return tv.L @ x + tv.gamma * (tv.T_v @ nxt)
