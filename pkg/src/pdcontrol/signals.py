"""Pseudo-disturbance estimators.

Three signals stand in for the unobserved disturbance w_t:

* :class:`Pd1` — zeroth-order TD-residual estimate; needs the injected Gaussian
  exploration noise and only a scalar cost.  Unbiased up to a fixed linear map.
* :class:`Pd2` — vector-value difference for a linear state cost; deterministic
  and exact on an LDS (no exploration noise needed).
* :class:`Pd3` — simulator residual x_{t+1} - f_sim(x_t, u_t).

Each estimator exposes ``estimate(x, u, x_next, cost=None, noise=None)`` and a
``d_w`` output dimension.  :func:`signal_transform` returns the analytic linear
map relating the signal to the true disturbance on an LDS.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lds import LinearSystem
from .values import QuadraticValue, VectorValueTransform, scalar_q, scalar_value, vector_q, vector_value


class PdEstimator:
    d_w: int

    def estimate(self, x, u, x_next, cost=None, noise=None) -> np.ndarray:
        raise NotImplementedError


class Pd1(PdEstimator):
    """TD-residual signal: 0.5 * (c_t + gamma*V(x_{t+1}) - Q(x_t, u_t)) Sigma^{-1} n_t.

    The 1/2 normalizes the symmetric cross term of the quadratic value so the
    conditional mean is exactly gamma * B'P w_t.  Output dimension d_u.
    """

    def __init__(self, value: QuadraticValue, sigma, system: LinearSystem, cost_fn):
        self.value = value
        self.system = system
        self.cost_fn = cost_fn
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape[0] != sigma.shape[1] or sigma.shape[0] != system.du:
            raise ValueError(f"Sigma must be {system.du}x{system.du}")
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise ValueError("Sigma must be positive definite") from None
        self.sigma = sigma
        self.sigma_inv = np.linalg.inv(sigma)
        self.d_w = system.du

    def estimate(self, x, u, x_next, cost=None, noise=None):
        if cost is None or noise is None:
            raise ValueError("Pd1 needs the realized cost and the injected noise")
        residual = (
            float(cost)
            + self.value.gamma * scalar_value(self.value, x_next)
            - scalar_q(self.value, self.system, self.cost_fn, x, u)
        )
        return 0.5 * residual * (self.sigma_inv @ np.asarray(noise, dtype=float))


class Pd2(PdEstimator):
    """Vector-value difference: c(x_t) + gamma*V(x_{t+1}) - Q(x_t, u_t) = gamma*T_v w_t."""

    def __init__(self, tv: VectorValueTransform, system: LinearSystem):
        self.tv = tv
        self.system = system
        self.d_w = tv.L.shape[0]

    def estimate(self, x, u, x_next, cost=None, noise=None):
        x = np.asarray(x, dtype=float)
        return (
            self.tv.L @ x
            + self.tv.gamma * vector_value(self.tv, x_next)
            - vector_q(self.tv, self.system, x, u)
        )


class Pd3(PdEstimator):
    """Simulator residual: x_{t+1} - (A_sim x_t + B_sim u_t).

    ``replicas`` averages repeated simulator calls; for a deterministic linear
    simulator all replicas agree, the knob exists for stochastic simulators.
    """

    def __init__(self, sim: LinearSystem, replicas: int = 1):
        if replicas < 1:
            raise ValueError("replicas must be >= 1")
        self.sim = sim
        self.replicas = replicas
        self.d_w = sim.dx

    def estimate(self, x, u, x_next, cost=None, noise=None):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        pred = self.sim.A @ x + self.sim.B @ u
        if self.replicas > 1:
            pred = np.mean([pred for _ in range(self.replicas)], axis=0)
        return np.asarray(x_next, dtype=float) - pred


def signal_transform(est: PdEstimator, system: Optional[LinearSystem] = None) -> np.ndarray:
    """Analytic map T with E[w_hat_t] = T w_t on an LDS.

    Pd1 -> gamma * B'P (d_u x d_x); Pd2 -> gamma * L (I - gamma*A_pi)^{-1};
    Pd3 -> identity.  Used by the verification suites and the invertibility report.
    """
    if isinstance(est, Pd1):
        sys_ = system or est.system
        return est.value.gamma * (sys_.B.T @ est.value.P)
    if isinstance(est, Pd2):
        return est.tv.gamma * est.tv.T_v
    if isinstance(est, Pd3):
        return np.eye(est.sim.dx)
    raise TypeError(f"unknown estimator type {type(est)!r}")


@dataclass(frozen=True)
class TransformReport:
    shape: tuple
    rank: int
    invertible: bool
    cond: float


def transform_report(T: np.ndarray) -> TransformReport:
    """Rank/invertibility report for a signal transform (the regret guarantee needs an invertible map)."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    rank = int(np.linalg.matrix_rank(T))
    square_full = T.shape[0] == T.shape[1] and rank == T.shape[0]
    cond = float(np.linalg.cond(T)) if square_full else float("inf")
    return TransformReport(shape=T.shape, rank=rank, invertible=square_full, cond=cond)
