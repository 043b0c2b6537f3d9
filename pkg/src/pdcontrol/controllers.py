"""Concrete controllers behind one act/observe interface.

* :class:`LqrController` — static gain u = -Kx.
* :class:`GpcFullInfo` — full-information gradient perturbation controller:
  observes the true disturbance and descends the exact gradient of the
  idealized cost.
* :class:`BanditGpc` — scalar-cost-feedback variant with action-space sphere
  exploration and h-delayed projected OGD (a.k.a. RBPC).
* :class:`MfGpc` — Gaussian action exploration driven by a pseudo-disturbance
  estimator, immediate updates, optional thinning and weight decay.
* :class:`Bpc` — parameter-space exploration baseline whose gradient estimate
  scales with the full parameter dimension.

Every controller consumes exactly one (x_{t+1}, c_t) observation per emitted
control; the alternation is enforced.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dac import (
    DacParams,
    GradEstimate,
    bandit_gradient,
    dac_control,
    gaussian_gradient,
    project_dac,
    sample_gaussian,
    sample_sphere,
)
from .lds import LinearSystem
from .signals import PdEstimator
from .values import solve_dare


class UnsupportedCostError(TypeError):
    """Raised when a controller needs cost gradients the cost object cannot provide."""


def default_params(T: int, d_u: int, d_x: int, kappa: float, alpha: float, smooth: bool = False):
    """Step size, exploration radius, and memory from the horizon-T schedule.

    Non-smooth costs: eta = sqrt(d_min/d_u) T^{-3/4}, delta = sqrt(d_u d_min) T^{-1/4}.
    Smooth costs: delta = (d_u d_min)^{1/3} T^{-1/6}, eta = d_min^{1/3} / (d_u^{2/3} T^{2/3}).
    h = ceil(alpha^{-1} log(2 kappa^3 T)), clamped to [1, T/4].
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    d_min = min(d_x, d_u)
    if smooth:
        delta = (d_u * d_min) ** (1.0 / 3.0) * T ** (-1.0 / 6.0)
        eta = d_min ** (1.0 / 3.0) / (d_u ** (2.0 / 3.0) * T ** (2.0 / 3.0))
    else:
        eta = math.sqrt(d_min / d_u) * T ** (-0.75)
        delta = math.sqrt(d_u * d_min) * T ** (-0.25)
    h = math.ceil(math.log(2.0 * kappa**3 * T) / alpha)
    h = int(min(max(h, 1), max(T // 4, 1)))
    return eta, delta, h


def lqr_act(K, x) -> np.ndarray:
    """Static feedback u = -Kx."""
    return -(np.atleast_2d(np.asarray(K, dtype=float)) @ np.asarray(x, dtype=float))


def lqr_gain(system: LinearSystem, Q_c=None, R_c=None, gamma: float = 1.0) -> np.ndarray:
    """Optimal LQR gain for quadratic cost (defaults Q = I, R = I)."""
    Q_c = np.eye(system.dx) if Q_c is None else Q_c
    R_c = np.eye(system.du) if R_c is None else R_c
    return solve_dare(system.A, system.B, Q_c, R_c, gamma).K


class Controller:
    """Base class enforcing strict act/observe alternation."""

    def __init__(self, d_u: int, d_x: int, d_w: int):
        self.d_u = d_u
        self.d_x = d_x
        self.d_w = d_w
        self.last_noise = np.zeros(d_u)
        self.last_pd = np.zeros(d_w)
        self._awaiting_observe = False
        self.t = 0

    def act(self, x) -> np.ndarray:
        if self._awaiting_observe:
            raise RuntimeError("act() called twice without observe()")
        self._awaiting_observe = True
        return self._act(np.asarray(x, dtype=float))

    def observe(self, x_next, cost: float):
        if not self._awaiting_observe:
            raise RuntimeError("observe() called without a preceding act()")
        self._awaiting_observe = False
        self._observe(np.asarray(x_next, dtype=float), float(cost))
        self.t += 1

    def _act(self, x):
        raise NotImplementedError

    def _observe(self, x_next, cost):
        pass


class LqrController(Controller):
    def __init__(self, K):
        K = np.atleast_2d(np.asarray(K, dtype=float))
        super().__init__(d_u=K.shape[0], d_x=K.shape[1], d_w=K.shape[1])
        self.K = K

    def _act(self, x):
        return lqr_act(self.K, x)


@dataclass(frozen=True)
class TransferMatrices:
    """psi[i] maps w_{t-i} to x_{t+1} (i = 0..2h); phi[s] = Abar^s B maps the
    injected control noise n_{t-s} to x_{t+1} (s = 0..h)."""

    psi: np.ndarray
    phi: np.ndarray

    @property
    def h(self) -> int:
        return self.phi.shape[0] - 1


def _closed_loop(system: LinearSystem, k_base) -> np.ndarray:
    if k_base is None:
        return system.A.copy()
    return system.A - system.B @ np.atleast_2d(np.asarray(k_base, dtype=float))


def _psi_stack(Abar: np.ndarray, B: np.ndarray, M_seq: Sequence[np.ndarray], h: int) -> np.ndarray:
    """Coefficient of w_{t-i} in x_{t+1}, i = 0..2h, for policies M_seq[s] in force at t-s."""
    dx = Abar.shape[0]
    powers = [np.eye(dx)]
    for _ in range(h):
        powers.append(Abar @ powers[-1])
    d_w = M_seq[0].shape[2]
    if d_w != dx:
        raise ValueError("transfer matrices require d_w == d_x (true-disturbance DAC)")
    psi = np.zeros((2 * h + 1, dx, d_w))
    for i in range(2 * h + 1):
        acc = powers[i].copy() if i <= h else np.zeros((dx, d_w))
        for s in range(0, h + 1):
            k = i - s
            if 1 <= k <= h:
                acc = acc + powers[s] @ B @ M_seq[s][k - 1]
        psi[i] = acc
    return psi


def transfer_matrices(system: LinearSystem, k_base, params: Optional[DacParams], h: int) -> TransferMatrices:
    """Stationary-policy transfer matrices on the closed loop Abar = A - B K_base."""
    Abar = _closed_loop(system, k_base)
    B = system.B
    if params is None:
        params = DacParams.zeros(h, system.du, system.dx)
    M_seq = [params.M] * (h + 1)
    psi = _psi_stack(Abar, B, M_seq, h)
    powers = [np.eye(system.dx)]
    for _ in range(h):
        powers.append(Abar @ powers[-1])
    phi = np.stack([powers[s] @ B for s in range(h + 1)])
    return TransferMatrices(psi=psi, phi=phi)


def unrolled_state(
    system: LinearSystem,
    k_base,
    M_seq: Sequence[np.ndarray],
    w_window: np.ndarray,
    n_window: np.ndarray,
    x_lag: np.ndarray,
    delta: float,
    h: int,
) -> np.ndarray:
    """Closed-form x_{t+1} = Abar^{h+1} x_{t-h} + sum psi_i w_{t-i} + delta sum phi_s n_{t-s}.

    ``M_seq``: h+1 parameter stacks, newest first (policy at t, t-1, .., t-h).
    ``w_window``: (2h+1, d_w) newest first (w_t .. w_{t-2h}), zero-padded.
    ``n_window``: (h+1, d_u) unit noises newest first (n_t .. n_{t-h}).
    """
    Abar = _closed_loop(system, k_base)
    psi = _psi_stack(Abar, system.B, list(M_seq), h)
    out = np.linalg.matrix_power(Abar, h + 1) @ np.asarray(x_lag, dtype=float)
    for i in range(2 * h + 1):
        out = out + psi[i] @ w_window[i]
    phi = np.eye(system.dx)
    for s in range(h + 1):
        out = out + delta * ((phi @ system.B) @ n_window[s])
        phi = Abar @ phi
    return out


class _HistoryMixin:
    """Shift buffers for newest-first histories (zero-padded before time 0)."""

    @staticmethod
    def _push(buf: np.ndarray, value: np.ndarray):
        buf[1:] = buf[:-1]
        buf[0] = value


class GpcFullInfo(Controller, _HistoryMixin):
    """Full-information GPC: exact OGD on the idealized cost, projected onto the comparator set."""

    def __init__(self, system, cost, h, eta, k_base=None, kappa=1.0, alpha=1.0,
                 radius_scale=1.0, project=True):
        super().__init__(d_u=system.du, d_x=system.dx, d_w=system.dx)
        if not (hasattr(cost, "grad_x") and hasattr(cost, "grad_u")):
            raise UnsupportedCostError("full-information GPC needs cost gradients (grad_x/grad_u)")
        self.system = system
        self.cost = cost
        self.h = h
        self.eta = eta
        self.K = np.zeros((system.du, system.dx)) if k_base is None else np.atleast_2d(np.asarray(k_base, dtype=float))
        self.kappa, self.alpha, self.radius_scale = kappa, alpha, radius_scale
        self.project = project
        self.params = DacParams.zeros(h, system.du, system.dx)
        self._w = np.zeros((2 * h + 1, system.dx))
        Abar = system.A - system.B @ self.K
        self._AsB = [system.B.copy()]
        for _ in range(h):
            self._AsB.append(Abar @ self._AsB[-1])
        self._A_pows = [np.eye(system.dx)]
        for _ in range(h):
            self._A_pows.append(Abar @ self._A_pows[-1])
        self._x = None
        self._u = None

    def _act(self, x):
        self._x = x
        self._u = lqr_act(self.K, x) + dac_control(self.params, self._w[: self.h])
        return self._u

    def idealized_gradient(self, params: DacParams) -> np.ndarray:
        """Exact gradient of c(y_t(M), u_t(M)) at the current disturbance window."""
        h = self.h
        w = self._w  # w[k] == w_{t-1-k}
        u_tilde = dac_control(params, w[:h])
        y = np.zeros(self.d_x)
        for i in range(h + 1):
            y = y + self._A_pows[i] @ w[i]
        for s in range(h + 1):
            lagged = w[s + 1 : s + 1 + h]
            y = y + self._AsB[s] @ dac_control(params, lagged)
        g_x = self.cost.grad_x(y, u_tilde)
        g_u = self.cost.grad_u(y, u_tilde)
        grad = np.zeros_like(params.M)
        phis = np.stack([AsB.T @ g_x for AsB in self._AsB])  # (h+1, d_u)
        for k in range(1, h + 1):
            block = np.outer(g_u, w[k - 1])
            for s in range(h + 1):
                block = block + np.outer(phis[s], w[k + s])
            grad[k - 1] = block
        return grad

    def _observe(self, x_next, cost):
        grad = self.idealized_gradient(self.params)
        new = DacParams(self.params.M - self.eta * grad)
        if self.project:
            new = project_dac(new, self.kappa, self.alpha, self.radius_scale)
        self.params = new
        w_t = x_next - self.system.A @ self._x - self.system.B @ self._u
        self.last_pd = w_t
        self._push(self._w, w_t)


class BanditGpc(Controller, _HistoryMixin):
    """Bandit GPC (RBPC): sphere exploration in action space, h-delayed projected OGD.

    ``estimator`` None means true-w mode (w_hat = x_{t+1} - A x_t - B u_t);
    otherwise pseudo-disturbances come from the given estimator.
    """

    def __init__(self, system, h, eta, delta, k_base=None, estimator: Optional[PdEstimator] = None,
                 kappa=1.0, alpha=1.0, radius_scale=1.0, rng=None, grad_bound=None):
        d_w = system.dx if estimator is None else estimator.d_w
        super().__init__(d_u=system.du, d_x=system.dx, d_w=d_w)
        if delta <= 0 or eta <= 0:
            raise ValueError("eta and delta must be positive")
        self.system = system
        self.h = h
        self.eta = eta
        self.delta = delta
        self.K = np.zeros((system.du, system.dx)) if k_base is None else np.atleast_2d(np.asarray(k_base, dtype=float))
        self.estimator = estimator
        self.kappa, self.alpha, self.radius_scale = kappa, alpha, radius_scale
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.grad_bound = grad_bound
        self.params = DacParams.zeros(h, system.du, d_w)
        self._whats = np.zeros((2 * h, d_w))
        self._noises = np.zeros((h, system.du))
        self._pending: deque = deque()
        self._x = None
        self._u = None

    def _act(self, x):
        n = sample_sphere(self.d_u, self.rng)
        self._push(self._noises, n)
        self._x = x
        self._u = lqr_act(self.K, x) + dac_control(self.params, self._whats[: self.h]) + self.delta * n
        self.last_noise = self.delta * n
        return self._u

    def _observe(self, x_next, cost):
        if self.estimator is None:
            what = x_next - self.system.A @ self._x - self.system.B @ self._u
        else:
            what = self.estimator.estimate(self._x, self._u, x_next, cost=cost, noise=self.last_noise)
        grad = bandit_gradient(cost, self._noises, self._whats, self.delta, self.h)
        if self.grad_bound is not None and np.linalg.norm(grad) > self.grad_bound * (1 + 1e-9):
            raise RuntimeError("gradient estimate exceeded its a-priori bound")
        self._pending.append(GradEstimate(G=grad, t=self.t))
        if self.t >= self.h:
            delayed = self._pending.popleft()
            self.params = project_dac(
                DacParams(self.params.M - self.eta * delayed.G),
                self.kappa, self.alpha, self.radius_scale,
            )
        self.last_pd = what
        self._push(self._whats, what)


class MfGpc(Controller, _HistoryMixin):
    """Model-free GPC: Gaussian exploration, PD signal, immediate Sigma^{-1}-scaled updates."""

    def __init__(self, system, estimator: PdEstimator, h, eta, sigma, k_base=None,
                 kappa=1.0, alpha=1.0, radius_scale=1.0, rng=None,
                 project=True, update_period=1, weight_decay=0.0):
        super().__init__(d_u=system.du, d_x=system.dx, d_w=estimator.d_w)
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = float(sigma) ** 2 * np.eye(system.du)
        self.sigma = np.atleast_2d(sigma)
        self.sigma_inv = np.linalg.inv(self.sigma)
        if update_period < 1:
            raise ValueError("update_period must be >= 1")
        if not 0 <= weight_decay <= 1:
            raise ValueError("weight_decay must lie in [0, 1]")
        self.system = system
        self.estimator = estimator
        self.h = h
        self.eta = eta
        self.K = np.zeros((system.du, system.dx)) if k_base is None else np.atleast_2d(np.asarray(k_base, dtype=float))
        self.kappa, self.alpha, self.radius_scale = kappa, alpha, radius_scale
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.project = project
        self.update_period = update_period
        self.weight_decay = weight_decay
        self.params = DacParams.zeros(h, system.du, estimator.d_w)
        self._whats = np.zeros((2 * h, estimator.d_w))
        self._noises = np.zeros((h, system.du))
        self._x = None
        self._u = None

    def _act(self, x):
        n = sample_gaussian(self.sigma, self.rng)
        self._push(self._noises, n)
        self._x = x
        self._u = lqr_act(self.K, x) + dac_control(self.params, self._whats[: self.h]) + n
        self.last_noise = n
        return self._u

    def _observe(self, x_next, cost):
        what = self.estimator.estimate(self._x, self._u, x_next, cost=cost, noise=self.last_noise)
        if self.t % self.update_period == 0:
            grad = gaussian_gradient(cost, self._noises, self._whats, self.sigma_inv, self.h)
            M = (1.0 - self.weight_decay) * self.params.M - self.eta * grad
            new = DacParams(M)
            if self.project:
                new = project_dac(new, self.kappa, self.alpha, self.radius_scale)
            self.params = new
        self.last_pd = what
        self._push(self._whats, what)


class Bpc(Controller, _HistoryMixin):
    """Parameter-space exploration baseline: perturbs M itself on the Frobenius sphere.

    The gradient estimate dim(M) * c_t / delta_p * E_{t-h} carries the full
    parameter dimension, which is what makes this baseline degrade in high
    dimension at a matched tuning budget.
    """

    def __init__(self, system, h, eta, delta_p, k_base=None, kappa=1.0, alpha=1.0,
                 radius_scale=1.0, rng=None):
        super().__init__(d_u=system.du, d_x=system.dx, d_w=system.dx)
        if delta_p <= 0 or eta <= 0:
            raise ValueError("eta and delta_p must be positive")
        self.system = system
        self.h = h
        self.eta = eta
        self.delta_p = delta_p
        self.K = np.zeros((system.du, system.dx)) if k_base is None else np.atleast_2d(np.asarray(k_base, dtype=float))
        self.kappa, self.alpha, self.radius_scale = kappa, alpha, radius_scale
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.params = DacParams.zeros(h, system.du, system.dx)
        self._w = np.zeros((h, system.dx))
        self._pending: deque = deque()
        self._x = None
        self._u = None
        self._E = None

    @property
    def dim(self) -> int:
        return self.params.M.size

    def _act(self, x):
        E = self.rng.standard_normal(self.params.M.shape)
        E /= np.linalg.norm(E)
        self._E = E
        played = DacParams(self.params.M + self.delta_p * E)
        self._x = x
        self._u = lqr_act(self.K, x) + dac_control(played, self._w)
        return self._u

    def _observe(self, x_next, cost):
        w_t = x_next - self.system.A @ self._x - self.system.B @ self._u
        grad = (self.dim * cost / self.delta_p) * self._E
        self._pending.append(GradEstimate(G=grad, t=self.t))
        if self.t >= self.h:
            delayed = self._pending.popleft()
            self.params = project_dac(
                DacParams(self.params.M - self.eta * delayed.G),
                self.kappa, self.alpha, self.radius_scale,
            )
        self.last_pd = w_t
        self._push(self._w, w_t)
