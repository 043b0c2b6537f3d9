"""Disturbance-action policy parameters, comparator projection, and gradient estimators.

A policy is an ordered stack of h matrices M_1..M_h (d_u x d_w each) producing
u = sum_i M_i w_hat_{t-i}.  The comparator set constrains each block to a
spectral-norm ball of radius 2 kappa^4 (1-alpha)^i; Euclidean projection onto
that set clips singular values blockwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DacParams:
    """Stack of h control matrices, stored as an array of shape (h, d_u, d_w)."""

    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.ndim != 3:
            raise ValueError(f"M must be (h, d_u, d_w), got shape {M.shape}")
        object.__setattr__(self, "M", M)

    @classmethod
    def zeros(cls, h: int, d_u: int, d_w: int) -> "DacParams":
        return cls(np.zeros((h, d_u, d_w)))

    @property
    def h(self) -> int:
        return self.M.shape[0]

    @property
    def d_u(self) -> int:
        return self.M.shape[1]

    @property
    def d_w(self) -> int:
        return self.M.shape[2]

    def block_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(Mi, 2) for Mi in self.M])


@dataclass(frozen=True)
class GradEstimate:
    """Stochastic gradient w.r.t. the DAC stack, tagged with the step it was formed at."""

    G: np.ndarray
    t: int


def comparator_radii(h: int, kappa: float, alpha: float, scale: float = 1.0) -> np.ndarray:
    """Spectral radii 2 kappa^4 (1-alpha)^i for blocks i = 1..h, times ``scale``."""
    i = np.arange(1, h + 1)
    return scale * 2.0 * kappa**4 * (1.0 - alpha) ** i


def dac_control(params: DacParams, history: np.ndarray) -> np.ndarray:
    """u = sum_i M_i w_hat_{t-i} for a newest-first history of h vectors."""
    history = np.asarray(history, dtype=float)
    if history.shape != (params.h, params.d_w):
        raise ValueError(f"history must be ({params.h}, {params.d_w}), got {history.shape}")
    return np.einsum("hij,hj->i", params.M, history)


def clip_spectral(M: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of one block onto the spectral-norm ball of ``radius``."""
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] <= radius:
        return M
    return (U * np.minimum(s, radius)) @ Vt


def project_dac(params: DacParams, kappa: float, alpha: float, scale: float = 1.0) -> DacParams:
    """Project every block onto its comparator ball; idempotent."""
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not np.isfinite(params.M).all():
        raise ValueError("cannot project non-finite parameters")
    radii = comparator_radii(params.h, kappa, alpha, scale)
    # spectral norm <= Frobenius norm: cheap certificate that no block needs clipping
    frob = np.sqrt(np.einsum("hij,hij->h", params.M, params.M))
    if np.all(frob <= radii):
        return params
    U, s, Vt = np.linalg.svd(params.M, full_matrices=False)  # batched over blocks
    clipped = np.minimum(s, radii[:, None])
    if np.array_equal(clipped, s):
        return params
    return DacParams(np.einsum("hij,hj,hjk->hik", U, clipped, Vt))


def _paired_outer(noises: np.ndarray, whats: np.ndarray, h: int) -> np.ndarray:
    """Block j (1-indexed) = sum_{i=0}^{h-1} noises[i] (x) whats[i + j - 1].

    ``noises`` is newest-first (n_t .. n_{t-h+1}); ``whats`` is newest-first
    starting at w_hat_{t-1} and must extend to w_hat_{t-2h} (length >= 2h-1).
    """
    d_u = noises.shape[1]
    d_w = whats.shape[1]
    out = np.zeros((h, d_u, d_w))
    for j in range(1, h + 1):
        # whats[i + j - 1] == w_hat_{t - i - j}
        window = whats[j - 1 : j - 1 + h]
        out[j - 1] = noises.T @ window
    return out


def bandit_gradient(cost: float, noises, whats, delta: float, h: int = None) -> np.ndarray:
    """Sphere-exploration gradient estimate (d_u * c_t / delta) sum_i n_{t-i} (x) window_i.

    ``noises``: (h, d_u) unit sphere draws, newest first.  ``whats``: (>=2h-1, d_w)
    pseudo-disturbances, newest first beginning at w_hat_{t-1}, zero-padded
    before the start of time.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    noises = np.asarray(noises, dtype=float)
    whats = np.asarray(whats, dtype=float)
    h = noises.shape[0] if h is None else h
    if whats.shape[0] < 2 * h - 1:
        raise ValueError(f"need at least {2 * h - 1} pseudo-disturbances, got {whats.shape[0]}")
    d_u = noises.shape[1]
    return (d_u * float(cost) / delta) * _paired_outer(noises, whats, h)


def gaussian_gradient(cost: float, noises, whats, sigma_inv: np.ndarray, h: int = None) -> np.ndarray:
    """Gaussian-exploration variant: c_t sum_i (Sigma^{-1} n_{t-i}) (x) window_i."""
    noises = np.asarray(noises, dtype=float)
    whats = np.asarray(whats, dtype=float)
    h = noises.shape[0] if h is None else h
    if whats.shape[0] < 2 * h - 1:
        raise ValueError(f"need at least {2 * h - 1} pseudo-disturbances, got {whats.shape[0]}")
    scaled = noises @ np.asarray(sigma_inv, dtype=float).T
    return float(cost) * _paired_outer(scaled, whats, h)


def ogd_update_delayed(params: DacParams, grad, eta: float, kappa: float, alpha: float, scale: float = 1.0) -> DacParams:
    """Projected OGD step M <- Pi[M - eta * grad]; grad None means no-op (early rounds)."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if grad is None:
        return params
    G = grad.G if isinstance(grad, GradEstimate) else np.asarray(grad, dtype=float)
    return project_dac(DacParams(params.M - eta * G), kappa, alpha, scale)


def grad_norm_bound(d_u: int, h: int, W: float, G: float, D: float, delta: float) -> float:
    """A-priori bound G_hat = d_u h^2 W G D^2 / delta on the sphere gradient estimate."""
    return d_u * h**2 * W * G * D**2 / delta


def sample_sphere(d_u: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere in R^{d_u} (normalized Gaussian)."""
    if d_u < 1:
        raise ValueError("d_u must be >= 1")
    while True:
        v = rng.standard_normal(d_u)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def sample_gaussian(sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw n ~ N(0, Sigma) via the Cholesky factor."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    chol = np.linalg.cholesky(sigma)
    return chol @ rng.standard_normal(sigma.shape[0])
