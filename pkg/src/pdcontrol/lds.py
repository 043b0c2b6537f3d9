"""Linear dynamical systems, disturbance generators, and the simulation loop.

The plant is x_{t+1} = A x_t + B u_t + w_t with a bounded, possibly adversarial
disturbance w_t.  Everything here is controller-agnostic: a controller is any
object with ``act(x) -> u`` and ``observe(x_next, cost)`` called in strict
alternation by :func:`rollout`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class DivergenceError(RuntimeError):
    """State left the guard region (or went non-finite) during a rollout.

    Carries the partial trajectory accumulated so far in ``trajectory``.
    """

    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def _as_vector(x, dim, name):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (dim,):
        raise ValueError(f"{name} must have dimension {dim}, got shape {np.shape(x)}")
    return v


@dataclass(frozen=True)
class LinearSystem:
    """Time-invariant linear plant defined by matrices A (dx x dx) and B (dx x du)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"B must have {A.shape[0]} rows, got {B.shape}")
        if not (np.isfinite(A).all() and np.isfinite(B).all()):
            raise ValueError("system matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def dx(self) -> int:
        return self.A.shape[0]

    @property
    def du(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class AssumptionSet:
    """Problem-scale constants: stability (kappa, alpha), disturbance bound W, cost scales."""

    kappa: float = 1.0
    alpha: float = 1.0
    W: float = 1.0
    G: float = 1.0
    C: float = 1.0
    L_smooth: Optional[float] = None

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        for name in ("W", "G", "C"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.L_smooth is not None and self.L_smooth <= 0:
            raise ValueError("L_smooth must be positive when given")

    def state_bound(self, h: int) -> float:
        """Bound D on well-behaved |x_t|, |u_t| for memory length h."""
        return max(10.0 * self.kappa**4 * self.W * (h * self.kappa + 1) / self.alpha, 1.0)


def step(system: LinearSystem, x, u, w) -> np.ndarray:
    """One plant transition: A x + B u + w."""
    x = _as_vector(x, system.dx, "x")
    u = _as_vector(u, system.du, "u")
    w = _as_vector(w, system.dx, "w")
    return system.A @ x + system.B @ u + w


def strong_stability(A, tol: float = 1e-9):
    """Certify (kappa, alpha)-strong stability of A via eigendecomposition.

    Returns (kappa, alpha) with kappa = max(|Q|, |Q^-1|, 1) and
    alpha = 1 - max|eig| for a diagonalizing A = Q diag(eig) Q^-1, or None when
    A is not diagonalizable to tolerance or has spectral radius >= 1.  The pair
    certifies |A^t| <= kappa^2 (1 - alpha)^t.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.isfinite(A).all():
        raise ValueError("A must be finite")
    if A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    eigvals, Q = np.linalg.eig(A)
    rho = np.abs(eigvals).max() if eigvals.size else 0.0
    if rho >= 1.0:
        return None
    try:
        Qinv = np.linalg.inv(Q)
    except np.linalg.LinAlgError:
        return None
    # reconstruction failure means A is defective (not diagonalizable)
    recon = Q @ np.diag(eigvals) @ Qinv
    scale = max(np.linalg.norm(A, 2), 1.0)
    if np.linalg.norm(recon - A, 2) > tol * scale:
        return None
    kappa = max(np.linalg.norm(Q, 2), np.linalg.norm(Qinv, 2), 1.0)
    alpha = 1.0 - rho
    return float(kappa), float(alpha)


def _clip_norm(w: np.ndarray, bound: float) -> np.ndarray:
    n = np.linalg.norm(w)
    if n > bound:
        return w * (bound / n)
    return w


class DisturbanceGenerator:
    """Deterministic-in-(t, seed) source of disturbance vectors, norm-clipped to ``bound``."""

    _SALT = 0x9D5

    def __init__(self, dim: int, bound: float = np.inf):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if bound <= 0:
            raise ValueError("bound must be positive")
        self.dim = int(dim)
        self.bound = float(bound)
        self._keys = {}

    def _rng(self, t: int, seed: int) -> np.random.Generator:
        key = self._keys.get(seed)
        if key is None:
            key = np.random.SeedSequence((self._SALT, seed)).generate_state(2)
            self._keys[seed] = key
        # counter-based stream: O(1) access at any t, identical on repeat calls
        return np.random.Generator(np.random.Philox(key=key, counter=int(t) << 64))

    def _raw(self, t: int, seed: int) -> np.ndarray:
        return np.zeros(self.dim)

    def at(self, t: int, seed: int = 0) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be >= 0")
        return _clip_norm(self._raw(t, seed), self.bound)

    def sequence(self, T: int, seed: int = 0) -> np.ndarray:
        return np.stack([self.at(t, seed) for t in range(T)])

    def norm_bound(self) -> float:
        """A finite scale W with |w_t| <= W (best effort for unclipped Gaussians)."""
        return self.bound


class ZeroDisturbance(DisturbanceGenerator):
    def norm_bound(self):
        return min(self.bound, 1e-9)


class GaussianDisturbance(DisturbanceGenerator):
    """iid N(0, sigma^2 I) per step."""

    def __init__(self, dim, sigma, bound=np.inf):
        super().__init__(dim, bound)
        self.sigma = float(sigma)

    def _raw(self, t, seed):
        return self.sigma * self._rng(t, seed).standard_normal(self.dim)

    def norm_bound(self):
        # scale constant for guards/schedules when no hard clip is configured
        return min(self.bound, 4.0 * self.sigma * np.sqrt(self.dim))


class UniformDisturbance(DisturbanceGenerator):
    """iid uniform on [low, high] per coordinate."""

    def __init__(self, low, high, bound=np.inf):
        low = np.atleast_1d(np.asarray(low, dtype=float))
        high = np.atleast_1d(np.asarray(high, dtype=float))
        if low.shape != high.shape or (low > high).any():
            raise ValueError("need low <= high with matching shapes")
        super().__init__(low.shape[0], bound)
        self.low, self.high = low, high

    def _raw(self, t, seed):
        u = self._rng(t, seed).random(self.dim)
        return self.low + u * (self.high - self.low)

    def norm_bound(self):
        return min(self.bound, float(np.linalg.norm(np.maximum(np.abs(self.low), np.abs(self.high)))))


class SinusoidDisturbance(DisturbanceGenerator):
    """amplitude * sin(2 pi f t + phase), per coordinate."""

    def __init__(self, amplitude, frequency=1.0 / 50.0, phase=0.0, bound=np.inf):
        amplitude = np.atleast_1d(np.asarray(amplitude, dtype=float))
        super().__init__(amplitude.shape[0], bound)
        self.amplitude = amplitude
        self.frequency = float(frequency)
        self.phase = np.broadcast_to(np.asarray(phase, dtype=float), amplitude.shape).copy()

    def _raw(self, t, seed):
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * t + self.phase)

    def sequence(self, T, seed=0):
        t = np.arange(T)[:, None]
        raw = self.amplitude * np.sin(2.0 * np.pi * self.frequency * t + self.phase)
        return np.stack([_clip_norm(row, self.bound) for row in raw])

    def norm_bound(self):
        return min(self.bound, float(np.linalg.norm(self.amplitude)))


class ConstantDisturbance(DisturbanceGenerator):
    def __init__(self, value, bound=np.inf):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        super().__init__(value.shape[0], bound)
        self.value = value

    def _raw(self, t, seed):
        return self.value.copy()

    def norm_bound(self):
        return min(self.bound, max(float(np.linalg.norm(self.value)), 1e-9))


class CustomDisturbance(DisturbanceGenerator):
    """Plays back a precomputed (T, dim) sequence; out-of-range t is an error."""

    def __init__(self, values, bound=np.inf):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        super().__init__(values.shape[1], bound)
        self.values = values

    def _raw(self, t, seed):
        if t >= self.values.shape[0]:
            raise IndexError(f"custom disturbance has {self.values.shape[0]} steps, asked for t={t}")
        return self.values[t].copy()

    def norm_bound(self):
        rows = np.linalg.norm(self.values, axis=1)
        return min(self.bound, max(float(rows.max(initial=0.0)), 1e-9))


@dataclass
class StepRecord:
    t: int
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    what: np.ndarray
    noise: np.ndarray
    cost: float


@dataclass
class Trajectory:
    """Append-only record of one closed-loop run; records[t].x is the pre-step state."""

    records: list = field(default_factory=list)
    final_state: Optional[np.ndarray] = None

    def append(self, record: StepRecord):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    @property
    def states(self) -> np.ndarray:
        return np.stack([r.x for r in self.records])

    @property
    def controls(self) -> np.ndarray:
        return np.stack([r.u for r in self.records])

    @property
    def disturbances(self) -> np.ndarray:
        return np.stack([r.w for r in self.records])

    @property
    def pseudo_disturbances(self) -> np.ndarray:
        return np.stack([r.what for r in self.records])

    def total_cost(self) -> float:
        return float(self.costs.sum())


def rollout(
    system: LinearSystem,
    controller,
    gen: DisturbanceGenerator,
    cost_fn: Callable[[np.ndarray, np.ndarray], float],
    T: int,
    seed: int = 0,
    x0: Optional[np.ndarray] = None,
    guard: float = 1e12,
) -> Trajectory:
    """Closed-loop simulation for T steps.

    Per step: u_t = controller.act(x_t); the plant moves to x_{t+1}; the
    controller then sees (x_{t+1}, c_t) through observe(), in that order.
    Raises :class:`DivergenceError` when |x| exceeds ``guard`` or any produced
    value is non-finite; the partial trajectory rides on the exception.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if gen.dim != system.dx:
        raise ValueError("generator dimension must match dx")
    x = np.zeros(system.dx) if x0 is None else _as_vector(x0, system.dx, "x0")
    traj = Trajectory()
    for t in range(T):
        u = _as_vector(controller.act(x), system.du, "u")
        w = gen.at(t, seed)
        x_next = step(system, x, u, w)
        c = float(cost_fn(x, u))
        controller.observe(x_next, c)
        what = np.asarray(getattr(controller, "last_pd", np.zeros(system.dx)), dtype=float)
        noise = np.asarray(getattr(controller, "last_noise", np.zeros(system.du)), dtype=float)
        rec = StepRecord(t, x, u, w, what, noise, c)
        if not (
            np.isfinite(x_next).all()
            and np.isfinite(u).all()
            and np.isfinite(c)
            and np.isfinite(what).all()
        ):
            raise DivergenceError(f"non-finite value at step {t}", traj)
        traj.append(rec)
        if np.linalg.norm(x_next) > guard:
            traj.final_state = x_next
            raise DivergenceError(f"state norm exceeded guard {guard:g} at step {t}", traj)
        x = x_next
    traj.final_state = x
    return traj


class QuadraticCost:
    """c(x, u) = x'Qx + u'Ru with exact gradients (2Qx, 2Ru)."""

    def __init__(self, Q, R):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(R, dtype=float))

    @classmethod
    def identity(cls, dx, du):
        return cls(np.eye(dx), np.eye(du))

    def __call__(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return float(x @ self.Q @ x + u @ self.R @ u)

    def grad_x(self, x, u):
        return 2.0 * self.Q @ np.asarray(x, dtype=float)

    def grad_u(self, x, u):
        return 2.0 * self.R @ np.asarray(u, dtype=float)
