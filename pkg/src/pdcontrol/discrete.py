"""Discrete-action variant on tabular MDPs: softmax residual-logit policies.

The policy adds a learned correction to fixed base logits,
softmax(base_logits[s] + sum_i M_i f(w_hat_{t-i})), where each history slot is
featurized as f(w) = [1; w].  The constant keeps the score tensor nonzero when
the history is still all zeros, which is what lets the TD-residual signal
bootstrap (the reshaping of that signal back to a d_w vector is otherwise
unspecified; see :func:`pd1_discrete`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP: transitions P (S, A, S) row-stochastic, cost table c (S, A)."""

    P: np.ndarray
    c: np.ndarray

    @classmethod
    def from_dict(cls, d: dict) -> "TabularMdp":
        return cls(P=np.array(d["P"], dtype=float), c=np.array(d["c"], dtype=float))

    def to_dict(self) -> dict:
        return {"P": self.P.tolist(), "c": self.c.tolist()}

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError("P must have shape (S, A, S)")
        if c.shape != P.shape[:2]:
            raise ValueError("c must have shape (S, A)")
        if (P < 0).any() or np.abs(P.sum(axis=2) - 1.0).max() > 1e-12:
            raise ValueError("every P[s, a] must be a distribution")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "c", c)

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def transition_row(self, s: int, a: int, t: int = 0, perturb=None) -> np.ndarray:
        """Row P[s, a], optionally perturbed per step and re-normalized."""
        row = self.P[s, a]
        if perturb is not None:
            row = np.clip(row + perturb(t, s, a), 0.0, None)
            total = row.sum()
            row = row / total if total > 0 else np.full_like(row, 1.0 / row.size)
        return row

    def step(self, s: int, a: int, rng: np.random.Generator, t: int = 0, perturb=None) -> int:
        return int(rng.choice(self.n_states, p=self.transition_row(s, a, t, perturb)))


def policy_evaluation(mdp: TabularMdp, policy: np.ndarray, gamma: float):
    """Exact tabular evaluation of a stochastic policy: returns (V, Q).

    V = (I - gamma P_pi)^{-1} c_pi and Q(s, a) = c(s, a) + gamma P[s, a] . V.
    """
    policy = np.asarray(policy, dtype=float)
    c_pi = np.einsum("sa,sa->s", policy, mdp.c)
    P_pi = np.einsum("sa,sab->sb", policy, mdp.P)
    V = np.linalg.solve(np.eye(mdp.n_states) - gamma * P_pi, c_pi)
    Q = mdp.c + gamma * mdp.P @ V
    return V, Q


def _features(what_history: np.ndarray) -> np.ndarray:
    """Per-slot features [1; w_hat]: constant bias plus the disturbance coordinates."""
    h, d_w = what_history.shape
    out = np.ones((h, d_w + 1))
    out[:, 1:] = what_history
    return out


class DiscreteDacPolicy:
    """Residual-logit policy over a finite action set.

    ``base_logits``: (S, A) table.  ``M``: (h, A, 1 + d_w) blocks mapping the
    featurized pseudo-disturbance history to logit offsets.
    """

    def __init__(self, base_logits: np.ndarray, h: int, d_w: int, M: Optional[np.ndarray] = None):
        self.base_logits = np.atleast_2d(np.asarray(base_logits, dtype=float))
        self.h = int(h)
        self.d_w = int(d_w)
        self.n_actions = self.base_logits.shape[1]
        if M is None:
            M = np.zeros((self.h, self.n_actions, self.d_w + 1))
        M = np.asarray(M, dtype=float)
        if M.shape != (self.h, self.n_actions, self.d_w + 1):
            raise ValueError(f"M must be {(self.h, self.n_actions, self.d_w + 1)}, got {M.shape}")
        self.M = M

    def distribution(self, s: int, what_history: np.ndarray) -> np.ndarray:
        feats = _features(np.asarray(what_history, dtype=float))
        logits = self.base_logits[s] + np.einsum("haf,hf->a", self.M, feats)
        logits = logits - logits.max()
        p = np.exp(logits)
        return p / p.sum()

    def act(self, s: int, what_history: np.ndarray, rng: np.random.Generator):
        """Sample an action; returns (action, log-prob, score d log pi / d M).

        The softmax score factorizes per block as (e_u - pi) (x) f(w_hat_{t-i}).
        """
        probs = self.distribution(s, what_history)
        a = int(rng.choice(self.n_actions, p=probs))
        feats = _features(np.asarray(what_history, dtype=float))
        eu = np.zeros(self.n_actions)
        eu[a] = 1.0
        score = np.einsum("a,hf->haf", eu - probs, feats)
        return a, float(np.log(probs[a])), score


def pd1_discrete(cost: float, v_next: float, q_sa: float, gamma: float,
                 score: np.ndarray, d_w: int) -> np.ndarray:
    """TD residual times the leading d_w score components.

    The score is a tensor in parameter space while the policy consumes a d_w
    vector; this flatten-truncate (row-major, first block first, bias column
    first) is the one documented reshaping choice.
    """
    residual = float(cost) + gamma * float(v_next) - float(q_sa)
    flat = np.asarray(score, dtype=float).reshape(-1)
    if d_w > flat.size:
        raise ValueError(f"d_w={d_w} exceeds score size {flat.size}")
    return residual * flat[:d_w]


def dmfgpc_update(M: np.ndarray, cost: float, scores, eta: float,
                  radius: Optional[float] = None) -> np.ndarray:
    """REINFORCE-style step M' = M - eta * c_t * sum_j score_{t-j}, optional
    Frobenius-ball projection."""
    M = np.asarray(M, dtype=float)
    total = np.zeros_like(M)
    for s in scores:
        total += s
    out = M - eta * float(cost) * total
    if radius is not None:
        n = np.linalg.norm(out)
        if n > radius:
            out = out * (radius / n)
    return out


def run_dmfgpc(
    mdp: TabularMdp,
    policy: DiscreteDacPolicy,
    T: int,
    eta: float,
    gamma: float,
    seed: int = 0,
    cost_override: Optional[Callable[[int, int, int], float]] = None,
    perturb=None,
    radius: Optional[float] = None,
    s0: int = 0,
    learn: bool = True,
):
    """Run the discrete controller loop for T steps; returns (avg costs array, policy).

    ``cost_override(t, s, a)`` replaces the table cost for the realized signal
    (the V/Q tables stay tied to the base policy on the unperturbed MDP);
    ``learn=False`` freezes M, giving the paired baseline run.
    """
    rng = np.random.default_rng(np.random.SeedSequence((0xD15C, seed)))
    base_probs = np.exp(policy.base_logits)
    base_probs = base_probs / base_probs.sum(axis=1, keepdims=True)
    V, Q = policy_evaluation(mdp, base_probs, gamma)

    h, d_w = policy.h, policy.d_w
    what_hist = np.zeros((h, d_w))
    score_buf = [np.zeros_like(policy.M) for _ in range(h)]
    costs = np.zeros(T)
    s = s0
    for t in range(T):
        a, _, score = policy.act(s, what_hist, rng)
        s_next = mdp.step(s, a, rng, t, perturb)
        c = float(mdp.c[s, a]) if cost_override is None else float(cost_override(t, s, a))
        costs[t] = c
        what = pd1_discrete(c, V[s_next], Q[s, a], gamma, score, d_w)
        score_buf.insert(0, score)
        score_buf.pop()
        if learn:
            policy.M = dmfgpc_update(policy.M, c, score_buf, eta, radius)
        what_hist[1:] = what_hist[:-1]
        what_hist[0] = what
        s = s_next
    return costs, policy


def write_discrete_results(runs, path: str) -> str:
    """Emit paired discrete runs in the harness results.csv schema.

    ``runs``: list of (seed, costs, baseline_costs); the frozen-base run plays
    the comparator role, so the oracle column is its cumulative cost and the
    regret column is the adaptive policy's excess over it.
    """
    import os

    os.makedirs(path, exist_ok=True)
    out = os.path.join(path, "results.csv")

    def fmt(x):
        return repr(float(x))

    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seed,t,cost,cum_cost,oracle_cum_cost,regret\n")
        for seed, costs, base_costs in runs:
            cum = np.cumsum(costs)
            cum_base = np.cumsum(base_costs)
            for t in range(len(costs)):
                fh.write(f"{seed},{t},{fmt(costs[t])},{fmt(cum[t])},{fmt(cum_base[t])},"
                         f"{fmt(cum[t] - cum_base[t])}\n")
    return out
