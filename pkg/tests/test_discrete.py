import numpy as np
import pytest

from pdcontrol.discrete import (
    DiscreteDacPolicy,
    TabularMdp,
    dmfgpc_update,
    pd1_discrete,
    policy_evaluation,
    run_dmfgpc,
)


@pytest.fixture
def two_state_mdp():
    P = np.array([
        [[0.8, 0.2], [0.3, 0.7]],
        [[0.5, 0.5], [0.1, 0.9]],
    ])
    c = np.array([[1.0, 0.2], [0.4, 0.8]])
    return TabularMdp(P, c)


class TestTabularMdp:
    def test_rows_validated(self):
        with pytest.raises(ValueError):
            TabularMdp(np.array([[[0.5, 0.4]]]), np.zeros((1, 1)))

    def test_perturbed_rows_renormalized(self, two_state_mdp):
        def perturb(t, s, a):
            return np.array([0.5, -0.1])

        row = two_state_mdp.transition_row(0, 0, perturb=perturb)
        assert row.min() >= 0
        assert row.sum() == pytest.approx(1.0, abs=1e-12)

    def test_policy_evaluation_against_series(self, two_state_mdp):
        gamma = 0.9
        policy = np.full((2, 2), 0.5)
        V, Q = policy_evaluation(two_state_mdp, policy, gamma)
        # truncated-series oracle: V = sum_k (gamma P_pi)^k c_pi
        c_pi = (policy * two_state_mdp.c).sum(axis=1)
        P_pi = np.einsum("sa,sab->sb", policy, two_state_mdp.P)
        V_ref = np.zeros(2)
        M = np.eye(2)
        for _ in range(600):
            V_ref += M @ c_pi
            M = gamma * P_pi @ M
        assert np.allclose(V, V_ref, atol=1e-8)
        assert np.allclose(Q, two_state_mdp.c + gamma * two_state_mdp.P @ V, atol=1e-12)


class TestDiscretePolicy:
    def test_distribution_valid(self):
        pol = DiscreteDacPolicy(np.array([[0.3, -0.2, 1.0]]), h=2, d_w=2)
        pol.M = 0.3 * np.random.default_rng(0).standard_normal(pol.M.shape)
        p = pol.distribution(0, np.random.default_rng(1).standard_normal((2, 2)))
        assert p.min() >= 0
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_uniform_sampling_frequencies(self):
        pol = DiscreteDacPolicy(np.zeros((1, 4)), h=1, d_w=1)
        rng = np.random.default_rng(2)
        N = 100_000
        counts = np.zeros(4)
        hist = np.zeros((1, 1))
        for _ in range(N):
            a, _, _ = pol.act(0, hist, rng)
            counts[a] += 1
        freq = counts / N
        sd = np.sqrt(0.25 * 0.75 / N)
        assert np.abs(freq - 0.25).max() <= 3 * sd + 1e-12

    def test_score_zero_mean_identity(self):
        rng = np.random.default_rng(3)
        pol = DiscreteDacPolicy(np.array([[0.5, -1.0, 0.2]]), h=2, d_w=2)
        pol.M = 0.4 * rng.standard_normal(pol.M.shape)
        hist = rng.standard_normal((2, 2))
        probs = pol.distribution(0, hist)
        total = np.zeros_like(pol.M)
        from pdcontrol.discrete import _features

        feats = _features(hist)
        for a in range(3):
            eu = np.zeros(3)
            eu[a] = 1.0
            score = np.einsum("a,hf->haf", eu - probs, feats)
            total += probs[a] * score
        assert np.abs(total).max() < 1e-10

    def test_score_matches_finite_difference(self):
        rng = np.random.default_rng(4)
        pol = DiscreteDacPolicy(np.array([[0.2, -0.3]]), h=1, d_w=1)
        pol.M = 0.5 * rng.standard_normal(pol.M.shape)
        hist = np.array([[0.7]])
        a = 1
        probs = pol.distribution(0, hist)
        from pdcontrol.discrete import _features

        score = np.einsum("a,hf->haf", np.eye(2)[a] - probs, _features(hist))
        eps = 1e-6
        for idx in np.ndindex(pol.M.shape):
            Mp, Mm = pol.M.copy(), pol.M.copy()
            Mp[idx] += eps
            Mm[idx] -= eps
            pol_p = DiscreteDacPolicy(pol.base_logits, 1, 1, Mp)
            pol_m = DiscreteDacPolicy(pol.base_logits, 1, 1, Mm)
            fd = (np.log(pol_p.distribution(0, hist)[a]) - np.log(pol_m.distribution(0, hist)[a])) / (2 * eps)
            assert score[idx] == pytest.approx(fd, abs=1e-6)


class TestPd1Discrete:
    def test_zero_residual_gives_zero(self):
        score = np.ones((2, 2, 2))
        what = pd1_discrete(cost=1.0, v_next=1.0, q_sa=1.0 + 0.9 * 1.0, gamma=0.9, score=score, d_w=2)
        assert np.all(what == 0)

    def test_zero_score_gives_zero(self):
        what = pd1_discrete(cost=2.0, v_next=1.0, q_sa=0.5, gamma=0.9, score=np.zeros((1, 2, 2)), d_w=2)
        assert np.all(what == 0)

    def test_unperturbed_mdp_zero_mean(self, two_state_mdp):
        gamma = 0.9
        pol = DiscreteDacPolicy(np.zeros((2, 2)), h=2, d_w=2)
        probs = np.full((2, 2), 0.5)
        V, Q = policy_evaluation(two_state_mdp, probs, gamma)
        rng = np.random.default_rng(5)
        N = 100_000
        acc = np.zeros(2)
        acc2 = np.zeros(2)
        hist = np.zeros((2, 2))
        s = 0
        for _ in range(N):
            a, _, score = pol.act(s, hist, rng)
            s_next = two_state_mdp.step(s, a, rng)
            what = pd1_discrete(two_state_mdp.c[s, a], V[s_next], Q[s, a], gamma, score, 2)
            acc += what
            acc2 += what * what
            s = s_next
        mean = acc / N
        stderr = np.sqrt(np.maximum(acc2 / N - mean**2, 0) / N)
        assert np.all(np.abs(mean) <= 3 * stderr + 1e-12)


class TestDmfgpcUpdate:
    def test_zero_cost_unchanged(self):
        M = np.ones((2, 2, 3))
        out = dmfgpc_update(M, 0.0, [np.ones_like(M)] * 2, eta=0.1)
        assert np.array_equal(out, M)

    def test_hand_trace_two_state(self, two_state_mdp):
        # one update step: M' = M - eta * c * (score_t + score_{t-1})
        M = np.zeros((1, 2, 3))
        s_t = np.arange(6, dtype=float).reshape(1, 2, 3)
        s_tm1 = -np.ones((1, 2, 3))
        out = dmfgpc_update(M, 2.0, [s_t, s_tm1], eta=0.1)
        assert np.allclose(out, -0.1 * 2.0 * (s_t + s_tm1))

    def test_projection_radius(self):
        M = np.zeros((1, 1, 2))
        big = np.full((1, 1, 2), 100.0)
        out = dmfgpc_update(M, 1.0, [big], eta=1.0, radius=1.0)
        assert np.linalg.norm(out) == pytest.approx(1.0)

    def test_flipping_bandit_beats_frozen_base(self):
        P = np.ones((1, 2, 1))
        mdp = TabularMdp(P, np.full((1, 2), 0.5))
        K = 50

        def flip_cost(t, s, a):
            return 0.0 if a == (t // K) % 2 else 1.0

        T, gamma, eta = 20_000, 0.9, 0.05
        learned, frozen = [], []
        for seed in range(5):
            pol = DiscreteDacPolicy(np.zeros((1, 2)), h=4, d_w=2)
            costs, _ = run_dmfgpc(mdp, pol, T, eta, gamma, seed=seed,
                                  cost_override=flip_cost, radius=5.0)
            learned.append(costs.mean())
            base = DiscreteDacPolicy(np.zeros((1, 2)), h=4, d_w=2)
            b_costs, _ = run_dmfgpc(mdp, base, T, eta, gamma, seed=seed,
                                    cost_override=flip_cost, learn=False)
            frozen.append(b_costs.mean())
        assert np.mean(learned) <= np.mean(frozen)

    def test_determinism_given_seed(self):
        P = np.ones((1, 2, 1))
        mdp = TabularMdp(P, np.full((1, 2), 0.5))
        pol1 = DiscreteDacPolicy(np.zeros((1, 2)), h=2, d_w=2)
        c1, _ = run_dmfgpc(mdp, pol1, 500, 0.05, 0.9, seed=7)
        pol2 = DiscreteDacPolicy(np.zeros((1, 2)), h=2, d_w=2)
        c2, _ = run_dmfgpc(mdp, pol2, 500, 0.05, 0.9, seed=7)
        assert np.array_equal(c1, c2)
        assert np.array_equal(pol1.M, pol2.M)


class TestDiscreteInterfaces:
    def test_mdp_config_round_trip(self, two_state_mdp):
        from pdcontrol.config import dumps_toml, loads_toml

        doc = {"mdp": two_state_mdp.to_dict()}
        again = TabularMdp.from_dict(loads_toml(dumps_toml(doc))["mdp"])
        assert np.array_equal(again.P, two_state_mdp.P)
        assert np.array_equal(again.c, two_state_mdp.c)

    def test_results_csv_schema(self, tmp_path):
        from pdcontrol.discrete import write_discrete_results

        runs = [(0, np.array([1.0, 0.5]), np.array([1.0, 1.0]))]
        out = write_discrete_results(runs, str(tmp_path))
        with open(out) as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "seed,t,cost,cum_cost,oracle_cum_cost,regret"
        assert lines[2] == "0,1,0.5,1.5,2.0,-0.5"
