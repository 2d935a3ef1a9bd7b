"""Scoring network tests: shapes, permutation equivariance, exploration,
and finite-difference gradients through the full forward pass."""

import numpy as np
import pytest

from marldiv import diffcore as dc
from marldiv.agentnet import (
    AgentNetConfig,
    ExplorationSchedule,
    agent_q_values,
    greedy_actions,
    init_agent_params,
    select_actions,
)


def tiny_setup(seed=0, n=5, embed_dim=4, action_count=3):
    rng = np.random.default_rng(seed)
    cfg = AgentNetConfig(embed_dim=embed_dim, action_count=action_count,
                         heads=2, attn_dim=4, hidden=6, blocks=1)
    params = init_agent_params(rng, cfg)
    q = rng.standard_normal(embed_dim)
    D = rng.standard_normal((n, embed_dim))
    return cfg, params, q, D, rng


class TestForward:
    def test_output_shape(self):
        cfg, params, q, D, _ = tiny_setup(n=7)
        out = agent_q_values(params, cfg, q, D)
        assert out.data.shape == (7, 3)

    def test_two_blocks_supported(self):
        rng = np.random.default_rng(3)
        cfg = AgentNetConfig(embed_dim=4, action_count=3, heads=2, attn_dim=4,
                             hidden=6, blocks=2)
        params = init_agent_params(rng, cfg)
        out = agent_q_values(params, cfg, rng.standard_normal(4), rng.standard_normal((5, 4)))
        assert out.data.shape == (5, 3)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            cfg, params, q, D, _ = tiny_setup(seed=int(rng.integers(1 << 30)), n=6)
            base = agent_q_values(params, cfg, q, D).data
            perm = rng.permutation(6)
            permuted = agent_q_values(params, cfg, q, D[perm]).data
            np.testing.assert_allclose(permuted, base[perm], rtol=0, atol=1e-9)

    def test_single_document(self):
        cfg, params, q, D, _ = tiny_setup(n=1)
        assert agent_q_values(params, cfg, q, D).data.shape == (1, 3)

    def test_rejects_bad_shapes(self):
        cfg, params, q, D, _ = tiny_setup()
        with pytest.raises(ValueError, match="query"):
            agent_q_values(params, cfg, np.zeros(5), D)
        with pytest.raises(ValueError, match="documents"):
            agent_q_values(params, cfg, q, np.zeros((3, 5)))

    def test_config_validation(self):
        with pytest.raises(ValueError, match="divisible"):
            AgentNetConfig(embed_dim=4, action_count=3, heads=3, attn_dim=4)
        with pytest.raises(ValueError, match="action_count"):
            AgentNetConfig(embed_dim=4, action_count=1)


class TestGradients:
    def test_full_forward_matches_finite_differences(self):
        cfg, params, q, D, rng = tiny_setup(seed=5, n=4)
        target = dc.Tensor(rng.uniform(size=(4, 3)))

        def loss():
            return dc.mean_squared_error(agent_q_values(params, cfg, q, D), target)

        worst = dc.finite_difference_check(
            loss, params, max_coords_per_tensor=10, rng=np.random.default_rng(0)
        )
        assert worst < 1e-4, f"finite-difference mismatch: {worst:.3e}"


class TestActionSelection:
    def test_all_equal_qvalues_pick_lowest_score(self):
        cfg, params, q, D, _ = tiny_setup()
        params["agent.mlp.w3"].data[...] = 0.0
        params["agent.mlp.b3"].data[...] = 0.0
        np.testing.assert_array_equal(greedy_actions(params, cfg, q, D), np.ones(5, dtype=np.int64))

    def test_actions_are_one_based(self):
        cfg, params, q, D, rng = tiny_setup()
        actions = select_actions(params, cfg, q, D, 1.0, rng)
        assert actions.min() >= 1 and actions.max() <= cfg.action_count

    def test_epsilon_zero_is_greedy(self):
        cfg, params, q, D, rng = tiny_setup()
        np.testing.assert_array_equal(
            select_actions(params, cfg, q, D, 0.0, rng), greedy_actions(params, cfg, q, D)
        )

    def test_seeded_selection_is_deterministic(self):
        cfg, params, q, D, _ = tiny_setup()
        a = select_actions(params, cfg, q, D, 0.5, np.random.default_rng(9))
        b = select_actions(params, cfg, q, D, 0.5, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_rejects_bad_epsilon(self):
        cfg, params, q, D, rng = tiny_setup()
        with pytest.raises(ValueError, match="epsilon"):
            select_actions(params, cfg, q, D, 1.5, rng)


class TestExplorationSchedule:
    def test_linear_decay_with_floor(self):
        sched = ExplorationSchedule(start=1.0, floor=0.05, horizon=100)
        assert sched.value(0) == 1.0
        assert sched.value(50) == pytest.approx(0.5)
        assert sched.value(100) == 0.05
        assert sched.value(10_000) == 0.05

    def test_validation(self):
        with pytest.raises(ValueError, match="floor"):
            ExplorationSchedule(start=0.1, floor=0.5)
        with pytest.raises(ValueError, match="horizon"):
            ExplorationSchedule(horizon=0)


class TestInit:
    def test_same_seed_same_params(self):
        cfg = AgentNetConfig(embed_dim=4, action_count=3, heads=2, attn_dim=4, hidden=6)
        a = init_agent_params(np.random.default_rng(1), cfg)
        b = init_agent_params(np.random.default_rng(1), cfg)
        assert set(a) == set(b)
        for name in a:
            assert a[name].data.tobytes() == b[name].data.tobytes()

    def test_final_layer_starts_small(self):
        cfg = AgentNetConfig(embed_dim=4, action_count=3, heads=2, attn_dim=4, hidden=6)
        params = init_agent_params(np.random.default_rng(1), cfg)
        assert np.abs(params["agent.mlp.w3"].data).max() < 0.01
        assert np.all(params["agent.mlp.b3"].data == 0.0)
