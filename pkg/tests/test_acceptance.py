"""Acceptance gate: ten verdicts that the package must hold simultaneously.

Covered: streaming metrics against definition-literal oracles, hand-computed
metric values, finite-difference gradient integrity of every autodiff op and
of the full mixed TD loss, monotonicity of the value decomposition, agreement
of the joint action maximum with per-document argmaxes, permutation
equivariance of the one-shot scorer, learning speed at desk scale, data
efficiency against the sequential baseline, one-step reward semantics, and
bit-exact reproducibility of every artifact.

Each test prints one verdict line; conftest echoes them after the summary.
"""

import itertools
import json
import time

import numpy as np
import pytest

import conftest
from marldiv import baselines, cli, metrics
from marldiv import diffcore as dc
from marldiv.agentnet import (
    AgentNetConfig,
    ExplorationSchedule,
    agent_q_values,
    greedy_actions,
    init_agent_params,
)
from marldiv.datamodel import GeneratorConfig, QueryDocs, generate_dataset, load_dataset
from marldiv.metrics import reference
from marldiv.mixer import (
    MixerConfig,
    build_state,
    init_mixer_params,
    joint_argmax_matches_greedy,
    mix,
)
from marldiv.ranker import rank_by_scores, ranking_reward
from marldiv.trainer import (
    Episode,
    ReinforceConfig,
    ReplayBuffer,
    TrainerConfig,
    episodes_to_threshold,
    reinforce_train,
    rollout_epoch,
    td_loss,
    train,
)


def verdict(name: str, ok: bool, detail: str):
    line = f"[{name}] {'PASS' if ok else 'FAIL'} - {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def greedy_ideal_direct(J: np.ndarray, alpha: float) -> list[int]:
    """Definition-literal greedy ideal: best marginal gain, ties to low index."""
    remaining = list(range(J.shape[0]))
    chosen: list[int] = []
    while remaining:
        best = max(
            remaining,
            key=lambda d: (
                reference.alpha_dcg_direct(chosen + [d], J, alpha, len(chosen) + 1),
                -d,
            ),
        )
        chosen.append(best)
        remaining.remove(best)
    return chosen


def alpha_ndcg_direct(order, J, alpha, k, ideal) -> float:
    if ideal == 0.0:
        return 0.0
    return min(1.0, reference.alpha_dcg_direct(order, J, alpha, k) / ideal)


@pytest.fixture(scope="module")
def desk_queries():
    config = GeneratorConfig(
        n_queries=100, docs_per_query=10, subtopics=5, embed_dim=32, signal_strength=0.9
    )
    return generate_dataset(config, seed=7)


@pytest.fixture(scope="module")
def desk_run(desk_queries):
    config = TrainerConfig(action_count=10, seed=0)
    started = time.perf_counter()
    result = train(desk_queries, config)
    return config, result, time.perf_counter() - started


class TestAcceptance:
    def test_01_metric_oracle_equivalence(self):
        rng = np.random.default_rng(11)
        started = time.perf_counter()
        worst = 0.0
        permutations = 0
        for _ in range(200):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 5))
            J = (rng.random((n, m)) < 0.45).astype(np.int8)
            while not J.any():
                J = (rng.random((n, m)) < 0.45).astype(np.int8)
            cfg = metrics.MetricConfig(k=n, alpha=0.5)
            ideal = reference.alpha_dcg_direct(greedy_ideal_direct(J, 0.5), J, 0.5, n)
            for perm in itertools.permutations(range(n)):
                order = np.asarray(perm, dtype=np.int64)
                pairs = (
                    (metrics.alpha_ndcg(order, J, cfg),
                     alpha_ndcg_direct(order, J, 0.5, n, ideal)),
                    (metrics.err_ia(order, J, cfg), reference.err_ia_direct(order, J, n)),
                    (metrics.s_recall(order, J, n), reference.s_recall_direct(order, J, n)),
                )
                for fast, direct in pairs:
                    worst = max(worst, abs(fast - direct))
                permutations += 1
            _, brute = metrics.brute_force_best(J, cfg, metric="alpha_dcg")
            assert brute >= metrics.ideal_alpha_dcg(J, cfg) - 1e-12
        elapsed = time.perf_counter() - started
        verdict(
            "01 metric-oracle-equivalence",
            worst <= 1e-12 and elapsed < 60.0,
            f"200 instances, {permutations} permutations, "
            f"max |streaming - direct| = {worst:.2e}, {elapsed:.1f}s",
        )

    def test_02_metric_hand_values(self):
        J = np.array([[1], [0]], dtype=np.int8)
        cfg = metrics.MetricConfig(k=2, alpha=0.5)
        swapped_ndcg = metrics.alpha_ndcg([1, 0], J, cfg)
        swapped_err = metrics.err_ia([1, 0], J, cfg)
        ideal_ndcg = metrics.alpha_ndcg([0, 1], J, cfg)
        verdict(
            "02 metric-hand-values",
            abs(swapped_ndcg - 0.63093) <= 1e-5
            and swapped_err == 0.25
            and ideal_ndcg == 1.0,
            f"swapped alpha-ndcg {swapped_ndcg:.7f}, err-ia {swapped_err}, "
            f"ideal alpha-ndcg {ideal_ndcg}",
        )

    def test_03_gradient_integrity(self):
        rng = np.random.default_rng(7)

        def leaf(*shape, margin=0.0):
            data = rng.uniform(margin, 1.0, shape) * rng.choice([-1.0, 1.0], shape)
            return dc.Tensor(data)

        def scalarized(out: dc.Tensor) -> dc.Tensor:
            return dc.mean_squared_error(out, dc.Tensor(np.zeros(out.data.shape)))

        def dims():
            return (int(rng.integers(2, 5)), int(rng.integers(2, 5)))

        op_builders = {
            "matmul": lambda: (lambda t: dc.matmul(t["a"], t["b"]),
                               (lambda a, b: {"a": leaf(a, b), "b": leaf(b, a)})(*dims())),
            "add": lambda: (lambda t: dc.add(t["a"], t["b"]),
                            (lambda a, b: {"a": leaf(a, b), "b": leaf(1, b)})(*dims())),
            "mul": lambda: (lambda t: dc.mul(t["a"], t["b"]),
                            (lambda a, b: {"a": leaf(a, b), "b": leaf(a, b)})(*dims())),
            "scale": lambda: (lambda t, c=float(rng.uniform(0.5, 2.0)): dc.scale(t["a"], c),
                              {"a": leaf(*dims())}),
            "relu": lambda: (lambda t: dc.relu(t["a"]), {"a": leaf(*dims(), margin=0.05)}),
            "abs": lambda: (lambda t: dc.abs_(t["a"]), {"a": leaf(*dims(), margin=0.05)}),
            "elu": lambda: (lambda t: dc.elu(t["a"]), {"a": leaf(*dims())}),
            "transpose": lambda: (lambda t: dc.transpose(t["a"]), {"a": leaf(*dims())}),
            "concat": lambda: (lambda t: dc.concat([t["a"], t["b"]], axis=1),
                               (lambda a, b: {"a": leaf(a, b), "b": leaf(a, b + 1)})(*dims())),
            "reshape": lambda: (lambda t: dc.reshape(t["a"], (t["a"].data.size, 1)),
                                {"a": leaf(*dims())}),
            "softmax_rows": lambda: (lambda t: dc.softmax_rows(t["a"]), {"a": leaf(*dims())}),
            "mse": lambda: (lambda t: dc.mean_squared_error(t["a"], t["b"]),
                            (lambda a, b: {"a": leaf(a, b), "b": leaf(a, b)})(*dims())),
        }

        worst_ops = 0.0
        configs = 0
        for name, build in op_builders.items():
            for _ in range(7):
                op, tensors = build()
                err = dc.finite_difference_check(lambda: scalarized(op(tensors)), tensors)
                worst_ops = max(worst_ops, err)
                configs += 1

        L, n, actions = 5, 3, 4
        net_cfg = AgentNetConfig(embed_dim=L, action_count=actions, heads=2, attn_dim=4,
                                 hidden=6, blocks=1)
        mix_cfg = MixerConfig(embed_dim=L, doc_count=n, mix_hidden=5)
        metric_cfg = metrics.MetricConfig(k=n, alpha=0.5)
        worst_loss = 0.0
        for i in range(16):
            agent_params = init_agent_params(rng, net_cfg)
            mixer_params = init_mixer_params(rng, mix_cfg)
            for p in {**agent_params, **mixer_params}.values():
                p.data[:] = rng.normal(0.0, 0.5, p.data.shape)
            batch = []
            for _ in range(2):
                J = (rng.random((n, 2)) < 0.5).astype(np.int8)
                while not J.any():
                    J = (rng.random((n, 2)) < 0.5).astype(np.int8)
                qd = QueryDocs(
                    query_id=f"g{i}", q=rng.normal(0.0, 1.0, L),
                    D=rng.normal(0.0, 1.0, (n, L)), J=J,
                )
                acts = rng.integers(1, actions + 1, n)
                reward = ranking_reward(rank_by_scores(acts), J, metric_cfg)
                batch.append(Episode(qd=qd, actions=acts, reward=reward))
            err = dc.finite_difference_check(
                lambda: td_loss(agent_params, mixer_params, net_cfg, mix_cfg, batch, metric_cfg),
                {**agent_params, **mixer_params},
                max_coords_per_tensor=3,
                rng=rng,
            )
            worst_loss = max(worst_loss, err)
            configs += 1

        worst = max(worst_ops, worst_loss)
        verdict(
            "03 gradient-integrity",
            worst < 1e-4 and configs == 100,
            f"{configs} configurations, worst rel err {worst:.2e} "
            f"(ops {worst_ops:.2e}, full loss {worst_loss:.2e})",
        )

    def test_04_monotonic_decomposition(self):
        rng = np.random.default_rng(44)
        L, n, h = 4, 3, 1e-5
        mix_cfg = MixerConfig(embed_dim=L, doc_count=n, mix_hidden=6)

        def min_fd_derivative(constrain: bool, draws: int) -> float:
            lowest = np.inf
            for _ in range(draws):
                params = init_mixer_params(rng, mix_cfg)
                for p in params.values():
                    p.data[:] = rng.normal(0.0, 1.0, p.data.shape)
                state = rng.normal(0.0, 1.0, (1, mix_cfg.state_dim))
                q = rng.normal(0.0, 1.0, (1, n))
                with dc.no_grad():
                    for i in range(n):
                        up, down = q.copy(), q.copy()
                        up[0, i] += h
                        down[0, i] -= h
                        left = mix(params, mix_cfg, state, dc.Tensor(down), constrain).data
                        right = mix(params, mix_cfg, state, dc.Tensor(up), constrain).data
                        lowest = min(lowest, (right - left).item() / (2.0 * h))
            return lowest

        constrained = min_fd_derivative(constrain=True, draws=1000)
        control = min_fd_derivative(constrain=False, draws=200)
        verdict(
            "04 monotonic-decomposition",
            constrained >= -1e-9 and control < -1e-9,
            f"1000 draws, min dQtot/dQi = {constrained:.2e}; "
            f"unconstrained control reaches {control:.2e}",
        )

    def test_05_joint_argmax_consistency(self):
        rng = np.random.default_rng(55)
        matched = 0
        for _ in range(100):
            n = int(rng.integers(1, 4))
            actions = int(rng.integers(2, 6))
            mix_cfg = MixerConfig(embed_dim=3, doc_count=n, mix_hidden=4)
            params = init_mixer_params(rng, mix_cfg)
            for p in params.values():
                p.data[:] = rng.normal(0.0, 1.0, p.data.shape)
            state = rng.normal(0.0, 1.0, (1, mix_cfg.state_dim))
            qvals = rng.normal(0.0, 1.0, (n, actions))
            matched += joint_argmax_matches_greedy(params, mix_cfg, state, qvals)
        verdict(
            "05 joint-argmax-consistency",
            matched == 100,
            f"{matched}/100 exhaustive joint maxima equal the per-document argmax",
        )

    def test_06_permutation_equivariance(self):
        rng = np.random.default_rng(66)
        L = 6
        worst = 0.0
        checked = 0
        while checked < 100:
            n = int(rng.integers(4, 7))
            actions = int(rng.integers(20, 31))
            net_cfg = AgentNetConfig(embed_dim=L, action_count=actions, heads=2,
                                     attn_dim=6, hidden=12, blocks=1)
            params = init_agent_params(rng, net_cfg)
            for p in params.values():
                p.data[:] = rng.normal(0.0, 1.0, p.data.shape)
            q = rng.normal(0.0, 1.0, L)
            D = rng.normal(0.0, 1.0, (n, L))
            acts = greedy_actions(params, net_cfg, q, D)
            if len(set(acts.tolist())) < n:
                continue  # only score-distinct instances define a unique order
            perm = rng.permutation(n)
            with dc.no_grad():
                Q = agent_q_values(params, net_cfg, q, D).data
                Qp = agent_q_values(params, net_cfg, q, D[perm]).data
            worst = max(worst, float(np.max(np.abs(Qp - Q[perm]))))
            assert np.allclose(Qp, Q[perm], rtol=0.0, atol=1e-9)
            order = rank_by_scores(acts)
            order_perm = rank_by_scores(greedy_actions(params, net_cfg, q, D[perm]))
            assert np.array_equal(perm[order_perm], order)
            checked += 1
        verdict(
            "06 permutation-equivariance",
            worst <= 1e-9,
            f"100 instances, max |Q(pi D) - pi Q(D)| = {worst:.2e}, "
            "rankings carry the same documents in the same order",
        )

    def test_07_learning_at_desk_scale(self, desk_queries, desk_run):
        config, result, elapsed = desk_run
        cfg10 = metrics.MetricConfig(k=10, alpha=0.5)
        oracle = float(np.mean([
            metrics.alpha_ndcg(baselines.oracle_greedy_rank(qd, cfg10), qd.J, cfg10)
            for qd in desk_queries
        ]))
        initial = result.history[0]["train_alpha_ndcg"]
        final = result.history[-1]["train_alpha_ndcg"]
        verdict(
            "07 learning-at-desk-scale",
            result.updates <= 2000
            and final - initial >= 0.05
            and final >= 0.95 * oracle
            and elapsed <= 600.0,
            f"alpha-ndcg@10 {initial:.4f} -> {final:.4f} "
            f"(oracle {oracle:.4f}, bar {0.95 * oracle:.4f}), "
            f"{result.updates} updates, {elapsed:.0f}s",
        )

    def test_08_exploration_efficiency(self, desk_queries):
        cfg10 = metrics.MetricConfig(k=10, alpha=0.5)
        oracle = float(np.mean([
            metrics.alpha_ndcg(baselines.oracle_greedy_rank(qd, cfg10), qd.J, cfg10)
            for qd in desk_queries
        ]))
        bar = 0.90 * oracle
        outcomes = []
        wins = 0
        for seed in range(5):
            one_shot = train(
                desk_queries,
                TrainerConfig(
                    action_count=10, updates_per_epoch=64, eval_every=1,
                    epochs=60, stop_at_train=bar, seed=seed,
                ),
            )
            sequential = reinforce_train(
                desk_queries,
                ReinforceConfig(eval_every=1, epochs=100, stop_at_train=bar, seed=seed),
            )
            ours = episodes_to_threshold(one_shot.history, bar)
            theirs = episodes_to_threshold(sequential.history, bar)
            win = ours is not None and (theirs is None or ours < theirs)
            wins += win
            outcomes.append(f"seed {seed}: {ours} vs {theirs}")
        verdict(
            "08 exploration-efficiency",
            wins >= 4,
            f"episodes to {bar:.2f} (one-shot vs sequential, same lr 1e-5): "
            + "; ".join(outcomes)
            + f" -> {wins}/5 wins",
        )

    def test_09_one_step_reward_semantics(self, desk_queries, desk_run):
        config, result, _ = desk_run
        sampled = result.updates * config.batch_size

        metric_cfg = config.metric_config()
        net_cfg = AgentNetConfig(embed_dim=32, action_count=10, heads=config.heads,
                                 attn_dim=config.attn_dim, hidden=config.hidden,
                                 blocks=config.blocks)
        rng = np.random.default_rng(9)
        params = init_agent_params(rng, net_cfg)
        buffer = ReplayBuffer(capacity=200)
        schedule = ExplorationSchedule(start=0.5, floor=0.05, horizon=100)
        rollout_epoch(desk_queries[:40], params, net_cfg, metric_cfg, schedule, buffer,
                      rng, episodes_done=0)
        exact = all(
            ranking_reward(rank_by_scores(ep.actions), ep.qd.J, metric_cfg) == ep.reward
            for ep in buffer.sample(40, rng)
        )

        mix_cfg = MixerConfig(embed_dim=32, doc_count=10, mix_hidden=config.mix_hidden)
        mixer_params = init_mixer_params(rng, mix_cfg)
        good = buffer.sample(1, rng)[0]
        tampered = Episode(qd=good.qd, actions=good.actions, reward=good.reward + 0.125)
        with pytest.raises(AssertionError, match="stored reward"):
            td_loss(params, mixer_params, net_cfg, mix_cfg, [tampered], metric_cfg)

        verdict(
            "09 one-step-reward-semantics",
            exact and sampled > 0,
            f"{sampled} sampled tuples passed the in-loop target==reward assert; "
            "fresh rollouts recompute bit-exactly; a tampered reward is rejected",
        )

    def test_10_determinism_and_serialization(self, tmp_path):
        def run_once(root):
            root.mkdir()
            argv = [
                "generate", "--out", root / "data", "--seed", 7, "--queries", 16,
                "--docs", 6, "--subtopics", 3, "--embed-dim", 12,
            ]
            assert cli.main([str(a) for a in argv]) == 0
            argv = [
                "train", "--dataset", root / "data" / "dataset.jsonl",
                "--out", root / "run", "--seed", 3, "--epochs", 8,
                "--updates-per-epoch", 2, "--batch-size", 6, "--buffer-capacity", 60,
                "--lr", "1e-3", "--eval-every", 4, "--k", 5, "--action-count", 6,
                "--hidden", 16, "--attn-dim", 8, "--heads", 2, "--mix-hidden", 8,
                "--eps-horizon", 50,
            ]
            assert cli.main([str(a) for a in argv]) == 0
            argv = [
                "evaluate", "--dataset", root / "data" / "dataset.jsonl",
                "--out", root / "eval", "--method", "oracle", "--method", "mmr",
                "--method", "ma4div", "--checkpoint", root / "run" / "checkpoint.ckpt",
            ]
            assert cli.main([str(a) for a in argv]) == 0
            return {
                name: (root / name).read_bytes()
                for name in (
                    "data/dataset.jsonl", "run/history.jsonl", "run/checkpoint.ckpt",
                    "run/curve.csv", "run/final_metrics.jsonl", "eval/metrics.jsonl",
                )
            }

        first = run_once(tmp_path / "a")
        second = run_once(tmp_path / "b")
        identical = [name for name in first if first[name] == second[name]]
        assert sorted(identical) == sorted(first)

        dataset_path = tmp_path / "a" / "data" / "dataset.jsonl"
        queries = load_dataset(dataset_path)
        reloaded = load_dataset(dataset_path)
        for qd, qd2 in zip(queries, reloaded):
            assert np.array_equal(qd.q, qd2.q) and qd.q.dtype == qd2.q.dtype
            assert np.array_equal(qd.D, qd2.D) and np.array_equal(qd.J, qd2.J)

        ckpt_path = tmp_path / "a" / "run" / "checkpoint.ckpt"
        params = dc.load_params(ckpt_path)
        resaved = tmp_path / "roundtrip.ckpt"
        dc.save_params(resaved, params)
        roundtrip = resaved.read_bytes() == ckpt_path.read_bytes()

        verdict(
            "10 determinism-and-serialization",
            len(identical) == len(first) and roundtrip,
            f"two seed-fixed runs byte-identical across {len(first)} artifacts; "
            "dataset and checkpoint round-trip bit-exactly",
        )
