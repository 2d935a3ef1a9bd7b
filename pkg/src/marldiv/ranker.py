"""From per-document integer scores to a ranked list and its reward.

A score of m means "place me at quality level m"; documents are sorted by
score descending, with ties broken by document index ascending so equal
scores always produce the same ranking.
"""

from __future__ import annotations

import numpy as np

from . import agentnet, metrics
from .datamodel import QueryDocs


def rank_by_scores(scores) -> np.ndarray:
    """Permutation of document indices, highest score first, ties by index."""
    scores = np.asarray(scores)
    if scores.ndim != 1 or scores.shape[0] < 1:
        raise ValueError(f"scores must be a non-empty 1-D array, got shape {scores.shape}")
    if not np.issubdtype(scores.dtype, np.integer):
        raise ValueError(f"scores must be integers, got dtype {scores.dtype}")
    n = scores.shape[0]
    return np.lexsort((np.arange(n), -scores.astype(np.int64)))


def ranking_reward(order: np.ndarray, J: np.ndarray, metric_config: metrics.MetricConfig) -> float:
    """Shared team reward for a ranking: its normalized diversity gain."""
    return metrics.alpha_ndcg(order, J, metric_config)


def play_episode(
    params,
    net_config: agentnet.AgentNetConfig,
    qd: QueryDocs,
    metric_config: metrics.MetricConfig,
    epsilon: float,
    rng: np.random.Generator,
):
    """One single-step episode: score all documents, rank, collect the reward.

    Returns (actions, order, reward).
    """
    actions = agentnet.select_actions(params, net_config, qd.q, qd.D, epsilon, rng)
    order = rank_by_scores(actions)
    reward = ranking_reward(order, qd.J, metric_config)
    return actions, order, reward


def evaluate_policy(
    params,
    net_config: agentnet.AgentNetConfig,
    queries: list[QueryDocs],
    metric_config: metrics.MetricConfig,
) -> dict[str, float]:
    """Greedy-policy (epsilon = 0) metric means over a query set."""
    if not queries:
        raise ValueError("cannot evaluate on an empty query set")
    sums = {"alpha_ndcg": 0.0, "err_ia": 0.0, "s_recall": 0.0}
    for qd in queries:
        actions = agentnet.greedy_actions(params, net_config, qd.q, qd.D)
        order = rank_by_scores(actions)
        sums["alpha_ndcg"] += metrics.alpha_ndcg(order, qd.J, metric_config)
        sums["err_ia"] += metrics.err_ia(order, qd.J, metric_config)
        sums["s_recall"] += metrics.s_recall(order, qd.J, metric_config.k)
    return {name: value / len(queries) for name, value in sums.items()}
