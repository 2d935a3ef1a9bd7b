"""Greedy re-ranking baselines: relevance/novelty trade-offs and references.

All four rankers are pure functions from a query's documents to a
permutation.  ``mmr_rank`` trades cosine relevance against the maximum
similarity to the already-selected set; ``xquad_rank`` trades relevance
against explicit subtopic coverage with already-covered subtopics damped
to zero.  ``random_rank`` and ``oracle_greedy_rank`` bracket them from
below and above as reference policies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .datamodel import QueryDocs


@dataclass(frozen=True)
class GreedyConfig:
    """Trade-off weight for the greedy re-rankers.

    ``lam`` weighs relevance against novelty (for the marginal-relevance
    ranker) or coverage against relevance (for the coverage ranker).
    """

    lam: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")


def _cosine_rows(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Cosine of each row of M against v; zero-norm rows score 0."""
    norms = np.linalg.norm(M, axis=1) * np.linalg.norm(v)
    raw = M @ v
    return np.divide(raw, norms, out=np.zeros_like(raw), where=norms > 0)


def mmr_rank(qd: QueryDocs, config: GreedyConfig) -> metrics.RankedList:
    """Greedy maximal-marginal-relevance order (ties to the lowest index).

    The first pick is pure relevance; afterwards each remaining document
    scores lam * cos(q, d) - (1 - lam) * max over selected d' of cos(d, d').
    """
    n = qd.doc_count
    rel = _cosine_rows(qd.D, qd.q)
    # pairwise document similarities, used as the novelty penalty
    unit = qd.D / np.clip(np.linalg.norm(qd.D, axis=1, keepdims=True), 1e-300, None)
    sim = unit @ unit.T
    order = np.empty(n, dtype=np.int64)
    selected = np.zeros(n, dtype=bool)
    max_sim = np.zeros(n)
    for t in range(n):
        if t == 0:
            scores = rel.copy()
        else:
            scores = config.lam * rel - (1.0 - config.lam) * max_sim
        scores[selected] = -np.inf
        pick = int(np.argmax(scores))
        order[t] = pick
        selected[pick] = True
        max_sim = np.maximum(max_sim, sim[:, pick])
    return metrics.RankedList(order)


def xquad_rank(qd: QueryDocs, config: GreedyConfig) -> metrics.RankedList:
    """Greedy explicit-coverage order (ties to the lowest index).

    Each remaining document scores (1 - lam) * cos(q, d) plus lam times the
    mean over subtopics of J[d, l] * (1 if no selected document covers l
    else 0); selecting a covering document zeroes that subtopic's future
    contribution.
    """
    n = qd.doc_count
    m = qd.subtopic_count
    rel = _cosine_rows(qd.D, qd.q)
    J = qd.J.astype(np.float64)
    uncovered = np.ones(m)
    order = np.empty(n, dtype=np.int64)
    selected = np.zeros(n, dtype=bool)
    for t in range(n):
        coverage = (J @ uncovered) / m
        scores = (1.0 - config.lam) * rel + config.lam * coverage
        scores[selected] = -np.inf
        pick = int(np.argmax(scores))
        order[t] = pick
        selected[pick] = True
        uncovered *= 1.0 - J[pick]
    return metrics.RankedList(order)


def random_rank(qd: QueryDocs, rng: np.random.Generator) -> metrics.RankedList:
    return metrics.RankedList(rng.permutation(qd.doc_count))


def oracle_greedy_rank(qd: QueryDocs, metric_config: metrics.MetricConfig) -> metrics.RankedList:
    """Ceiling reference: the greedy marginal-gain ranking the metric is normalized by."""
    return metrics.greedy_ideal_ranking(qd.J, metric_config)


def evaluate_ranker(
    queries: list[QueryDocs], rank_fn, metric_config: metrics.MetricConfig
) -> dict[str, float]:
    """Mean diversity metrics of ``rank_fn(qd)`` over a query set."""
    if not queries:
        raise ValueError("cannot evaluate on an empty query set")
    sums = {"alpha_ndcg": 0.0, "err_ia": 0.0, "s_recall": 0.0}
    for qd in queries:
        order = rank_fn(qd)
        sums["alpha_ndcg"] += metrics.alpha_ndcg(order, qd.J, metric_config)
        sums["err_ia"] += metrics.err_ia(order, qd.J, metric_config)
        sums["s_recall"] += metrics.s_recall(order, qd.J, metric_config.k)
    return {name: value / len(queries) for name, value in sums.items()}


def tune_lam(
    queries: list[QueryDocs],
    rank_fn,
    metric_config: metrics.MetricConfig,
    grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
) -> float:
    """Grid-search the trade-off weight by mean normalized gain; first best wins.

    ``rank_fn(qd, config)`` must accept a GreedyConfig, so both greedy
    re-rankers can be tuned with the same call.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    best_lam, best_score = None, -np.inf
    for lam in grid:
        config = GreedyConfig(lam=lam)
        score = evaluate_ranker(
            queries, lambda qd: rank_fn(qd, config), metric_config
        )["alpha_ndcg"]
        if score > best_score:
            best_lam, best_score = lam, score
    return best_lam
