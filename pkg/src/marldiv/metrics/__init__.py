"""Diversity metrics for subtopic-judged rankings.

Implements alpha-nDCG, intent-aware ERR, and subtopic recall over a
binary judgment matrix ``J`` (rows = documents, columns = subtopics).
The novelty exponent counts how often a subtopic was covered at ranks
strictly above the current one, so novel coverage at rank 1 is never
discounted.

The normalizer for alpha-nDCG is the greedy marginal-gain ideal ranking
(the exact ideal is NP-hard); ``brute_force_best`` enumerates all
permutations for small n and serves as the exactness oracle.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .backend import BACKEND, backend_name, kernels

__all__ = [
    "MetricConfig",
    "RankedList",
    "alpha_dcg",
    "ideal_alpha_dcg",
    "alpha_ndcg",
    "err_ia",
    "s_recall",
    "greedy_ideal_ranking",
    "brute_force_best",
    "backend_name",
    "BACKEND",
]

logger = logging.getLogger(__name__)

_BRUTE_FORCE_MAX_N = 8

# training loops hit the same degenerate instances thousands of times, so
# each warning kind fires once per process and drops to debug afterwards
_warned: set[str] = set()


def _warn_once(key: str, msg: str, *args):
    if key in _warned:
        logger.debug(msg, *args)
        return
    _warned.add(key)
    logger.warning(msg + " (further occurrences logged at debug level)", *args)


@dataclass(frozen=True)
class MetricConfig:
    """Novelty parameter and rank cutoff shared by all diversity metrics."""

    k: int = 10
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k < 1:
            raise ValueError(f"cutoff k must be >= 1, got {self.k}")


class RankedList:
    """A permutation of document indices 0..n-1, best document first."""

    __slots__ = ("order",)

    def __init__(self, order):
        order = np.asarray(order, dtype=np.int64)
        if order.ndim != 1:
            raise ValueError(f"ranking must be 1-D, got shape {order.shape}")
        n = order.shape[0]
        seen = np.zeros(n, dtype=np.bool_)
        for idx in order:
            if idx < 0 or idx >= n or seen[idx]:
                raise ValueError(f"not a permutation of 0..{n - 1}: {order.tolist()}")
            seen[idx] = True
        self.order = order

    def __len__(self):
        return self.order.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RankedList):
            return NotImplemented
        return np.array_equal(self.order, other.order)

    def __repr__(self):
        return f"RankedList({self.order.tolist()})"


def _as_judgments(J) -> np.ndarray:
    J = np.asarray(J)
    if J.ndim != 2 or J.shape[0] < 1 or J.shape[1] < 1:
        raise ValueError(f"judgment matrix must be n x m with n,m >= 1, got shape {J.shape}")
    if not np.isin(J, (0, 1)).all():
        raise ValueError("judgment matrix must be binary (entries 0 or 1)")
    return np.ascontiguousarray(J, dtype=np.int8)


def _as_order(ranking, n: int) -> np.ndarray:
    if isinstance(ranking, RankedList):
        order = ranking.order
    else:
        order = RankedList(ranking).order
    if order.shape[0] != n:
        raise ValueError(
            f"ranking length {order.shape[0]} does not match document count {n}"
        )
    return order


def _check_cutoff(k: int, n: int):
    if k > n:
        raise ValueError(f"cutoff k={k} exceeds document count n={n}")


def alpha_dcg(ranking, J, config: MetricConfig) -> float:
    """Alpha-discounted cumulative gain of ``ranking`` truncated at config.k."""
    J = _as_judgments(J)
    order = _as_order(ranking, J.shape[0])
    _check_cutoff(config.k, J.shape[0])
    return float(kernels.alpha_dcg_at_k(order, J, config.alpha, config.k))


def greedy_ideal_ranking(J, config: MetricConfig) -> RankedList:
    """Ideal ranking built by repeatedly taking the largest marginal gain."""
    J = _as_judgments(J)
    _check_cutoff(config.k, J.shape[0])
    return RankedList(kernels.greedy_ideal_order(J, config.alpha))


def ideal_alpha_dcg(J, config: MetricConfig, exhaustive: bool = False) -> float:
    """Alpha-DCG of the ideal ranking.

    The default ideal is the greedy construction.  With ``exhaustive=True``
    (debug mode, n <= 8) the true maximum over all permutations is returned
    instead.
    """
    J = _as_judgments(J)
    _check_cutoff(config.k, J.shape[0])
    if exhaustive:
        _, best = brute_force_best(J, config, metric="alpha_dcg")
        return best
    order = kernels.greedy_ideal_order(J, config.alpha)
    return float(kernels.alpha_dcg_at_k(order, J, config.alpha, config.k))


def alpha_ndcg(ranking, J, config: MetricConfig) -> float:
    """Normalized alpha-DCG in [0, 1].

    Queries with an all-zero judgment matrix are degenerate and score 0.
    """
    J = _as_judgments(J)
    order = _as_order(ranking, J.shape[0])
    _check_cutoff(config.k, J.shape[0])
    ideal = ideal_alpha_dcg(J, config)
    if ideal == 0.0:
        _warn_once("degenerate", "degenerate query: judgment matrix is all zeros, alpha-nDCG := 0")
        return 0.0
    value = float(kernels.alpha_dcg_at_k(order, J, config.alpha, config.k)) / ideal
    if value > 1.0:
        # only possible when the greedy ideal is suboptimal for this instance
        _warn_once("clamp", "alpha-nDCG %.17g exceeds 1; greedy ideal is suboptimal here", value)
        return 1.0
    return value


def err_ia(ranking, J, config: MetricConfig) -> float:
    """Intent-aware expected reciprocal rank with uniform intent weights."""
    J = _as_judgments(J)
    order = _as_order(ranking, J.shape[0])
    _check_cutoff(config.k, J.shape[0])
    return float(kernels.err_ia_at_k(order, J, config.k))


def s_recall(ranking, J, k: int) -> float:
    """Fraction of recallable subtopics covered in the top k positions."""
    J = _as_judgments(J)
    order = _as_order(ranking, J.shape[0])
    if k < 1:
        raise ValueError(f"cutoff k must be >= 1, got {k}")
    _check_cutoff(k, J.shape[0])
    value = float(kernels.s_recall_at_k(order, J, k))
    if value < 0.0:
        _warn_once("degenerate", "degenerate query: no document covers any subtopic, S-recall := 0")
        return 0.0
    return value


def brute_force_best(J, config: MetricConfig, metric: str = "alpha_ndcg"):
    """Exact metric maximizer by enumerating all n! permutations.

    Ties resolve to the lexicographically smallest permutation (enumeration
    order is lexicographic and only strict improvements replace the best).
    Rejected for n > 8.
    """
    J = _as_judgments(J)
    n = J.shape[0]
    if n > _BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force enumeration limited to n <= {_BRUTE_FORCE_MAX_N}, got n={n}")
    _check_cutoff(config.k, n)

    if metric in ("alpha_dcg", "alpha_ndcg"):
        def value_of(order):
            return float(kernels.alpha_dcg_at_k(order, J, config.alpha, config.k))
    elif metric == "err_ia":
        def value_of(order):
            return float(kernels.err_ia_at_k(order, J, config.k))
    elif metric == "s_recall":
        def value_of(order):
            return max(float(kernels.s_recall_at_k(order, J, config.k)), 0.0)
    else:
        raise ValueError(f"unknown metric {metric!r}")

    best_order = None
    best_value = -np.inf
    for perm in itertools.permutations(range(n)):
        order = np.asarray(perm, dtype=np.int64)
        value = value_of(order)
        if value > best_value:
            best_value = value
            best_order = order

    if metric == "alpha_ndcg":
        # the normalizer is shared by every permutation, so divide once
        ideal = ideal_alpha_dcg(J, config)
        best_value = min(best_value / ideal, 1.0) if ideal > 0.0 else 0.0
    return RankedList(best_order), float(best_value)
