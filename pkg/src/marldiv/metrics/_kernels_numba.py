"""Numba-jitted metric kernels.

Hot path for training rewards and the permutation oracle: the kernels
are called once per episode during training and tens of thousands of
times per instance during brute-force enumeration.  Semantics match
:mod:`marldiv.metrics._kernels_numpy`; both accumulate in float64, so
the backends agree to rounding error.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def alpha_dcg_at_k(order, J, alpha, k):
    m = J.shape[1]
    counts = np.zeros(m, dtype=np.float64)
    total = 0.0
    for pos in range(k):
        doc = order[pos]
        gain = 0.0
        for l in range(m):
            if J[doc, l] != 0:
                gain += (1.0 - alpha) ** counts[l]
        total += gain / np.log2(pos + 2.0)
        for l in range(m):
            counts[l] += J[doc, l]
    return total


@njit(cache=True)
def err_ia_at_k(order, J, k):
    m = J.shape[1]
    counts = np.zeros(m, dtype=np.float64)
    total = 0.0
    for pos in range(k):
        doc = order[pos]
        gain = 0.0
        for l in range(m):
            if J[doc, l] != 0:
                gain += 0.5 ** (counts[l] + 1.0)
        total += gain / (m * (pos + 1.0))
        for l in range(m):
            counts[l] += J[doc, l]
    return total


@njit(cache=True)
def s_recall_at_k(order, J, k):
    n, m = J.shape
    recallable = 0
    covered = 0
    for l in range(m):
        any_doc = False
        any_topk = False
        for i in range(n):
            if J[i, l] != 0:
                any_doc = True
                break
        for pos in range(k):
            if J[order[pos], l] != 0:
                any_topk = True
                break
        if any_doc:
            recallable += 1
            if any_topk:
                covered += 1
    if recallable == 0:
        return -1.0
    return covered / recallable


@njit(cache=True)
def greedy_ideal_order(J, alpha):
    n, m = J.shape
    counts = np.zeros(m, dtype=np.float64)
    taken = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    for pos in range(n):
        best = -1
        best_gain = -1.0
        for i in range(n):
            if taken[i]:
                continue
            gain = 0.0
            for l in range(m):
                if J[i, l] != 0:
                    gain += (1.0 - alpha) ** counts[l]
            if gain > best_gain:
                best_gain = gain
                best = i
        order[pos] = best
        taken[best] = True
        for l in range(m):
            counts[l] += J[best, l]
    return order
