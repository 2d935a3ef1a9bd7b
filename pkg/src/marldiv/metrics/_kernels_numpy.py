"""Pure-numpy metric kernels.

Fallback backend used when numba is unavailable or when the
``MARLDIV_BACKEND=numpy`` environment flag forces it.  Signatures are
identical to :mod:`marldiv.metrics._kernels_numba`; all kernels assume
pre-validated inputs (``order`` an int64 permutation, ``J`` an int8
binary matrix, ``1 <= k <= n``).
"""

import numpy as np


def alpha_dcg_at_k(order, J, alpha, k):
    """Streaming alpha-DCG: novelty exponent counts strictly-prior coverage."""
    m = J.shape[1]
    counts = np.zeros(m, dtype=np.float64)
    total = 0.0
    for pos in range(k):
        row = J[order[pos]].astype(np.float64)
        total += float(row @ (1.0 - alpha) ** counts) / np.log2(pos + 2.0)
        counts += row
    return total


def err_ia_at_k(order, J, k):
    """Streaming intent-aware ERR with uniform intent weights 1/m."""
    m = J.shape[1]
    counts = np.zeros(m, dtype=np.float64)
    total = 0.0
    for pos in range(k):
        row = J[order[pos]].astype(np.float64)
        total += float(row @ (0.5 ** (counts + 1.0))) / (m * (pos + 1.0))
        counts += row
    return total


def s_recall_at_k(order, J, k):
    """Subtopic recall at k.  Returns -1.0 when no document covers anything."""
    recallable = int(np.count_nonzero(J.sum(axis=0)))
    if recallable == 0:
        return -1.0
    covered = int(np.count_nonzero(J[order[:k]].sum(axis=0)))
    return covered / recallable


def greedy_ideal_order(J, alpha):
    """Greedy marginal-gain ordering; ties go to the lowest document index."""
    n = J.shape[0]
    Jf = J.astype(np.float64)
    counts = np.zeros(J.shape[1], dtype=np.float64)
    taken = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    for pos in range(n):
        gains = Jf @ (1.0 - alpha) ** counts
        gains[taken] = -1.0
        pick = int(np.argmax(gains))
        order[pos] = pick
        taken[pick] = True
        counts += Jf[pick]
    return order
