"""Definition-literal metric evaluators.

Each function evaluates its metric directly from the closed-form
definition, recomputing the strictly-prior coverage count for every
(position, subtopic) pair from scratch.  Deliberately slow and
deliberately independent of the streaming kernels: these are the test
oracles the fast path is checked against, so they must never share code
with it.
"""

import math


def alpha_dcg_direct(order, J, alpha, k):
    total = 0.0
    for pos in range(k):
        doc = order[pos]
        rank = pos + 1
        for l in range(J.shape[1]):
            if J[doc, l] == 0:
                continue
            # coverage of subtopic l at ranks strictly above this one
            c = sum(int(J[order[p], l]) for p in range(pos))
            total += (1.0 - alpha) ** c / math.log2(1 + rank)
    return total


def err_ia_direct(order, J, k):
    m = J.shape[1]
    total = 0.0
    for pos in range(k):
        doc = order[pos]
        rank = pos + 1
        for l in range(m):
            if J[doc, l] == 0:
                continue
            c = sum(int(J[order[p], l]) for p in range(pos))
            total += (1.0 / rank) * (1.0 / m) / 2.0 ** (c + 1)
    return total


def s_recall_direct(order, J, k):
    n, m = J.shape
    recallable = {l for l in range(m) for i in range(n) if J[i, l] != 0}
    if not recallable:
        return 0.0
    covered = {l for l in range(m) for pos in range(k) if J[order[pos], l] != 0}
    return len(covered) / len(recallable)
