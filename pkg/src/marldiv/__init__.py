"""Multi-agent reinforcement learning for search result diversification.

One agent per candidate document scores its document in a single step;
sorting the scores yields the ranking, the ranking's alpha-nDCG is the
shared team reward, and a monotonic mixing network decomposes that reward
into per-agent utilities for training.  Classical greedy diversifiers and
a sequential policy-gradient ranker are included as baselines.
"""

__version__ = "0.1.0"

from . import agentnet, baselines, datamodel, diffcore, metrics, mixer, ranker, trainer

__all__ = [
    "agentnet",
    "baselines",
    "datamodel",
    "diffcore",
    "metrics",
    "mixer",
    "ranker",
    "trainer",
    "__version__",
]
