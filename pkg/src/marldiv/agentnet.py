"""Per-document scoring network with shared parameters.

Documents attend to each other through multi-head self-attention (no
positional encoding, so the network is permutation equivariant), and each
document's cross feature is concatenated with the query and its own
embedding before a small MLP emits one Q-value per integer ranking score.
All documents are scored in a single forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diffcore as dc


@dataclass(frozen=True)
class AgentNetConfig:
    embed_dim: int
    action_count: int = 30
    heads: int = 4
    attn_dim: int = 64
    hidden: int = 128
    blocks: int = 1

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.action_count < 2:
            raise ValueError(f"action_count must be >= 2, got {self.action_count}")
        if self.heads < 1 or self.attn_dim < 1 or self.hidden < 1 or self.blocks < 1:
            raise ValueError("heads, attn_dim, hidden, and blocks must be >= 1")
        if self.attn_dim % self.heads != 0:
            raise ValueError(
                f"attn_dim {self.attn_dim} must be divisible by heads {self.heads}"
            )

    @property
    def head_dim(self) -> int:
        return self.attn_dim // self.heads


def _glorot(rng, fan_in, fan_out):
    return rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / (fan_in + fan_out))


def init_agent_params(rng: np.random.Generator, config: AgentNetConfig) -> dict[str, dc.Tensor]:
    """Draw fresh parameters; the final layer starts near zero so initial
    Q-values are tiny and early updates can reshape the ranking freely."""
    params: dict[str, dc.Tensor] = {}
    d_k = config.head_dim
    in_dim = config.embed_dim
    for b in range(config.blocks):
        for h in range(config.heads):
            for name in ("wq", "wk", "wv"):
                params[f"agent.block{b}.h{h}.{name}"] = dc.Tensor(_glorot(rng, in_dim, d_k))
        params[f"agent.block{b}.wo"] = dc.Tensor(
            _glorot(rng, config.heads * d_k, config.attn_dim)
        )
        in_dim = config.attn_dim
    feat_dim = 2 * config.embed_dim + config.attn_dim
    params["agent.mlp.w1"] = dc.Tensor(_glorot(rng, feat_dim, config.hidden))
    params["agent.mlp.b1"] = dc.Tensor(np.zeros((1, config.hidden)))
    params["agent.mlp.w2"] = dc.Tensor(_glorot(rng, config.hidden, config.hidden))
    params["agent.mlp.b2"] = dc.Tensor(np.zeros((1, config.hidden)))
    params["agent.mlp.w3"] = dc.Tensor(
        rng.standard_normal((config.hidden, config.action_count)) * 1e-3
    )
    params["agent.mlp.b3"] = dc.Tensor(np.zeros((1, config.action_count)))
    return params


def _check_inputs(config: AgentNetConfig, q: np.ndarray, D: np.ndarray):
    if q.ndim != 1 or q.shape[0] != config.embed_dim:
        raise ValueError(f"query must have shape ({config.embed_dim},), got {q.shape}")
    if D.ndim != 2 or D.shape[1] != config.embed_dim or D.shape[0] < 1:
        raise ValueError(f"documents must have shape (n, {config.embed_dim}), got {D.shape}")


def agent_q_values(
    params: dict[str, dc.Tensor], config: AgentNetConfig, q: np.ndarray, D: np.ndarray
) -> dc.Tensor:
    """Q-values for every document and every integer score, shape (n, |A|)."""
    q = np.asarray(q, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    _check_inputs(config, q, D)
    n = D.shape[0]
    inv_sqrt_dk = 1.0 / np.sqrt(config.head_dim)

    x = dc.Tensor(D)
    for b in range(config.blocks):
        head_outputs = []
        for h in range(config.heads):
            qh = dc.matmul(x, params[f"agent.block{b}.h{h}.wq"])
            kh = dc.matmul(x, params[f"agent.block{b}.h{h}.wk"])
            vh = dc.matmul(x, params[f"agent.block{b}.h{h}.wv"])
            att = dc.softmax_rows(dc.scale(dc.matmul(qh, dc.transpose(kh)), inv_sqrt_dk))
            head_outputs.append(dc.matmul(att, vh))
        x = dc.matmul(dc.concat(head_outputs, axis=1), params[f"agent.block{b}.wo"])

    features = dc.concat([dc.Tensor(np.tile(q, (n, 1))), dc.Tensor(D), x], axis=1)
    h1 = dc.relu(dc.add(dc.matmul(features, params["agent.mlp.w1"]), params["agent.mlp.b1"]))
    h2 = dc.relu(dc.add(dc.matmul(h1, params["agent.mlp.w2"]), params["agent.mlp.b2"]))
    return dc.add(dc.matmul(h2, params["agent.mlp.w3"]), params["agent.mlp.b3"])


@dataclass(frozen=True)
class ExplorationSchedule:
    """Linear epsilon decay: max(floor, start * (1 - t / horizon))."""

    start: float = 1.0
    floor: float = 0.05
    horizon: int = 10000

    def __post_init__(self):
        if not 0.0 <= self.floor <= self.start <= 1.0:
            raise ValueError(
                f"need 0 <= floor <= start <= 1, got floor={self.floor} start={self.start}"
            )
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")

    def value(self, t: int) -> float:
        return max(self.floor, self.start * (1.0 - t / self.horizon))


def greedy_actions(
    params: dict[str, dc.Tensor], config: AgentNetConfig, q: np.ndarray, D: np.ndarray
) -> np.ndarray:
    """Argmax actions as 1-based integer scores; ties take the lowest score."""
    with dc.no_grad():
        qvals = agent_q_values(params, config, q, D).data
    return np.argmax(qvals, axis=1).astype(np.int64) + 1


def select_actions(
    params: dict[str, dc.Tensor],
    config: AgentNetConfig,
    q: np.ndarray,
    D: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Epsilon-greedy actions: each agent independently explores uniformly."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    greedy = greedy_actions(params, config, q, D)
    n = greedy.shape[0]
    explore = rng.random(n) < epsilon
    random_actions = rng.integers(1, config.action_count + 1, size=n, dtype=np.int64)
    return np.where(explore, random_actions, greedy)
