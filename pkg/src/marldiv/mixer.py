"""Monotonic value mixing with state-conditioned weights.

Per-document Q-values are combined into a team value through one hidden
layer whose weights come from hypernetworks reading the state (query plus
all document embeddings).  Both weight matrices pass through ``abs``, so
the team value is non-decreasing in every per-document Q-value and the
joint argmax factorizes into per-document argmaxes.  Biases stay
unconstrained.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import diffcore as dc
from .datamodel import QueryDocs


@dataclass(frozen=True)
class MixerConfig:
    embed_dim: int
    doc_count: int
    mix_hidden: int = 32

    def __post_init__(self):
        if self.embed_dim < 1 or self.doc_count < 1 or self.mix_hidden < 1:
            raise ValueError("embed_dim, doc_count, and mix_hidden must be >= 1")

    @property
    def state_dim(self) -> int:
        return (self.doc_count + 1) * self.embed_dim


def _glorot(rng, fan_in, fan_out):
    return rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / (fan_in + fan_out))


def init_mixer_params(rng: np.random.Generator, config: MixerConfig) -> dict[str, dc.Tensor]:
    """The mixing weights start as a positive near-uniform sum (d team / d Q_i
    close to 1) so per-document values receive gradient from the first update;
    the hypernetworks start small and learn to modulate with the state.  A
    zero start would let the unconstrained bias path absorb the whole reward
    fit while the document values never train."""
    s, h, n = config.state_dim, config.mix_hidden, config.doc_count
    return {
        "mixer.hyp_w1.w": dc.Tensor(_glorot(rng, s, h * n) * 0.1),
        "mixer.hyp_w1.b": dc.Tensor(np.full((1, h * n), 1.0 / h)),
        "mixer.hyp_b1.w": dc.Tensor(_glorot(rng, s, h) * 0.1),
        "mixer.hyp_b1.b": dc.Tensor(np.zeros((1, h))),
        "mixer.hyp_w2.w": dc.Tensor(_glorot(rng, s, h) * 0.1),
        "mixer.hyp_w2.b": dc.Tensor(np.ones((1, h))),
        "mixer.hyp_b2.w": dc.Tensor(_glorot(rng, s, 1) * 0.1),
        "mixer.hyp_b2.b": dc.Tensor(np.zeros((1, 1))),
    }


def build_state(qd: QueryDocs) -> np.ndarray:
    """Flat state vector [query; doc_1; ...; doc_n], shape (1, (n+1)*L)."""
    return np.concatenate([qd.q, qd.D.ravel()])[None, :]


def _affine(state: dc.Tensor, params, name: str) -> dc.Tensor:
    return dc.add(dc.matmul(state, params[f"{name}.w"]), params[f"{name}.b"])


def mix(
    params: dict[str, dc.Tensor],
    config: MixerConfig,
    state: np.ndarray,
    q_agents: dc.Tensor,
    constrain: bool = True,
) -> dc.Tensor:
    """Team value from per-document Q-values, shape (1, 1).

    ``constrain=False`` skips the abs on the mixing weights; it exists only
    as a negative control for the monotonicity check.
    """
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (1, config.state_dim):
        raise ValueError(f"state must have shape (1, {config.state_dim}), got {state.shape}")
    if q_agents.data.shape != (1, config.doc_count):
        raise ValueError(
            f"q_agents must have shape (1, {config.doc_count}), got {q_agents.data.shape}"
        )
    s = dc.Tensor(state)
    w1 = _affine(s, params, "mixer.hyp_w1")
    w2 = _affine(s, params, "mixer.hyp_w2")
    if constrain:
        w1 = dc.abs_(w1)
        w2 = dc.abs_(w2)
    w1 = dc.reshape(w1, (config.doc_count, config.mix_hidden))
    w2 = dc.reshape(w2, (config.mix_hidden, 1))
    b1 = _affine(s, params, "mixer.hyp_b1")
    b2 = _affine(s, params, "mixer.hyp_b2")
    hidden = dc.elu(dc.add(dc.matmul(q_agents, w1), b1))
    return dc.add(dc.matmul(hidden, w2), b2)


def monotonicity_check(
    params: dict[str, dc.Tensor],
    config: MixerConfig,
    draws: int,
    rng: np.random.Generator,
    constrain: bool = True,
) -> float:
    """Smallest d(team value)/d(per-document Q) over random states and Q-values.

    Non-negative (up to float noise) when ``constrain`` is on; the
    unconstrained variant serves as the negative control.
    """
    worst = np.inf
    for _ in range(draws):
        state = rng.standard_normal((1, config.state_dim))
        q_agents = dc.Tensor(rng.standard_normal((1, config.doc_count)))
        out = mix(params, config, state, q_agents, constrain=constrain)
        dc.backward(out)
        worst = min(worst, float(q_agents.grad.min()))
    return worst


def joint_argmax_matches_greedy(
    params: dict[str, dc.Tensor],
    config: MixerConfig,
    state: np.ndarray,
    qvals: np.ndarray,
) -> bool:
    """Exhaustively verify that the best joint action is the per-document argmax.

    ``qvals`` is the (n, |A|) per-document Q-table.  Enumeration is capped
    at n <= 4 and |A| <= 6.
    """
    qvals = np.asarray(qvals, dtype=np.float64)
    n, n_actions = qvals.shape
    if n != config.doc_count:
        raise ValueError(f"qvals rows {n} != doc_count {config.doc_count}")
    if n > 4 or n_actions > 6:
        raise ValueError(f"exhaustive check capped at n <= 4, |A| <= 6, got {n} x {n_actions}")

    greedy = tuple(int(a) for a in np.argmax(qvals, axis=1))
    best_combo = None
    best_value = -np.inf
    with dc.no_grad():
        for combo in itertools.product(range(n_actions), repeat=n):
            chosen = qvals[np.arange(n), combo][None, :]
            value = mix(params, config, state, dc.Tensor(chosen)).data.item()
            if value > best_value:
                best_value = value
                best_combo = combo
    return best_combo == greedy
