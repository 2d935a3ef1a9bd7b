"""Training loops for the multi-agent ranker and a policy-gradient baseline.

Episodes are single-step: the network scores every document of a query at
once, the scores are sorted into a ranking, and the ranking's normalized
diversity gain is the shared team reward.  Because the episode ends there,
the TD target for the mixed team value is exactly the stored reward (no
bootstrap term and no target network), which the update loop asserts on
every sample by recomputing the reward from the stored joint action.

The baseline ranks the same queries sequentially: one document per step,
a softmax policy over the remaining documents, and REINFORCE on the final
normalized gain.  Both trainers log one JSON object per evaluation epoch
and write bit-stable parameter checkpoints.  Wall-clock timings live in a
separate list so the history itself is bit-reproducible under a fixed seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import diffcore as dc
from . import metrics
from .agentnet import (
    AgentNetConfig,
    ExplorationSchedule,
    agent_q_values,
    init_agent_params,
)
from .datamodel import QueryDocs
from .mixer import MixerConfig, build_state, init_mixer_params, mix
from .ranker import evaluate_policy, play_episode, rank_by_scores, ranking_reward


@dataclass(frozen=True)
class Episode:
    """One stored transition: the query, the joint action, the team reward.

    ``degenerate`` marks queries whose judgment matrix covers no subtopic at
    all; every ranking of such a query earns reward 0 and the tuple is kept
    only so the buffer still grows by one episode per query.
    """

    qd: QueryDocs
    actions: np.ndarray
    reward: float
    degenerate: bool = False


class ReplayBuffer:
    """Fixed-capacity ring buffer; new episodes overwrite the oldest."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._slots: list[Episode] = []
        self._next = 0

    def __len__(self):
        return len(self._slots)

    def push(self, episode: Episode):
        if len(self._slots) < self.capacity:
            self._slots.append(episode)
        else:
            self._slots[self._next] = episode
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Episode]:
        """Uniform sample without replacement; underfull buffers are rejected."""
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if batch_size > len(self._slots):
            raise ValueError(
                f"buffer holds {len(self._slots)} episodes, cannot sample {batch_size}"
            )
        picks = rng.choice(len(self._slots), size=batch_size, replace=False)
        return [self._slots[i] for i in picks]


@dataclass(frozen=True)
class TrainerConfig:
    """Defaults sized for corpora in the style of the synthetic generator."""

    action_count: int = 30
    heads: int = 4
    attn_dim: int = 64
    hidden: int = 256
    blocks: int = 1
    mix_hidden: int = 32
    epochs: int = 250
    updates_per_epoch: int = 8
    batch_size: int = 64
    buffer_capacity: int = 2500
    lr: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    # episodes are single-step, so the discount never enters a target;
    # kept so saved run configs state it explicitly
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_floor: float = 0.05
    eps_horizon: int = 6000
    eval_every: int = 5
    k: int = 10
    alpha: float = 0.5
    seed: int = 0
    # stop once the mean training metric reaches this value at an eval point
    stop_at_train: float | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.updates_per_epoch < 1 or self.batch_size < 1:
            raise ValueError("epochs, updates_per_epoch, and batch_size must be >= 1")
        if self.buffer_capacity < 1:
            raise ValueError(f"buffer_capacity must be >= 1, got {self.buffer_capacity}")
        if self.batch_size > self.buffer_capacity:
            raise ValueError(
                f"batch_size {self.batch_size} exceeds buffer_capacity {self.buffer_capacity}"
            )
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    def metric_config(self) -> metrics.MetricConfig:
        return metrics.MetricConfig(k=self.k, alpha=self.alpha)


@dataclass
class TrainResult:
    params: dict[str, dc.Tensor]
    history: list[dict]
    episodes: int
    updates: int
    # deep copy of the params that scored best on the held-out queries
    # (training queries when no held-out set is given)
    best_params: dict[str, dc.Tensor] = field(default_factory=dict)
    best_epoch: int = 0
    timing: list[dict] = field(default_factory=list)
    wall_clock_s: float = 0.0


class TrainingDiverged(RuntimeError):
    """Raised when a gradient goes non-finite; carries the last finite params."""

    def __init__(self, message: str, params: dict[str, dc.Tensor], updates: int):
        super().__init__(message)
        self.params = params
        self.updates = updates


def _check_dataset(queries: list[QueryDocs]) -> tuple[int, int]:
    if not queries:
        raise ValueError("dataset is empty")
    n = queries[0].doc_count
    L = queries[0].embed_dim
    for qd in queries:
        if qd.doc_count != n or qd.embed_dim != L:
            raise ValueError(
                f"{qd.query_id}: all queries must share doc count and embed dim "
                f"(expected {n} x {L}, got {qd.doc_count} x {qd.embed_dim})"
            )
    return n, L


def _chosen_q_row(qvals: dc.Tensor, actions: np.ndarray, action_count: int) -> dc.Tensor:
    """Extract each agent's Q for its taken action as a (1, n) tensor."""
    n = actions.shape[0]
    mask = np.zeros((n, action_count))
    mask[np.arange(n), actions - 1] = 1.0
    chosen = dc.matmul(dc.mul(qvals, dc.Tensor(mask)), dc.Tensor(np.ones((action_count, 1))))
    return dc.transpose(chosen)


def _snapshot(params: dict[str, dc.Tensor]) -> dict[str, dc.Tensor]:
    return {name: dc.Tensor(tensor.data.copy()) for name, tensor in params.items()}


def rollout_epoch(
    queries: list[QueryDocs],
    params: dict[str, dc.Tensor],
    net_cfg: AgentNetConfig,
    metric_cfg: metrics.MetricConfig,
    schedule: ExplorationSchedule,
    buffer: ReplayBuffer,
    rng: np.random.Generator,
    episodes_done: int,
) -> int:
    """Play one single-step episode per query and push it into the buffer.

    Returns the updated global episode count, which is what drives the
    exploration schedule.  Queries whose judgments cover no subtopic earn
    reward 0 and are flagged degenerate.
    """
    for qd in queries:
        epsilon = schedule.value(episodes_done)
        actions, _, reward = play_episode(params, net_cfg, qd, metric_cfg, epsilon, rng)
        buffer.push(
            Episode(
                qd=qd,
                actions=actions,
                reward=reward,
                degenerate=not bool(qd.J.any()),
            )
        )
        episodes_done += 1
    return episodes_done


def td_loss(
    agent_params: dict[str, dc.Tensor],
    mixer_params: dict[str, dc.Tensor],
    net_cfg: AgentNetConfig,
    mix_cfg: MixerConfig,
    batch: list[Episode],
    metric_cfg: metrics.MetricConfig,
) -> dc.Tensor:
    """Summed squared one-step TD error of a batch, as a differentiable graph.

    Each agent's value is recomputed for its *stored* action under the
    current parameters and mixed into a team value against the stored state.
    """
    predictions = []
    targets = np.empty((len(batch), 1))
    for row, ep in enumerate(batch):
        qvals = agent_q_values(agent_params, net_cfg, ep.qd.q, ep.qd.D)
        q_agents = _chosen_q_row(qvals, ep.actions, net_cfg.action_count)
        predictions.append(mix(mixer_params, mix_cfg, build_state(ep.qd), q_agents))
        # single-step episode: the target IS the episode reward, with no
        # bootstrap term, so recomputing it from the stored joint action
        # must reproduce the stored value bit for bit
        y_tot = ranking_reward(rank_by_scores(ep.actions), ep.qd.J, metric_cfg)
        assert y_tot == ep.reward, (
            f"{ep.qd.query_id}: one-step target must equal the stored reward"
        )
        targets[row, 0] = y_tot
    stacked = dc.concat(predictions, axis=0)
    # scale the mean back up so the loss is the SUM of squared errors
    return dc.scale(dc.mean_squared_error(stacked, dc.Tensor(targets)), len(batch))


def td_update(
    agent_params: dict[str, dc.Tensor],
    mixer_params: dict[str, dc.Tensor],
    net_cfg: AgentNetConfig,
    mix_cfg: MixerConfig,
    buffer: ReplayBuffer,
    batch_size: int,
    optimizer,
    rng: np.random.Generator,
    metric_cfg: metrics.MetricConfig,
) -> float:
    """One gradient step on the TD error of a freshly sampled batch.

    Samples ``batch_size`` episodes without replacement (an underfull buffer
    is rejected) and steps all parameter groups from the one loss.  Returns
    the loss value; raises DivergenceError when it goes non-finite.
    """
    batch = buffer.sample(batch_size, rng)
    optimizer.zero_grad()
    loss = td_loss(agent_params, mixer_params, net_cfg, mix_cfg, batch, metric_cfg)
    if not np.isfinite(loss.data.item()):
        raise dc.DivergenceError("td_loss")
    dc.backward(loss)
    optimizer.step()
    return loss.data.item()


def episodes_to_threshold(
    history: list[dict], threshold: float, key: str = "train_alpha_ndcg"
) -> int | None:
    """Episodes consumed before ``key`` first reached ``threshold``; None if never."""
    for row in sorted(history, key=lambda r: r["episodes"]):
        value = row.get(key)
        if value is not None and value >= threshold:
            return row["episodes"]
    return None


def train(
    queries: list[QueryDocs],
    config: TrainerConfig,
    eval_queries: list[QueryDocs] | None = None,
    log_path=None,
    checkpoint_path=None,
) -> TrainResult:
    """Train the multi-agent ranker; returns final and best params plus history.

    The checkpoint written to ``checkpoint_path`` holds the best parameters
    seen at any evaluation point (best on the held-out queries when given,
    otherwise best on the training queries).  If training diverges, the last
    finite parameters are dumped there instead and TrainingDiverged is raised.
    """
    n, L = _check_dataset(queries)
    if eval_queries:
        _check_dataset(eval_queries)
    if config.k > n:
        raise ValueError(f"metric cutoff k={config.k} exceeds doc count n={n}")

    net_cfg = AgentNetConfig(
        embed_dim=L,
        action_count=config.action_count,
        heads=config.heads,
        attn_dim=config.attn_dim,
        hidden=config.hidden,
        blocks=config.blocks,
    )
    mix_cfg = MixerConfig(embed_dim=L, doc_count=n, mix_hidden=config.mix_hidden)
    metric_cfg = config.metric_config()
    schedule = ExplorationSchedule(
        start=config.eps_start, floor=config.eps_floor, horizon=config.eps_horizon
    )

    rng = np.random.default_rng(config.seed)
    agent_params = init_agent_params(rng, net_cfg)
    mixer_params = init_mixer_params(rng, mix_cfg)
    all_params = {**agent_params, **mixer_params}
    optimizer = dc.Adam(
        all_params, lr=config.lr, beta1=config.adam_beta1, beta2=config.adam_beta2
    )
    buffer = ReplayBuffer(config.buffer_capacity)

    history: list[dict] = []
    timing: list[dict] = []
    episodes = 0
    updates = 0
    best_key = "eval_alpha_ndcg" if eval_queries else "train_alpha_ndcg"
    best_value = -np.inf
    best_params = _snapshot(all_params)
    best_epoch = 0
    started = time.perf_counter()

    def record(epoch: int, losses: list[float]) -> dict:
        nonlocal best_value, best_params, best_epoch
        row = {
            "epoch": epoch,
            "episodes": episodes,
            "updates": updates,
            "epsilon": schedule.value(episodes),
            "loss_mean": float(np.mean(losses)) if losses else None,
        }
        train_eval = evaluate_policy(all_params, net_cfg, queries, metric_cfg)
        row.update({f"train_{k}": v for k, v in train_eval.items()})
        if eval_queries:
            held_eval = evaluate_policy(all_params, net_cfg, eval_queries, metric_cfg)
            row.update({f"eval_{k}": v for k, v in held_eval.items()})
        if row[best_key] > best_value:
            best_value = row[best_key]
            best_params = _snapshot(all_params)
            best_epoch = epoch
        history.append(row)
        timing.append({"epoch": epoch, "wall_clock_s": time.perf_counter() - started})
        return row

    record(epoch=0, losses=[])
    try:
        for epoch in range(1, config.epochs + 1):
            losses = []
            episodes = rollout_epoch(
                queries, all_params, net_cfg, metric_cfg, schedule, buffer, rng, episodes
            )
            # updates begin once the buffer can fill a whole batch
            if len(buffer) >= config.batch_size:
                for _ in range(config.updates_per_epoch):
                    losses.append(
                        td_update(
                            agent_params,
                            mixer_params,
                            net_cfg,
                            mix_cfg,
                            buffer,
                            config.batch_size,
                            optimizer,
                            rng,
                            metric_cfg,
                        )
                    )
                    updates += 1
            if epoch % config.eval_every == 0 or epoch == config.epochs:
                row = record(epoch=epoch, losses=losses)
                if (
                    config.stop_at_train is not None
                    and row["train_alpha_ndcg"] >= config.stop_at_train
                ):
                    break
    except dc.DivergenceError as exc:
        if checkpoint_path is not None:
            dc.save_params(checkpoint_path, all_params)
        raise TrainingDiverged(
            f"training diverged after {updates} updates: {exc}", all_params, updates
        ) from exc

    if log_path is not None:
        write_history(log_path, history)
    if checkpoint_path is not None:
        dc.save_params(checkpoint_path, best_params)
    return TrainResult(
        params=all_params,
        history=history,
        episodes=episodes,
        updates=updates,
        best_params=best_params,
        best_epoch=best_epoch,
        timing=timing,
        wall_clock_s=time.perf_counter() - started,
    )


def write_history(path, history: list[dict]):
    with open(path, "w", encoding="utf-8") as fh:
        for row in history:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


@dataclass(frozen=True)
class ReinforceConfig:
    """Sequential-selection baseline trained with REINFORCE."""

    hidden: int = 128
    epochs: int = 250
    lr: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    eval_every: int = 5
    k: int = 10
    alpha: float = 0.5
    seed: int = 0
    stop_at_train: float | None = None

    def __post_init__(self):
        if self.hidden < 1 or self.epochs < 1 or self.eval_every < 1:
            raise ValueError("hidden, epochs, and eval_every must be >= 1")

    def metric_config(self) -> metrics.MetricConfig:
        return metrics.MetricConfig(k=self.k, alpha=self.alpha)


def init_reinforce_params(rng: np.random.Generator, embed_dim: int, hidden: int):
    scale1 = np.sqrt(2.0 / (3 * embed_dim + hidden))
    return {
        "seq.w1": dc.Tensor(rng.standard_normal((3 * embed_dim, hidden)) * scale1),
        "seq.b1": dc.Tensor(np.zeros((1, hidden))),
        "seq.w2": dc.Tensor(rng.standard_normal((hidden, 1)) * 1e-3),
        "seq.b2": dc.Tensor(np.zeros((1, 1))),
    }


def _step_scores(params, q: np.ndarray, D: np.ndarray, remaining: np.ndarray,
                 selected_mean: np.ndarray) -> dc.Tensor:
    """Scores over the remaining documents, shape (1, r)."""
    r = remaining.shape[0]
    feats = np.concatenate(
        [np.tile(q, (r, 1)), D[remaining], np.tile(selected_mean, (r, 1))], axis=1
    )
    h = dc.relu(dc.add(dc.matmul(dc.Tensor(feats), params["seq.w1"]), params["seq.b1"]))
    return dc.transpose(dc.add(dc.matmul(h, params["seq.w2"]), params["seq.b2"]))


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def sequential_greedy_order(params, qd: QueryDocs) -> np.ndarray:
    """Greedy decode of the sequential policy (ties to the lowest index)."""
    n = qd.doc_count
    remaining = np.arange(n)
    selected_mean = np.zeros(qd.embed_dim)
    order = np.empty(n, dtype=np.int64)
    with dc.no_grad():
        for t in range(n):
            scores = _step_scores(params, qd.q, qd.D, remaining, selected_mean).data[0]
            j = int(np.argmax(scores))
            doc = remaining[j]
            order[t] = doc
            selected_mean = (selected_mean * t + qd.D[doc]) / (t + 1)
            remaining = np.delete(remaining, j)
    return order


def evaluate_sequential_policy(
    params, queries: list[QueryDocs], metric_cfg: metrics.MetricConfig
) -> dict[str, float]:
    if not queries:
        raise ValueError("cannot evaluate on an empty query set")
    sums = {"alpha_ndcg": 0.0, "err_ia": 0.0, "s_recall": 0.0}
    for qd in queries:
        order = sequential_greedy_order(params, qd)
        sums["alpha_ndcg"] += metrics.alpha_ndcg(order, qd.J, metric_cfg)
        sums["err_ia"] += metrics.err_ia(order, qd.J, metric_cfg)
        sums["s_recall"] += metrics.s_recall(order, qd.J, metric_cfg.k)
    return {name: value / len(queries) for name, value in sums.items()}


def reinforce_train(
    queries: list[QueryDocs],
    config: ReinforceConfig,
    eval_queries: list[QueryDocs] | None = None,
    log_path=None,
    checkpoint_path=None,
) -> TrainResult:
    """Train the sequential baseline; mirrors ``train``'s protocol and logs.

    One episode consumes n policy decisions (one document per step).  The
    per-step rewards are marginal gains whose sum telescopes to the full
    ranking's normalized gain, so the undiscounted return of every step is
    that final value and a single scalar scales each step's score gradient.
    """
    n, L = _check_dataset(queries)
    if eval_queries:
        _check_dataset(eval_queries)
    if config.k > n:
        raise ValueError(f"metric cutoff k={config.k} exceeds doc count n={n}")
    metric_cfg = config.metric_config()

    rng = np.random.default_rng(config.seed)
    params = init_reinforce_params(rng, L, config.hidden)
    optimizer = dc.Adam(
        params, lr=config.lr, beta1=config.adam_beta1, beta2=config.adam_beta2
    )

    history: list[dict] = []
    timing: list[dict] = []
    episodes = 0
    updates = 0
    best_key = "eval_alpha_ndcg" if eval_queries else "train_alpha_ndcg"
    best_value = -np.inf
    best_params = _snapshot(params)
    best_epoch = 0
    started = time.perf_counter()

    def record(epoch: int, losses: list[float]) -> dict:
        nonlocal best_value, best_params, best_epoch
        row = {
            "epoch": epoch,
            "episodes": episodes,
            "updates": updates,
            "epsilon": None,
            "loss_mean": float(np.mean(losses)) if losses else None,
        }
        train_eval = evaluate_sequential_policy(params, queries, metric_cfg)
        row.update({f"train_{k}": v for k, v in train_eval.items()})
        if eval_queries:
            held_eval = evaluate_sequential_policy(params, eval_queries, metric_cfg)
            row.update({f"eval_{k}": v for k, v in held_eval.items()})
        if row[best_key] > best_value:
            best_value = row[best_key]
            best_params = _snapshot(params)
            best_epoch = epoch
        history.append(row)
        timing.append({"epoch": epoch, "wall_clock_s": time.perf_counter() - started})
        return row

    record(epoch=0, losses=[])
    try:
        for epoch in range(1, config.epochs + 1):
            losses = []
            for qd in queries:
                optimizer.zero_grad()
                remaining = np.arange(n)
                selected_mean = np.zeros(L)
                steps = []
                order = np.empty(n, dtype=np.int64)
                for t in range(n):
                    scores = _step_scores(params, qd.q, qd.D, remaining, selected_mean)
                    probs = _softmax(scores.data[0])
                    j = int(rng.choice(remaining.shape[0], p=probs))
                    steps.append((scores, probs, j))
                    doc = remaining[j]
                    order[t] = doc
                    selected_mean = (selected_mean * t + qd.D[doc]) / (t + 1)
                    remaining = np.delete(remaining, j)
                ret = metrics.alpha_ndcg(order, qd.J, metric_cfg)
                neg_log_prob = 0.0
                for scores, probs, j in steps:
                    onehot = np.zeros_like(probs)
                    onehot[j] = 1.0
                    dc.backward(scores, seed=(ret * (probs - onehot))[None, :])
                    neg_log_prob -= np.log(max(probs[j], 1e-300))
                optimizer.step()
                losses.append(ret * neg_log_prob)
                episodes += 1
                updates += 1
            if epoch % config.eval_every == 0 or epoch == config.epochs:
                row = record(epoch=epoch, losses=losses)
                if (
                    config.stop_at_train is not None
                    and row["train_alpha_ndcg"] >= config.stop_at_train
                ):
                    break
    except dc.DivergenceError as exc:
        if checkpoint_path is not None:
            dc.save_params(checkpoint_path, params)
        raise TrainingDiverged(
            f"training diverged after {updates} updates: {exc}", params, updates
        ) from exc

    if log_path is not None:
        write_history(log_path, history)
    if checkpoint_path is not None:
        dc.save_params(checkpoint_path, best_params)
    return TrainResult(
        params=params,
        history=history,
        episodes=episodes,
        updates=updates,
        best_params=best_params,
        best_epoch=best_epoch,
        timing=timing,
        wall_clock_s=time.perf_counter() - started,
    )
