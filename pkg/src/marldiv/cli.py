"""Command-line harness: dataset generation, training, evaluation, benchmarks.

Settings come from flags or from a single JSON config file (``--config``);
where both specify the same key the file wins, and the merged effective
settings are archived as ``config.json`` next to the outputs.  Every
artifact lands under ``--out``.  Commands exit 0 on success and nonzero
with a one-line cause on stderr otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import baselines
from . import diffcore as dc
from . import metrics
from .agentnet import AgentNetConfig, greedy_actions, init_agent_params
from .baselines import GreedyConfig
from .datamodel import (
    GeneratorConfig,
    QueryDocs,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from .ranker import rank_by_scores
from .trainer import (
    ReinforceConfig,
    TrainerConfig,
    episodes_to_threshold,
    init_reinforce_params,
    reinforce_train,
    sequential_greedy_order,
    train,
)

METHODS = ("ma4div", "mdpdiv", "mmr", "xquad", "random", "oracle")
TRAINABLE = ("ma4div", "mdpdiv")
LATENCY_DOCS = (5, 10, 15, 30)


def _field_names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


_TRAIN_KEYS = _field_names(TrainerConfig) | _field_names(ReinforceConfig)


# ---------------------------------------------------------------------------
# settings merge: defaults < flags < config file


def _load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file must hold a JSON object, got {type(data).__name__}")
    return data


def _merge_settings(args: argparse.Namespace, allowed: set[str]) -> dict:
    merged = {
        key: value
        for key, value in vars(args).items()
        if key in allowed and value is not None
    }
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = sorted(set(file_cfg) - allowed)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        merged.update(file_cfg)
    return merged


def _build_trainer_config(
    merged: dict, method: str, overrides: dict | None = None, strict: bool = True
):
    """Per-method training config; dataclass defaults fill unprovided keys.

    ``strict`` rejects settings the method cannot use; bench relaxes it since
    one settings pool drives every method it compares.
    """
    cls = TrainerConfig if method == "ma4div" else ReinforceConfig
    inapplicable = sorted((set(merged) & _TRAIN_KEYS) - _field_names(cls))
    if strict and inapplicable:
        raise ValueError(
            f"settings {', '.join(inapplicable)} do not apply to method {method}"
        )
    kwargs = {k: merged[k] for k in _field_names(cls) if k in merged}
    if overrides:
        kwargs.update(overrides)
    return cls(**kwargs)


def _methods_from(merged: dict, default: list[str]) -> list[str]:
    raw = merged.get("method", default)
    if isinstance(raw, str):
        raw = [raw]
    seen: list[str] = []
    for name in raw:
        if name not in METHODS:
            raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
        if name not in seen:
            seen.append(name)
    if not seen:
        raise ValueError("no method given")
    return seen


# ---------------------------------------------------------------------------
# artifacts


def _ensure_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _archive_config(out: Path, payload: dict) -> Path:
    path = out / "config.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_jsonl(path: Path, rows: list[dict]):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _format_cell(value) -> str:
    if value is None:
        return "DNF"
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _format_table(rows: list[dict], columns: list[str]) -> str:
    cells = [[_format_cell(row.get(col)) for col in columns] for row in rows]
    widths = [
        max(len(col), *(len(line[i]) for line in cells)) if cells else len(col)
        for i, col in enumerate(columns)
    ]
    lines = ["  ".join(col.ljust(w) for col, w in zip(columns, widths)).rstrip()]
    for line in cells:
        padded = [line[0].ljust(widths[0])] + [
            cell.rjust(w) for cell, w in zip(line[1:], widths[1:])
        ]
        lines.append("  ".join(padded).rstrip())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# ranking and the shared six-column metric table


def _metric_cutoffs(doc_count: int) -> list[int]:
    return sorted({min(5, doc_count), min(10, doc_count)})


def _metric_columns(cutoffs: list[int]) -> list[str]:
    return [f"{name}@{k}" for name in ("alpha_ndcg", "err_ia", "s_recall") for k in cutoffs]


def _metric_row(orders, queries: list[QueryDocs], alpha: float, cutoffs: list[int]) -> dict:
    row: dict = {}
    for k in cutoffs:
        cfg = metrics.MetricConfig(k=k, alpha=alpha)
        sums = {"alpha_ndcg": 0.0, "err_ia": 0.0, "s_recall": 0.0}
        for order, qd in zip(orders, queries):
            sums["alpha_ndcg"] += metrics.alpha_ndcg(order, qd.J, cfg)
            sums["err_ia"] += metrics.err_ia(order, qd.J, cfg)
            sums["s_recall"] += metrics.s_recall(order, qd.J, k)
        for name, total in sums.items():
            row[f"{name}@{k}"] = total / len(queries)
    return {key: row[key] for key in _metric_columns(cutoffs)}


def _infer_agent_config(params: dict, embed_dim: int) -> AgentNetConfig:
    """Rebuild the scorer shape from checkpoint tensors alone."""
    try:
        wq = params["agent.block0.h0.wq"].data
        wo = params["agent.block0.wo"].data
        w1 = params["agent.mlp.w1"].data
        w3 = params["agent.mlp.w3"].data
    except KeyError as exc:
        raise ValueError(f"checkpoint is missing scorer tensor {exc}") from exc
    if wq.shape[0] != embed_dim:
        raise ValueError(
            f"checkpoint expects embed_dim {wq.shape[0]}, dataset has {embed_dim}"
        )
    heads = sum(1 for name in params if name.startswith("agent.block0.h") and name.endswith(".wq"))
    blocks = sum(1 for name in params if name.startswith("agent.block") and name.endswith(".wo"))
    return AgentNetConfig(
        embed_dim=embed_dim,
        action_count=w3.shape[1],
        heads=heads,
        attn_dim=wo.shape[1],
        hidden=w1.shape[1],
        blocks=blocks,
    )


def _load_checkpoint(merged: dict, method: str) -> dict:
    """Pick the checkpoint holding this method's tensors (flag is repeatable)."""
    paths = merged.get("checkpoint")
    if not paths:
        raise ValueError(f"method {method} needs --checkpoint")
    if isinstance(paths, (str, Path)):
        paths = [paths]
    marker = "agent.mlp.w1" if method == "ma4div" else "seq.w1"
    cache = merged.setdefault("_checkpoint_cache", {})
    for path in paths:
        if path not in cache:
            cache[path] = dc.load_params(path)
        if marker in cache[path]:
            return cache[path]
    raise ValueError(f"no given checkpoint holds {marker!r} needed by method {method}")


def _orders_for_method(method: str, queries: list[QueryDocs], merged: dict):
    """Full-length rankings for every query plus any resolved extras."""
    alpha = merged.get("alpha", 0.5)
    n = queries[0].doc_count
    extras: dict = {}
    if method in ("mmr", "xquad"):
        rank_fn = baselines.mmr_rank if method == "mmr" else baselines.xquad_rank
        lam = merged.get("lam", 0.5)
        if merged.get("tune_lam"):
            tune_cfg = metrics.MetricConfig(k=min(10, n), alpha=alpha)
            lam = baselines.tune_lam(queries, rank_fn, tune_cfg)
        extras["lam"] = lam
        cfg = GreedyConfig(lam=lam)
        orders = [rank_fn(qd, cfg) for qd in queries]
    elif method == "random":
        rng = np.random.default_rng(merged.get("seed", 0))
        orders = [baselines.random_rank(qd, rng) for qd in queries]
    elif method == "oracle":
        cfg = metrics.MetricConfig(k=min(10, n), alpha=alpha)
        orders = [baselines.oracle_greedy_rank(qd, cfg) for qd in queries]
    elif method == "ma4div":
        params = _load_checkpoint(merged, method)
        net_cfg = _infer_agent_config(params, queries[0].embed_dim)
        orders = [
            rank_by_scores(greedy_actions(params, net_cfg, qd.q, qd.D)) for qd in queries
        ]
    elif method == "mdpdiv":
        params = _load_checkpoint(merged, method)
        if params["seq.w1"].data.shape[0] != 3 * queries[0].embed_dim:
            raise ValueError(
                f"checkpoint expects embed_dim {params['seq.w1'].data.shape[0] // 3}, "
                f"dataset has {queries[0].embed_dim}"
            )
        orders = [sequential_greedy_order(params, qd) for qd in queries]
    else:
        raise ValueError(f"unknown method {method!r}")
    return orders, extras


def _load_queries(merged: dict) -> list[QueryDocs]:
    path = merged.get("dataset")
    if not path:
        raise ValueError("no dataset given; pass --dataset or set it in the config file")
    queries = load_dataset(path)
    if not queries:
        raise ValueError(f"dataset {path} holds no queries")
    return queries


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args: argparse.Namespace) -> int:
    allowed = _field_names(GeneratorConfig) | {"seed"}
    merged = _merge_settings(args, allowed)
    seed = merged.pop("seed", 0)
    config = GeneratorConfig(**{k: v for k, v in merged.items()})
    out = _ensure_out(args.out)
    queries = generate_dataset(config, seed)
    dataset_path = out / "dataset.jsonl"
    save_dataset(dataset_path, queries)
    _archive_config(
        out, {"command": "generate", "seed": seed, "generator": asdict(config)}
    )
    print(
        f"wrote {len(queries)} queries "
        f"(docs={config.docs_per_query}, subtopics={config.subtopics}, "
        f"embed_dim={config.embed_dim}) to {dataset_path}"
    )
    return 0


def _final_table(
    method: str,
    checkpoint_path: Path,
    train_queries: list[QueryDocs],
    eval_queries: list[QueryDocs] | None,
    alpha: float,
) -> list[dict]:
    merged = {"checkpoint": str(checkpoint_path), "alpha": alpha}
    rows = []
    for split, queries in (("train", train_queries), ("test", eval_queries or [])):
        if not queries:
            continue
        orders, _ = _orders_for_method(method, queries, merged)
        cutoffs = _metric_cutoffs(queries[0].doc_count)
        rows.append(
            {"split": split, "method": method, **_metric_row(orders, queries, alpha, cutoffs)}
        )
    return rows


def cmd_train(args: argparse.Namespace) -> int:
    allowed = _TRAIN_KEYS | {"method", "dataset", "eval_fraction", "split_seed"}
    merged = _merge_settings(args, allowed)
    methods = _methods_from(merged, default=["ma4div"])
    if len(methods) != 1 or methods[0] not in TRAINABLE:
        raise ValueError(f"train takes one method out of {', '.join(TRAINABLE)}")
    method = methods[0]

    queries = _load_queries(merged)
    eval_fraction = merged.get("eval_fraction", 0.2)
    if not 0.0 <= eval_fraction < 1.0:
        raise ValueError(f"eval_fraction must lie in [0, 1), got {eval_fraction}")
    split_seed = merged.get("split_seed", 0)
    if eval_fraction > 0.0:
        train_qs, eval_qs = split_dataset(queries, 1.0 - eval_fraction, split_seed)
    else:
        train_qs, eval_qs = queries, None

    config = _build_trainer_config(merged, method)
    out = _ensure_out(args.out)
    history_path = out / "history.jsonl"
    checkpoint_path = out / "checkpoint.ckpt"
    _archive_config(
        out,
        {
            "command": "train",
            "method": method,
            "dataset": str(merged["dataset"]),
            "eval_fraction": eval_fraction,
            "split_seed": split_seed,
            "trainer": asdict(config),
        },
    )

    run = train if method == "ma4div" else reinforce_train
    result = run(
        train_qs,
        config,
        eval_queries=eval_qs,
        log_path=history_path,
        checkpoint_path=checkpoint_path,
    )

    _write_jsonl(out / "timing.jsonl", result.timing)
    curve_path = out / "curve.csv"
    with open(curve_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "episodes", "updates", "train_alpha_ndcg", "eval_alpha_ndcg"])
        for row in result.history:
            writer.writerow(
                [
                    row["epoch"],
                    row["episodes"],
                    row["updates"],
                    row["train_alpha_ndcg"],
                    row.get("eval_alpha_ndcg", ""),
                ]
            )

    final_rows = _final_table(method, checkpoint_path, train_qs, eval_qs, config.alpha)
    _write_jsonl(out / "final_metrics.jsonl", final_rows)
    cutoffs = _metric_cutoffs(train_qs[0].doc_count)
    table = _format_table(final_rows, ["split", "method"] + _metric_columns(cutoffs))
    (out / "final_metrics.txt").write_text(table + "\n", encoding="utf-8")

    print(
        f"{method}: {result.episodes} episodes, {result.updates} updates, "
        f"{result.wall_clock_s:.1f}s; best epoch {result.best_epoch}"
    )
    print(f"checkpoint: {checkpoint_path}")
    print(table)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    allowed = {"method", "dataset", "checkpoint", "lam", "tune_lam", "alpha", "seed"}
    merged = _merge_settings(args, allowed)
    methods = _methods_from(merged, default=[])
    queries = _load_queries(merged)
    alpha = merged.get("alpha", 0.5)
    cutoffs = _metric_cutoffs(queries[0].doc_count)

    out = _ensure_out(args.out)
    _archive_config(
        out,
        {
            "command": "evaluate",
            "method": methods,
            "dataset": str(merged["dataset"]),
            "checkpoint": merged.get("checkpoint"),
            "alpha": alpha,
            "seed": merged.get("seed", 0),
            "lam": merged.get("lam", 0.5),
            "tune_lam": bool(merged.get("tune_lam", False)),
        },
    )

    rows = []
    for method in methods:
        orders, extras = _orders_for_method(method, queries, merged)
        rows.append(
            {"method": method, **_metric_row(orders, queries, alpha, cutoffs), **extras}
        )

    _write_jsonl(out / "metrics.jsonl", rows)
    table = _format_table(rows, ["method"] + _metric_columns(cutoffs))
    (out / "metrics.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


def _time_per_query(fn, queries: list[QueryDocs], repeats: int) -> float:
    """Best mean seconds per query over timing repeats (one warmup pass)."""
    for qd in queries:
        fn(qd)
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        for qd in queries:
            fn(qd)
        best = min(best, (time.perf_counter() - start) / len(queries))
    return best


def _latency_rows(merged: dict, embed_dim: int, seed: int) -> list[dict]:
    doc_counts = [int(n) for n in merged.get("latency_docs", list(LATENCY_DOCS))]
    if not doc_counts or min(doc_counts) < 2:
        raise ValueError(f"latency doc counts must all be >= 2, got {doc_counts}")
    repeats = merged.get("latency_repeats", 5)
    if repeats < 1:
        raise ValueError(f"latency_repeats must be >= 1, got {repeats}")

    rng = np.random.default_rng(seed)
    net_cfg = AgentNetConfig(
        embed_dim=embed_dim,
        action_count=merged.get("action_count", TrainerConfig.action_count),
        heads=merged.get("heads", TrainerConfig.heads),
        attn_dim=merged.get("attn_dim", TrainerConfig.attn_dim),
        hidden=merged.get("hidden", TrainerConfig.hidden),
        blocks=merged.get("blocks", TrainerConfig.blocks),
    )
    one_shot_params = init_agent_params(rng, net_cfg)
    seq_params = init_reinforce_params(
        rng, embed_dim, merged.get("hidden", ReinforceConfig.hidden)
    )

    one_shot_ms: list[float] = []
    sequential_ms: list[float] = []
    for n_docs in doc_counts:
        probe = generate_dataset(
            GeneratorConfig(
                n_queries=4,
                docs_per_query=n_docs,
                subtopics=5,
                embed_dim=embed_dim,
                signal_strength=0.9,
            ),
            seed=seed,
        )
        one_shot_ms.append(
            1e3
            * _time_per_query(
                lambda qd: rank_by_scores(greedy_actions(one_shot_params, net_cfg, qd.q, qd.D)),
                probe,
                repeats,
            )
        )
        sequential_ms.append(
            1e3 * _time_per_query(lambda qd: sequential_greedy_order(seq_params, qd), probe, repeats)
        )

    xs = np.asarray(doc_counts, dtype=np.float64)
    rows = [
        {
            "kind": "latency",
            "method": "ma4div",
            "model_calls_per_query": 1,
            "doc_counts": doc_counts,
            "per_query_ms": one_shot_ms,
            "slope_ms_per_doc": float(np.polyfit(xs, one_shot_ms, 1)[0]),
            # attention cost grows with n^2; reported on its own
            "quadratic_ms_per_doc2": float(np.polyfit(xs, one_shot_ms, 2)[0])
            if len(doc_counts) >= 3
            else None,
        },
        {
            "kind": "latency",
            "method": "mdpdiv",
            "model_calls_per_query": "n",
            "doc_counts": doc_counts,
            "per_query_ms": sequential_ms,
            "slope_ms_per_doc": float(np.polyfit(xs, sequential_ms, 1)[0]),
        },
    ]
    return rows


def cmd_bench(args: argparse.Namespace) -> int:
    allowed = (_TRAIN_KEYS - {"stop_at_train"}) | {
        "method",
        "dataset",
        "threshold",
        "latency_docs",
        "latency_repeats",
    }
    merged = _merge_settings(args, allowed)
    methods = _methods_from(merged, default=list(TRAINABLE))
    bad = [m for m in methods if m not in TRAINABLE]
    if bad:
        raise ValueError(f"bench trains only {', '.join(TRAINABLE)}; got {', '.join(bad)}")

    queries = _load_queries(merged)
    threshold_fraction = merged.get("threshold", 0.9)
    if not 0.0 < threshold_fraction <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold_fraction}")
    alpha = merged.get("alpha", 0.5)
    k = merged.get("k", 10)
    oracle_cfg = metrics.MetricConfig(k=min(k, queries[0].doc_count), alpha=alpha)
    oracle_mean = float(
        np.mean(
            [
                metrics.alpha_ndcg(baselines.oracle_greedy_rank(qd, oracle_cfg), qd.J, oracle_cfg)
                for qd in queries
            ]
        )
    )
    bar = threshold_fraction * oracle_mean

    out = _ensure_out(args.out)
    rows: list[dict] = []
    for method in methods:
        # replay-heavy defaults: off-policy updates dominate data efficiency
        overrides = {"stop_at_train": bar, "eval_every": merged.get("eval_every", 1)}
        if method == "ma4div":
            overrides["updates_per_epoch"] = merged.get("updates_per_epoch", 64)
            overrides["epochs"] = merged.get("epochs", 60)
        else:
            overrides["epochs"] = merged.get("epochs", 100)
        config = _build_trainer_config(merged, method, overrides, strict=False)
        run = train if method == "ma4div" else reinforce_train
        result = run(queries, config)
        crossed = episodes_to_threshold(result.history, bar)
        wall_to_bar = None
        if crossed is not None:
            for row, stamp in zip(result.history, result.timing):
                if row["train_alpha_ndcg"] >= bar:
                    wall_to_bar = stamp["wall_clock_s"]
                    break
        rows.append(
            {
                "kind": "training",
                "method": method,
                "threshold_fraction": threshold_fraction,
                "oracle_alpha_ndcg": oracle_mean,
                "threshold": bar,
                "reached": crossed is not None,
                "episodes_to_threshold": crossed,
                "wall_clock_to_threshold_s": wall_to_bar,
                "episodes_total": result.episodes,
                "updates_total": result.updates,
                "wall_clock_total_s": result.wall_clock_s,
            }
        )

    latency = _latency_rows(merged, queries[0].embed_dim, merged.get("seed", 0))
    rows.extend(latency)

    _write_jsonl(out / "bench.jsonl", rows)
    training_table = _format_table(
        [r for r in rows if r["kind"] == "training"],
        [
            "method",
            "threshold",
            "reached",
            "episodes_to_threshold",
            "wall_clock_to_threshold_s",
            "episodes_total",
            "wall_clock_total_s",
        ],
    )
    latency_columns = ["method", "model_calls_per_query"] + [
        f"ms@n={n}" for n in latency[0]["doc_counts"]
    ] + ["slope_ms_per_doc", "quadratic_ms_per_doc2"]
    latency_rows = [
        {
            **{key: row.get(key) for key in ("method", "model_calls_per_query")},
            **{f"ms@n={n}": ms for n, ms in zip(row["doc_counts"], row["per_query_ms"])},
            "slope_ms_per_doc": row["slope_ms_per_doc"],
            "quadratic_ms_per_doc2": row.get("quadratic_ms_per_doc2", ""),
        }
        for row in latency
    ]
    latency_table = _format_table(latency_rows, latency_columns)
    text = "training to threshold\n" + training_table + "\n\nper-query inference latency\n" + latency_table
    (out / "bench.txt").write_text(text + "\n", encoding="utf-8")

    _archive_config(
        out,
        {
            "command": "bench",
            "method": methods,
            "dataset": str(merged["dataset"]),
            "threshold": threshold_fraction,
            "alpha": alpha,
            "k": k,
            "latency_docs": [int(n) for n in merged.get("latency_docs", list(LATENCY_DOCS))],
            "latency_repeats": merged.get("latency_repeats", 5),
            "settings": {key: merged[key] for key in sorted(set(merged) & _TRAIN_KEYS)},
        },
    )
    print(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON settings file; wins over flags")
    parser.add_argument("--out", required=True, help="directory for all artifacts")
    parser.add_argument("--seed", type=int, help="master random seed")


def _add_trainer_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--epochs", type=int, help="rollout sweeps over the training split")
    parser.add_argument("--updates-per-epoch", type=int, dest="updates_per_epoch")
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--buffer-capacity", type=int, dest="buffer_capacity")
    parser.add_argument("--lr", type=float)
    parser.add_argument("--adam-beta1", type=float, dest="adam_beta1")
    parser.add_argument("--adam-beta2", type=float, dest="adam_beta2")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--eps-start", type=float, dest="eps_start")
    parser.add_argument("--eps-floor", type=float, dest="eps_floor")
    parser.add_argument("--eps-horizon", type=int, dest="eps_horizon")
    parser.add_argument("--eval-every", type=int, dest="eval_every")
    parser.add_argument("--action-count", type=int, dest="action_count")
    parser.add_argument("--heads", type=int)
    parser.add_argument("--attn-dim", type=int, dest="attn_dim")
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--blocks", type=int)
    parser.add_argument("--mix-hidden", type=int, dest="mix_hidden")
    parser.add_argument("--k", type=int, help="metric cutoff")
    parser.add_argument("--alpha", type=float, help="novelty parameter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marldiv",
        description="Diversity ranking toolkit: data, training, evaluation, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic dataset")
    _add_common(p_gen)
    p_gen.add_argument("--queries", type=int, dest="n_queries", help="number of queries")
    p_gen.add_argument("--docs", type=int, dest="docs_per_query", help="documents per query")
    p_gen.add_argument("--subtopics", type=int)
    p_gen.add_argument("--embed-dim", type=int, dest="embed_dim")
    p_gen.add_argument("--coverage-rate", type=float, dest="coverage_rate")
    p_gen.add_argument("--signal-strength", type=float, dest="signal_strength")
    p_gen.set_defaults(func=cmd_generate)

    p_train = sub.add_parser("train", help="train a ranking policy")
    _add_common(p_train)
    p_train.add_argument("--dataset", help="dataset file from `generate`")
    p_train.add_argument("--method", action="append", choices=TRAINABLE)
    p_train.add_argument(
        "--eval-fraction",
        type=float,
        dest="eval_fraction",
        help="held-out fraction (0 trains on everything)",
    )
    p_train.add_argument("--split-seed", type=int, dest="split_seed")
    p_train.add_argument("--stop-at-train", type=float, dest="stop_at_train")
    _add_trainer_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score ranking methods on a dataset")
    _add_common(p_eval)
    p_eval.add_argument("--dataset", help="dataset file from `generate`")
    p_eval.add_argument(
        "--method", action="append", choices=METHODS, help="repeatable; one table row each"
    )
    p_eval.add_argument(
        "--checkpoint",
        action="append",
        help="trained parameters for ma4div/mdpdiv; repeatable, matched by content",
    )
    p_eval.add_argument("--lam", type=float, help="relevance-diversity trade-off for mmr/xquad")
    p_eval.add_argument(
        "--tune-lam",
        action="store_true",
        default=None,
        dest="tune_lam",
        help="grid-search lam on this dataset (pass the training split)",
    )
    p_eval.add_argument("--alpha", type=float, help="novelty parameter")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="episodes/wall-clock to threshold plus latency")
    _add_common(p_bench)
    p_bench.add_argument("--dataset", help="dataset file from `generate`")
    p_bench.add_argument("--method", action="append", choices=TRAINABLE)
    p_bench.add_argument(
        "--threshold",
        type=float,
        help="quality bar as a fraction of the oracle-greedy mean (default 0.9)",
    )
    p_bench.add_argument(
        "--latency-docs", type=int, nargs="+", dest="latency_docs", help="doc counts to time"
    )
    p_bench.add_argument("--latency-repeats", type=int, dest="latency_repeats")
    _add_trainer_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
