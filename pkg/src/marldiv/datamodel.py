"""Query records, JSONL persistence, and the synthetic corpus generator.

A record couples a query embedding with its candidate document embeddings
and a binary document-by-subtopic judgment matrix.  Serialization uses one
JSON object per line; floats go through Python's shortest round-trip repr,
so a saved corpus reloads bit-identically.

The generator plants subtopic structure in the embeddings: a fixed random
projection maps each document's judgment row into embedding space and the
document is a unit-norm blend of that signal direction with a random
direction, weighted by ``signal_strength``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_RECORD_FIELDS = frozenset({"query_id", "q", "D", "J"})


@dataclass
class QueryDocs:
    """One query: embedding ``q`` (L,), documents ``D`` (n, L), judgments ``J`` (n, m)."""

    query_id: str
    q: np.ndarray
    D: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        self.D = np.asarray(self.D, dtype=np.float64)
        J = np.asarray(self.J)
        if self.q.ndim != 1 or self.q.shape[0] < 1:
            raise ValueError(f"{self.query_id}: query embedding must be 1-D, got {self.q.shape}")
        if self.D.ndim != 2 or self.D.shape[0] < 1:
            raise ValueError(f"{self.query_id}: documents must be n x L, got {self.D.shape}")
        if self.D.shape[1] != self.q.shape[0]:
            raise ValueError(
                f"{self.query_id}: document width {self.D.shape[1]} "
                f"does not match query width {self.q.shape[0]}"
            )
        if J.ndim != 2 or J.shape[0] != self.D.shape[0] or J.shape[1] < 1:
            raise ValueError(
                f"{self.query_id}: judgments must be {self.D.shape[0]} x m, got {J.shape}"
            )
        if not np.isin(J, (0, 1)).all():
            raise ValueError(f"{self.query_id}: judgments must be binary")
        if not (np.isfinite(self.q).all() and np.isfinite(self.D).all()):
            raise ValueError(f"{self.query_id}: embeddings must be finite")
        self.J = np.ascontiguousarray(J, dtype=np.int8)

    @property
    def doc_count(self) -> int:
        return self.D.shape[0]

    @property
    def subtopic_count(self) -> int:
        return self.J.shape[1]

    @property
    def embed_dim(self) -> int:
        return self.q.shape[0]


def save_dataset(path, queries: list[QueryDocs]):
    with open(path, "w", encoding="utf-8") as fh:
        for qd in queries:
            record = {
                "query_id": qd.query_id,
                "q": qd.q.tolist(),
                "D": qd.D.tolist(),
                "J": qd.J.tolist(),
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_dataset(path) -> list[QueryDocs]:
    queries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if not isinstance(record, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            fields = set(record)
            if fields != _RECORD_FIELDS:
                unknown = sorted(fields - _RECORD_FIELDS)
                missing = sorted(_RECORD_FIELDS - fields)
                raise ValueError(
                    f"{path}:{lineno}: unknown fields {unknown}, missing fields {missing}"
                )
            queries.append(
                QueryDocs(
                    query_id=str(record["query_id"]),
                    q=record["q"],
                    D=record["D"],
                    J=record["J"],
                )
            )
    return queries


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic corpus knobs.

    ``signal_strength`` in [0, 1] blends each document between its subtopic
    signal direction (1.0) and pure noise (0.0).  ``coverage_rate`` is the
    Bernoulli probability that a document covers a given subtopic.
    """

    n_queries: int = 100
    docs_per_query: int = 15
    subtopics: int = 50
    embed_dim: int = 64
    coverage_rate: float = 0.3
    signal_strength: float = 0.9

    def __post_init__(self):
        if self.n_queries < 1 or self.docs_per_query < 1 or self.subtopics < 1:
            raise ValueError("n_queries, docs_per_query, and subtopics must be >= 1")
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if not 0.0 < self.coverage_rate <= 1.0:
            raise ValueError(f"coverage_rate must lie in (0, 1], got {self.coverage_rate}")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValueError(f"signal_strength must lie in [0, 1], got {self.signal_strength}")


def _unit(v: np.ndarray) -> np.ndarray:
    """Normalize to unit length; a zero vector maps to the first basis vector."""
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / norm


_MAX_JUDGMENT_DRAWS = 1000


def generate_dataset(config: GeneratorConfig, seed: int) -> list[QueryDocs]:
    """Draw a synthetic corpus; identical (config, seed) gives identical bytes."""
    rng = np.random.default_rng(seed)
    L, m, s = config.embed_dim, config.subtopics, config.signal_strength
    projection = rng.standard_normal((L, m)) / np.sqrt(L)

    queries = []
    for qi in range(config.n_queries):
        J = None
        for _ in range(_MAX_JUDGMENT_DRAWS):
            draw = (rng.random((config.docs_per_query, m)) < config.coverage_rate)
            if draw.any():
                J = draw.astype(np.int8)
                break
        if J is None:
            raise RuntimeError(
                f"no document covered any subtopic after {_MAX_JUDGMENT_DRAWS} draws; "
                f"coverage_rate={config.coverage_rate} is too small for this shape"
            )
        docs = np.empty((config.docs_per_query, L))
        for di in range(config.docs_per_query):
            row = J[di].astype(np.float64)
            signal = _unit(projection @ row) if row.any() else np.zeros(L)
            noise = _unit(rng.standard_normal(L))
            docs[di] = _unit(s * signal + (1.0 - s) * noise)
        q = _unit(projection @ J.mean(axis=0))
        queries.append(QueryDocs(query_id=f"q{qi:05d}", q=q, D=docs, J=J))
    return queries


def split_dataset(
    queries: list[QueryDocs], train_fraction: float, seed: int
) -> tuple[list[QueryDocs], list[QueryDocs]]:
    """Shuffled train/test split; train size is floor(N * train_fraction)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(queries)
    n_train = int(np.floor(n * train_fraction))
    if n_train == 0 or n_train == n:
        raise ValueError(
            f"split of {n} queries at fraction {train_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    train = [queries[i] for i in perm[:n_train]]
    test = [queries[i] for i in perm[n_train:]]
    return train, test
