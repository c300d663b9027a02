"""Exact cosine-similarity search over the keyframe embedding matrix.

All rows and queries are unit vectors, so cosine similarity is a plain dot
product. Scores are float32 and every score in the engine flows through
``EmbeddingIndex.score_against``, a fixed-block matrix-vector product:
identical inputs produce bit-identical scores no matter how the
surrounding work is parallelized, which the determinism contracts
(identity pipeline, worker-count invariance) depend on.

Top-k selection is exact: equal to a full sort under the tie rule
(score descending, keyframe_id ascending), implemented with a partial
partition plus explicit handling of ties at the cut boundary.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError
from .embedding import EmbeddingStore

# Rows per scoring block. Fixed (never derived from worker count) so the
# sequence of BLAS calls, and therefore the result bits, never varies.
BLOCK_ROWS = 32768


@dataclass(frozen=True)
class RankedResult:
    """Keyframe ids ordered by score desc, ties broken by ascending id."""

    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    scores: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float32))

    def __post_init__(self):
        if self.ids.shape != self.scores.shape:
            raise ValidationError("ids and scores must have equal length")

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def __iter__(self) -> Iterator[tuple[int, float]]:
        for i, s in zip(self.ids, self.scores):
            yield int(i), float(s)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(self)


class EmbeddingIndex:
    """Immutable search index over an EmbeddingStore; shareable across threads."""

    def __init__(self, rows: np.ndarray):
        rows = np.ascontiguousarray(rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ValidationError(f"index rows must be 2-d, got shape {rows.shape}")
        self.rows = rows
        self.rows.setflags(write=False)

    @classmethod
    def from_store(cls, store: EmbeddingStore) -> "EmbeddingIndex":
        return cls(store.rows)

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @property
    def dimension(self) -> int:
        return self.rows.shape[1]

    def score_against(self, query: np.ndarray) -> np.ndarray:
        """Length-m float32 score vector: entry j = dot(query, row j).

        The single canonical scoring path; see module docstring.
        """
        query = np.asarray(query, dtype=np.float32)
        if query.shape != (self.dimension,):
            raise ConfigurationError(
                f"query dimension {query.shape} != index dimension {self.dimension}"
            )
        m = self.size
        out = np.empty(m, dtype=np.float32)
        for start in range(0, m, BLOCK_ROWS):
            end = min(start + BLOCK_ROWS, m)
            out[start:end] = self.rows[start:end] @ query
        return out


def similarity_matrix(queries: np.ndarray, index: EmbeddingIndex) -> np.ndarray:
    """(n, m) float32 matrix of cosine scores between queries and index rows."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float32))
    if queries.shape[1] != index.dimension:
        raise ConfigurationError(
            f"query dimension {queries.shape[1]} != index dimension {index.dimension}"
        )
    out = np.empty((queries.shape[0], index.size), dtype=np.float32)
    for i in range(queries.shape[0]):
        out[i] = index.score_against(queries[i])
    return out


def top_k(scores: np.ndarray, k: int) -> RankedResult:
    """Exact top-k of a score vector under (score desc, id asc).

    Equivalent to sorting all m scores and truncating, but only partitions:
    ties at the k-th value are resolved by taking the lowest ids.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    scores = np.asarray(scores)
    m = scores.shape[0]
    if m == 0:
        return RankedResult()
    kk = min(k, m)
    if kk == m:
        chosen = np.arange(m, dtype=np.int64)
    else:
        part = np.argpartition(scores, m - kk)[m - kk:]
        boundary = scores[part].min()
        above = np.flatnonzero(scores > boundary)
        need = kk - above.shape[0]
        at_boundary = np.flatnonzero(scores == boundary)[:need]
        chosen = np.concatenate([above, at_boundary]).astype(np.int64)
    order = np.lexsort((chosen, -scores[chosen]))
    chosen = chosen[order]
    return RankedResult(ids=chosen, scores=scores[chosen].astype(np.float32))


def rank_subset(ids: np.ndarray, scores: np.ndarray, k: int) -> RankedResult:
    """Order a subset of keyframes by (score desc, id asc) and keep the top k.

    Same comparator as top_k, applied to an arbitrary id set (used when
    re-ranking a candidate pool).
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    ids = np.asarray(ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float32)
    if ids.shape != scores.shape:
        raise ValidationError("ids and scores must have equal length")
    order = np.lexsort((ids, -scores))[: min(k, ids.shape[0])]
    return RankedResult(ids=ids[order], scores=scores[order])


def parallel_retrieve(
    drafts: Sequence[np.ndarray] | np.ndarray,
    index: EmbeddingIndex,
    k: int,
    max_workers: Optional[int] = None,
) -> list[RankedResult]:
    """Top-k retrieval for each draft embedding, fanned out across threads.

    Every draft is scored and selected independently with the canonical
    primitives, so the output is identical whatever the worker count.
    """
    drafts = [np.asarray(d, dtype=np.float32) for d in drafts]
    if not drafts:
        return []
    if max_workers is None:
        max_workers = min(len(drafts), os.cpu_count() or 1)

    def retrieve_one(query: np.ndarray) -> RankedResult:
        return top_k(index.score_against(query), k)

    if max_workers <= 1 or len(drafts) == 1:
        return [retrieve_one(q) for q in drafts]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(retrieve_one, drafts))
