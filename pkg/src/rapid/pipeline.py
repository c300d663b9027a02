"""End-to-end retrieval: draft embeddings fan out, candidates pool, the
original query re-ranks.

A search embeds the effective drafts (the request's drafts, plus the
original query unless disabled), retrieves top k_per_draft keyframes per
draft in parallel, flattens the results into a deduplicated candidate
pool, optionally filters by OCR text, then scores the pool against the
original query and truncates to final_k.

Re-rank scores are gathered from the canonical full score row of the
original query rather than re-dotting the pooled rows: one extra blocked
matrix-vector pass buys bit-identical agreement with direct retrieval,
which the identity contract (drafts = [Q0], k_per_draft = final_k implies
output == direct top-final_k) requires.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .embedding import EmbeddingBackend, embed_texts
from .errors import ValidationError
from .index import EmbeddingIndex, RankedResult, parallel_retrieve, rank_subset
from .keyframes import Manifest


@dataclass(frozen=True)
class SearchRequest:
    original_query: str
    drafts: tuple[str, ...] = ()
    k_per_draft: int = 600
    final_k: int = 600
    ocr_filter: Optional[str] = None
    include_original_as_draft: bool = True

    def validate(self) -> None:
        if not self.original_query or not self.original_query.strip():
            raise ValidationError("original_query must be non-empty")
        if self.k_per_draft < 1:
            raise ValidationError(f"k_per_draft must be >= 1, got {self.k_per_draft}")
        if self.final_k < 1:
            raise ValidationError(f"final_k must be >= 1, got {self.final_k}")
        if self.ocr_filter is not None and not self.ocr_filter.strip():
            raise ValidationError("ocr_filter must be non-empty when present")
        if any(not d.strip() for d in self.drafts):
            raise ValidationError("drafts must be non-empty strings")


@dataclass(frozen=True)
class CandidatePool:
    """Deduplicated keyframe ids pooled from all drafts; id order is ascending."""

    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.ids.shape[0])


@dataclass(frozen=True)
class NeighborWindow:
    """Keyframes around a center frame within one video, frame-index order."""

    center: int
    radius: int
    frames: tuple[int, ...]


def flatten_candidates(results: Sequence[RankedResult]) -> CandidatePool:
    if not results:
        return CandidatePool()
    ids = np.unique(np.concatenate([r.ids for r in results])) if results else np.empty(0)
    return CandidatePool(ids=ids.astype(np.int64))


def normalize_ocr_text(text: str) -> str:
    """NFC-normalize, casefold, and collapse whitespace for OCR matching."""
    return " ".join(unicodedata.normalize("NFC", text).casefold().split())


def apply_ocr_filter(pool: CandidatePool, needle: str, manifest: Manifest) -> CandidatePool:
    """Keep pool frames whose OCR text contains the needle.

    Matching is case-insensitive, Unicode-normalized, whitespace-collapsed
    substring containment; frames without OCR text are dropped.
    """
    if not needle or not needle.strip():
        raise ValidationError("OCR filter needle must be non-empty")
    target = normalize_ocr_text(needle)
    kept = [
        kid
        for kid in pool.ids.tolist()
        if (text := manifest.get(int(kid)).ocr_text) is not None
        and target in normalize_ocr_text(text)
    ]
    return CandidatePool(ids=np.asarray(kept, dtype=np.int64))


def neighbor_window(center: int, radius: int, manifest: Manifest) -> NeighborWindow:
    """Up to radius keyframes either side of center in its video, clamped."""
    if radius < 0:
        raise ValidationError(f"neighbor radius must be >= 0, got {radius}")
    record = manifest.get(center)
    frames = manifest.video_frames(record.video_id)
    pos = next(i for i, r in enumerate(frames) if r.keyframe_id == center)
    lo = max(0, pos - radius)
    hi = min(len(frames), pos + radius + 1)
    return NeighborWindow(
        center=center,
        radius=radius,
        frames=tuple(r.keyframe_id for r in frames[lo:hi]),
    )


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


class SearchEngine:
    """Reentrant search over an immutable index + manifest pair."""

    def __init__(self, index: EmbeddingIndex, manifest: Manifest, backend: EmbeddingBackend):
        if index.size != len(manifest):
            raise ValidationError(
                f"index has {index.size} rows but manifest has {len(manifest)} keyframes"
            )
        self.index = index
        self.manifest = manifest
        self.backend = backend

    def effective_drafts(self, request: SearchRequest) -> list[str]:
        """Request drafts plus the original query when configured or required."""
        drafts = list(request.drafts)
        if request.include_original_as_draft or not drafts:
            drafts.append(request.original_query)
        seen: set[str] = set()
        unique = []
        for d in drafts:
            key = _normalize_ws(d)
            if key not in seen:
                seen.add(key)
                unique.append(d)
        return unique

    def search(self, request: SearchRequest, max_workers: Optional[int] = None) -> RankedResult:
        request.validate()
        if self.index.size == 0:
            return RankedResult()
        drafts = self.effective_drafts(request)

        texts = [request.original_query] + drafts
        vectors = embed_texts(texts, self.backend)
        q0_vec, draft_vecs = vectors[0], vectors[1:]

        per_draft = parallel_retrieve(draft_vecs, self.index, request.k_per_draft, max_workers)
        pool = flatten_candidates(per_draft)
        if request.ocr_filter is not None:
            pool = apply_ocr_filter(pool, request.ocr_filter, self.manifest)
        if len(pool) == 0:
            return RankedResult()

        q0_scores = self.index.score_against(q0_vec)
        return rank_subset(pool.ids, q0_scores[pool.ids], request.final_k)

    def neighbor_window(self, center: int, radius: int) -> NeighborWindow:
        return neighbor_window(center, radius, self.manifest)
