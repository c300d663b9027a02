"""Shared fixtures and helpers."""
from __future__ import annotations

import numpy as np
import pytest

from rapid.keyframes import KeyframeRecord, Manifest


class VectorBackend:
    """Embedding backend stub: a fixed text -> vector mapping.

    Lets tests drive the pipeline with hand-picked or randomly drawn
    vectors instead of the hashing mock.
    """

    def __init__(self, mapping: dict[str, np.ndarray], dimension: int):
        self.mapping = {k: np.asarray(v, dtype=np.float32) for k, v in mapping.items()}
        self.dimension = dimension

    def embed_text_batch(self, texts):
        return [self.mapping[t] for t in texts]


def unit(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float32)
    return vec / np.float32(np.linalg.norm(vec))


def random_unit_rows(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    rows = rng.standard_normal((m, d)).astype(np.float32)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows


def make_manifest(frame_specs) -> Manifest:
    """Manifest from (video_id, frame_index[, ocr_text]) tuples, in order."""
    records = []
    for i, spec in enumerate(frame_specs):
        video_id, frame_index = spec[0], spec[1]
        ocr = spec[2] if len(spec) > 2 else None
        records.append(
            KeyframeRecord(
                keyframe_id=i,
                video_id=video_id,
                scene_index=1,
                frame_index=frame_index,
                image_path=f"{video_id}/{frame_index}.jpg",
                ocr_text=ocr,
            )
        )
    return Manifest(records)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
